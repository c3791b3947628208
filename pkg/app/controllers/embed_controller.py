"""`embed`: clique embedding of K_k into C_N with verification."""
from __future__ import annotations

import click

from app.config.run_config import RunConfig
from app.controllers.base_controller import CheckFailed, current_settings, emit, guarded
from app.services.chimera_service import ChimeraSpec, build_chimera
from app.services.embedding_service import embed_complete, verify_embedding
from app.services.export_service import embedding_to_dict, verification_to_dict


@click.command("embed")
@click.option("--k", type=int, required=True, help="Size of the complete graph to embed.")
@click.option("--n", type=int, default=None, help="Tiles per side (default 8).")
@click.option("--m", type=int, default=None, help="Shore size (default 4).")
@click.option("--out", type=click.Path(file_okay=False), default=None)
@click.option("--format", "fmt", type=click.Choice(["json", "dot", "csv"]), default="json")
@guarded
def embed(k, n, m, out, fmt):
    """Embed K_k and verify the minor."""
    config = RunConfig.from_options(current_settings(), "embed", k=k, n=n, m=m, out=out, fmt=fmt)
    spec = ChimeraSpec.square(config.n, config.m)
    graph = build_chimera(spec)
    embedding = embed_complete(config.k, spec, graph)
    report = verify_embedding(embedding, graph, config.k)

    payload = embedding_to_dict(embedding, spec)
    payload["verification"] = verification_to_dict(report)
    emit(config, f"embedding_k{config.k}_c{config.n}.json", payload)
    if not report.passed:
        raise CheckFailed(f"Embedding failed verification: {'; '.join(report.issues)}")
