"""Loaders for problem, DAC design, target, embedding, graph and program files."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import networkx as nx
import numpy as np

from app.clients.file_client import FileClient
from app.exceptions.custom_exceptions import DataValidationError, QuantizationError, TopologyError
from app.services.chimera_service import (
    ChimeraSpec,
    Coupler,
    HardwareGraph,
    build_chimera,
    qubit_from_index,
    qubit_linear_index,
)
from app.services.dac_service import (
    DacDesign,
    DacState,
    InductanceMatrix,
    Stage,
    StageChainDesign,
    derive_params,
    derive_stage_chain,
)
from app.services.embedding_service import Chain, Embedding, pair
from app.services.fabric_service import EventKind, Fabric, ProgramEvent, ProgramSequence, build_fabric
from app.services.ising_service import IsingProblem
from app.services.pulse_source_service import Line
from app.utils.constants import MAX_NUMERATOR, MICRO, PICO

DESIGN_FIELDS = ("l_lsd_ph", "l_msd_ph", "l_out_ph", "m_lsd_msd_ph", "m_lsd_out_ph", "m_msd_out_ph", "i_in_ua")


def _require(data: Any, key: str, where: str) -> Any:
    if not isinstance(data, dict) or key not in data:
        raise DataValidationError(f"{where}: missing field '{key}'")
    return data[key]


def _int_field(value: Any, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise DataValidationError(f"{name} must be an integer, got {value!r}")
    return value


def _number_field(value: Any, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise DataValidationError(f"{name} must be a number, got {value!r}")
    return float(value)


def _numerator(value: Any, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or abs(value) > MAX_NUMERATOR:
        raise QuantizationError(
            f"{name} = {value!r} is not a quantized numerator in [-{MAX_NUMERATOR}, {MAX_NUMERATOR}] "
            "(weights are numerator/8); use quantize() to map real values"
        )
    return value


def spec_from_dict(data: Any, where: str = "spec") -> ChimeraSpec:
    return ChimeraSpec(
        n_rows=_int_field(_require(data, "n_rows", where), f"{where}.n_rows"),
        n_cols=_int_field(_require(data, "n_cols", where), f"{where}.n_cols"),
        m=_int_field(data.get("m", 4), f"{where}.m"),
    )


def problem_from_dict(data: Any) -> tuple[IsingProblem, ChimeraSpec | None]:
    """Validate a problem document and build the problem with its hardware spec (None if complete)."""
    raw_nodes = _require(data, "nodes", "problem")
    if not isinstance(raw_nodes, list):
        raise DataValidationError("problem: 'nodes' must be a list")
    nodes = [_int_field(n, "problem.nodes[]") for n in raw_nodes]
    topology = data.get("topology", "complete")

    if topology == "complete":
        spec = None
        graph = nx.complete_graph(nodes)
        by_key = {str(n): n for n in nodes}
    elif isinstance(topology, dict) and "chimera" in topology:
        spec = spec_from_dict(topology["chimera"], "problem.topology.chimera")
        qubits = {n: qubit_from_index(spec, n) for n in nodes}
        graph = build_chimera(spec).to_networkx().subgraph(qubits.values()).copy()
        by_key = {str(n): q for n, q in qubits.items()}
    else:
        raise DataValidationError(f"problem: unknown topology {topology!r}")

    h = {}
    for key, value in (data.get("h") or {}).items():
        if key not in by_key:
            raise TopologyError(f"h['{key}'] names a node that is not in 'nodes'")
        h[by_key[key]] = _numerator(value, f"h['{key}']")

    J = {}
    for key, value in (data.get("J") or {}).items():
        parts = str(key).split(",")
        if len(parts) != 2 or parts[0].strip() not in by_key or parts[1].strip() not in by_key:
            raise TopologyError(f"J['{key}'] must be 'u,v' with both nodes listed in 'nodes'")
        u, v = by_key[parts[0].strip()], by_key[parts[1].strip()]
        if not graph.has_edge(u, v):
            listing = ", ".join(sorted(k for k, q in by_key.items() if graph.has_edge(u, q)))
            raise TopologyError(f"J['{key}'] is not an edge of the problem graph; neighbours of {parts[0].strip()}: [{listing}]")
        J[(u, v)] = _numerator(value, f"J['{key}']")

    return IsingProblem(graph=graph, h=h, J=J), spec


def design_from_dict(data: Any) -> DacDesign:
    values = {name: _number_field(_require(data, name, "design"), f"design.{name}") for name in DESIGN_FIELDS}
    matrix = InductanceMatrix.from_ph(
        values["l_lsd_ph"],
        values["l_msd_ph"],
        values["l_out_ph"],
        values["m_lsd_msd_ph"],
        values["m_lsd_out_ph"],
        values["m_msd_out_ph"],
    )
    return derive_params(matrix, values["i_in_ua"] * MICRO, _int_field(data.get("derating", 0), "design.derating"))


def chain_from_dict(data: Any) -> StageChainDesign:
    """Stage-chain file: {"matrix_ph": [[...]], "i_in_ua", "derating"?}, ports finest first, OUT last."""
    rows = _require(data, "matrix_ph", "chain")
    if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
        raise DataValidationError("chain.matrix_ph must be a list of rows")
    matrix = np.array(
        [[_number_field(v, "chain.matrix_ph[][]") for v in row] for row in rows],
        dtype=float,
    )
    i_in = _number_field(_require(data, "i_in_ua", "chain"), "chain.i_in_ua") * MICRO
    return derive_stage_chain(matrix * PICO, i_in, _int_field(data.get("derating", 0), "chain.derating"))


def _coupler(graph: HardwareGraph, spec: ChimeraSpec, pair_: Any, where: str) -> Coupler:
    if not isinstance(pair_, list) or len(pair_) != 2:
        raise DataValidationError(f"{where}: coupler must be [a, b], got {pair_!r}")
    a, b = (qubit_from_index(spec, _int_field(i, where)) for i in pair_)
    coupler = graph.coupler_between(a, b)
    if coupler is None:
        raise TopologyError(f"{where}: {a}-{b} is not a coupler of the hardware graph")
    return coupler


def embedding_from_dict(data: Any) -> tuple[Embedding, ChimeraSpec]:
    spec = spec_from_dict(_require(data, "spec", "embedding"), "embedding.spec")
    graph = build_chimera(spec)
    chains_raw = _require(data, "chains", "embedding")
    intra_raw = data.get("intra_couplers") or {}
    chains = []
    for key, indices in sorted(chains_raw.items(), key=lambda kv: int(kv[0])):
        logical = int(key)
        physical = tuple(qubit_from_index(spec, _int_field(i, f"embedding.chains['{key}']")) for i in indices)
        links = tuple(_coupler(graph, spec, p, f"embedding.intra_couplers['{key}']") for p in intra_raw.get(key, []))
        chains.append(Chain(logical_id=logical, physical=physical, intra_couplers=links))

    inter = {}
    for key, pairs in (data.get("inter_couplers") or {}).items():
        i, j = (int(x) for x in str(key).split(","))
        inter[pair(i, j)] = frozenset(_coupler(graph, spec, p, f"embedding.inter_couplers['{key}']") for p in pairs)
    return Embedding(chains=tuple(chains), inter_couplers=inter), spec


def graph_from_dict(data: Any) -> HardwareGraph:
    """Rebuild a Chimera graph and check the listed edges against it."""
    spec = spec_from_dict(_require(data, "spec", "graph"), "graph.spec")
    graph = build_chimera(spec)
    listed = {
        tuple(sorted((_int_field(e["source"], "graph.edges[].source"), _int_field(e["target"], "graph.edges[].target"))))
        for e in _require(data, "edges", "graph")
    }
    expected = {tuple(sorted((qubit_linear_index(spec, c.a), qubit_linear_index(spec, c.b)))) for c in graph.couplers}
    if listed != expected:
        raise DataValidationError(
            f"graph: edge list does not match a {spec.n_rows}x{spec.n_cols} Chimera graph "
            f"({len(listed - expected)} unexpected, {len(expected - listed)} missing)"
        )
    return graph


def sequence_from_dict(data: Any) -> ProgramSequence:
    events = []
    for i, raw in enumerate(_require(data, "events", "sequence")):
        where = f"sequence.events[{i}]"
        try:
            kind = EventKind(_require(raw, "kind", where))
            polarity = Stage(raw.get("polarity", Stage.LSD.value))
            lines = frozenset(Line(v) for v in raw.get("active_lines", [line.value for line in Line]))
        except ValueError as e:
            raise DataValidationError(f"{where}: {e}") from e
        events.append(
            ProgramEvent(
                kind=kind,
                pwr_domain=_int_field(raw.get("pwr_domain", 0), f"{where}.pwr_domain"),
                pwr_sign=_int_field(raw.get("pwr_sign", 1), f"{where}.pwr_sign"),
                addr_line=_int_field(raw.get("addr_line", 0), f"{where}.addr_line"),
                trig_line=_int_field(raw.get("trig_line", 0), f"{where}.trig_line"),
                polarity=polarity,
                pulse_count=_int_field(raw.get("pulse_count", 0), f"{where}.pulse_count"),
                active_lines=lines,
            )
        )
    return ProgramSequence(tuple(events))


@dataclass
class TargetFile:
    fabric: Fabric
    targets: dict
    design: DacDesign | None = None


def targets_from_dict(data: Any) -> TargetFile:
    layout = _require(data, "fabric", "targets")
    fabric = build_fabric(
        _int_field(_require(layout, "n", "targets.fabric"), "targets.fabric.n"),
        _int_field(layout.get("m", 4), "targets.fabric.m"),
    )
    design = design_from_dict(data["design"]) if "design" in data else None
    targets = {}
    for i, raw in enumerate(_require(data, "targets", "targets")):
        where = f"targets.targets[{i}]"
        coords = [
            _int_field(_require(raw, k, where), f"{where}.{k}")
            for k in ("tile_row", "tile_col", "plaq_row", "plaq_col", "position")
        ]
        slot = fabric.slot_at(*coords)
        targets[slot] = DacState(
            m_lsd=_int_field(raw.get("m_lsd", 0), f"{where}.m_lsd"),
            m_msd=_int_field(raw.get("m_msd", 0), f"{where}.m_msd"),
        )
    return TargetFile(fabric=fabric, targets=targets, design=design)


@dataclass
class ArtifactClient:
    """Reads domain artifacts from disk."""

    files: FileClient = field(default_factory=FileClient)

    def load_problem(self, path: str | Path) -> IsingProblem:
        return self.load_problem_with_topology(path)[0]

    def load_problem_with_topology(self, path: str | Path) -> tuple[IsingProblem, ChimeraSpec | None]:
        return problem_from_dict(self.files.get_json(path))

    def load_design(self, path: str | Path) -> DacDesign:
        return design_from_dict(self.files.get_json(path))

    def load_chain(self, path: str | Path) -> StageChainDesign:
        return chain_from_dict(self.files.get_json(path))

    def load_embedding(self, path: str | Path) -> tuple[Embedding, ChimeraSpec]:
        return embedding_from_dict(self.files.get_json(path))

    def load_graph(self, path: str | Path) -> HardwareGraph:
        return graph_from_dict(self.files.get_json(path))

    def load_sequence(self, path: str | Path) -> ProgramSequence:
        return sequence_from_dict(self.files.get_json(path))

    def load_targets(self, path: str | Path) -> TargetFile:
        return targets_from_dict(self.files.get_json(path))
