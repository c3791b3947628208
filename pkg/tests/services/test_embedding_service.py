from dataclasses import replace

import networkx as nx
import pytest

from app.exceptions.custom_exceptions import CapacityError, ConfigurationError, UnknownEdgeError
from app.services.chimera_service import ChimeraSpec, Orientation, QubitId, build_chimera
from app.services.embedding_service import (
    Chain,
    Embedding,
    contract_chains,
    contract_edges,
    diagonal_couplers,
    embed_complete,
    is_complete_bipartite,
    is_complete_graph,
    pair,
    tile_subgraph,
    verify_embedding,
)

H, V = Orientation.HORIZONTAL, Orientation.VERTICAL


@pytest.fixture
def c4():
    spec = ChimeraSpec.square(4)
    return spec, build_chimera(spec)


def test_k16_in_c4_uses_80_qubits_in_chains_of_five(c4):
    spec, graph = c4

    embedding = embed_complete(16, spec, graph)
    report = verify_embedding(embedding, graph, 16)

    assert report.passed, report.issues
    assert embedding.qubit_count == 80
    assert set(report.chain_lengths.values()) == {5}


@pytest.mark.parametrize("n", range(1, 9))
def test_full_clique_fits_every_grid(n):
    spec = ChimeraSpec.square(n)
    graph = build_chimera(spec)

    embedding = embed_complete(4 * n, spec, graph)

    assert verify_embedding(embedding, graph, 4 * n).passed
    assert embedding.qubit_count == 4 * n * (n + 1)


def test_k4_in_unit_tile_pairs_each_vertical_with_its_horizontal():
    spec = ChimeraSpec.square(1)

    embedding = embed_complete(4, spec)

    assert [c.physical for c in embedding.chains] == [(QubitId(0, 0, V, s), QubitId(0, 0, H, s)) for s in range(4)]
    assert embedding.qubit_count == 8


def test_smaller_clique_uses_fewer_chains(c4):
    spec, graph = c4

    embedding = embed_complete(6, spec, graph)

    assert embedding.logical_ids == tuple(range(6))
    assert verify_embedding(embedding, graph, 6).passed


def test_every_pair_has_inter_couplers(c4):
    spec, graph = c4
    embedding = embed_complete(16, spec, graph)

    assert len(embedding.inter_couplers) == 16 * 15 // 2
    assert all(embedding.inter_couplers[pair(i, j)] for i in range(16) for j in range(i + 1, 16))


def test_chains_contract_to_the_complete_graph(c4):
    spec, graph = c4
    embedding = embed_complete(16, spec, graph)

    minor = contract_chains(graph, embedding)
    chain_nodes = minor.subgraph([n for n in minor.nodes if len(n) == 5])

    assert is_complete_graph(chain_nodes, 16)


@pytest.mark.parametrize("k", [0, 17])
def test_clique_beyond_capacity_is_rejected(c4, k):
    spec, graph = c4

    with pytest.raises(CapacityError):
        embed_complete(k, spec, graph)


def test_non_square_grid_is_rejected():
    with pytest.raises(ConfigurationError):
        embed_complete(4, ChimeraSpec(1, 2))


def test_verify_reports_broken_chain(c4):
    spec, graph = c4
    embedding = embed_complete(8, spec, graph)
    first = embedding.chains[0]
    broken = replace(first, intra_couplers=first.intra_couplers[1:])
    tampered = Embedding(chains=(broken,) + embedding.chains[1:], inter_couplers=embedding.inter_couplers)

    report = verify_embedding(tampered, graph, 8)

    assert not report.passed
    assert any("disconnected chain 0" in issue for issue in report.issues)


def test_verify_reports_overlap_and_missing_pairs(c4):
    spec, graph = c4
    embedding = embed_complete(4, spec, graph)
    clash = Chain(logical_id=4, physical=(embedding.chains[0].physical[0],))
    tampered = Embedding(chains=embedding.chains + (clash,))

    report = verify_embedding(tampered, graph, 5)

    assert not report.passed
    assert any("overlap" in issue for issue in report.issues)


def test_verify_flags_unknown_qubit():
    spec = ChimeraSpec.square(1)
    graph = build_chimera(spec)
    outside = Chain(logical_id=0, physical=(QubitId(3, 3, H, 0),))

    report = verify_embedding(Embedding(chains=(outside,)), graph, 1)

    assert not report.passed
    assert "unknown qubit" in report.issues[0]


def test_contracting_diagonal_of_a_tile_gives_k4():
    graph = build_chimera(ChimeraSpec.square(1))

    minor = contract_edges(graph, diagonal_couplers(graph, 0, 0))

    assert is_complete_graph(minor, 4)
    assert nx.is_isomorphic(minor, nx.complete_graph(4))


def test_contracting_grid_couplers_of_two_by_two_gives_k88():
    graph = build_chimera(ChimeraSpec.square(2))

    minor = contract_edges(graph, graph.external_couplers)

    assert is_complete_bipartite(minor, 8)
    assert nx.is_isomorphic(minor, nx.complete_bipartite_graph(8, 8))


def test_two_k4_tiles_joined_through_a_k44_give_k8():
    graph = build_chimera(ChimeraSpec.square(2))
    strip = tile_subgraph(graph, [(0, 0), (0, 1), (1, 1)])
    pairs = diagonal_couplers(graph, 0, 0) + diagonal_couplers(graph, 1, 1)
    for s in range(4):
        pairs.append((QubitId(0, 0, H, s), QubitId(0, 1, H, s)))
        pairs.append((QubitId(0, 1, V, s), QubitId(1, 1, V, s)))

    minor = contract_edges(strip, pairs)

    assert is_complete_graph(minor, 8)


def test_contract_edges_rejects_missing_edge():
    graph = build_chimera(ChimeraSpec.square(1))

    with pytest.raises(UnknownEdgeError):
        contract_edges(graph, [(QubitId(0, 0, H, 0), QubitId(0, 0, H, 1))])


def test_contract_edges_labels_merged_nodes_by_members():
    g = nx.path_graph(3)

    minor = contract_edges(g, [(0, 1)])

    assert set(minor.nodes) == {frozenset({0, 1}), frozenset({2})}
    assert minor.number_of_edges() == 1


def test_complete_certificates_reject_near_misses():
    almost = nx.complete_graph(5)
    almost.remove_edge(0, 1)

    assert not is_complete_graph(almost, 5)
    assert not is_complete_bipartite(nx.complete_bipartite_graph(3, 5), 4)


def test_tile_subgraph_keeps_only_requested_tiles():
    graph = build_chimera(ChimeraSpec.square(2))

    sub = tile_subgraph(graph, [(0, 0), (0, 1)])

    assert sub.number_of_nodes() == 16
    assert sub.number_of_edges() == 2 * 16 + 4
