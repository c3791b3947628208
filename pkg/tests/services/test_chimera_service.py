from itertools import product

import networkx as nx
import pytest

from app.exceptions.custom_exceptions import ConfigurationError, QubitRangeError, UnknownQubitError
from app.services.chimera_service import (
    ChimeraSpec,
    Coupler,
    CouplerKind,
    Orientation,
    QubitId,
    build_chimera,
    iter_qubits,
    kuratowski_witness,
    neighbors,
    qubit_from_index,
    qubit_linear_index,
)

H, V = Orientation.HORIZONTAL, Orientation.VERTICAL


@pytest.fixture
def c1():
    return build_chimera(ChimeraSpec.square(1))


@pytest.fixture
def c8():
    return build_chimera(ChimeraSpec.square(8))


def test_unit_tile_is_k44(c1):
    assert len(c1.qubits) == 8
    assert len(c1.couplers) == 16
    assert not c1.external_couplers
    assert nx.is_isomorphic(c1.to_networkx(), nx.complete_bipartite_graph(4, 4))


def test_reference_processor_counts(c8):
    assert len(c8.qubits) == 512
    assert len(c8.couplers) == 1472
    assert len(c8.internal_couplers) == 1024
    assert len(c8.external_couplers) == 448


def test_two_by_two_counts():
    graph = build_chimera(ChimeraSpec.square(2))

    assert len(graph.qubits) == 32
    assert len(graph.internal_couplers) == 64
    assert len(graph.external_couplers) == 16


@pytest.mark.parametrize("n_rows, n_cols, m", list(product(range(1, 13), range(1, 13), range(1, 7))))
def test_counts_follow_closed_forms(n_rows, n_cols, m):
    spec = ChimeraSpec(n_rows, n_cols, m)
    graph = build_chimera(spec)

    assert len(graph.qubits) == spec.num_qubits == 2 * m * n_rows * n_cols
    assert len(graph.internal_couplers) == spec.num_internal == m * m * n_rows * n_cols
    assert len(graph.external_couplers) == spec.num_external == m * (n_rows * (n_cols - 1) + n_cols * (n_rows - 1))


def test_reference_degrees_are_five_or_six(c8):
    degrees = {len(neighbors(c8, q)) for q in c8.qubits}

    assert degrees == {5, 6}
    assert all(len(neighbors(c8, q)) == 6 for q in c8.qubits if 0 < q.tile_row < 7 and 0 < q.tile_col < 7)


def test_horizontal_external_neighbour_is_to_the_right(c8):
    q = QubitId(3, 3, H, 2)

    assert neighbors(c8, q) == frozenset(
        {QubitId(3, 3, V, j) for j in range(4)} | {QubitId(3, 2, H, 2), QubitId(3, 4, H, 2)}
    )


def test_corner_vertical_qubit_has_one_external_neighbour(c8):
    external = [n for n in neighbors(c8, QubitId(0, 0, V, 1)) if n.orientation is V]

    assert external == [QubitId(1, 0, V, 1)]


def test_linear_index_is_a_bijection_in_iteration_order():
    spec = ChimeraSpec(3, 2, 4)
    indices = [qubit_linear_index(spec, q) for q in iter_qubits(spec)]

    assert indices == list(range(spec.num_qubits))
    assert all(qubit_from_index(spec, i) == q for i, q in enumerate(iter_qubits(spec)))


def test_linear_index_layout():
    spec = ChimeraSpec.square(2)

    assert qubit_linear_index(spec, QubitId(0, 0, H, 0)) == 0
    assert qubit_linear_index(spec, QubitId(0, 0, V, 0)) == 4
    assert qubit_linear_index(spec, QubitId(0, 1, H, 3)) == 11
    assert qubit_linear_index(spec, QubitId(1, 1, V, 3)) == 31


def test_qubit_order_matches_linear_index():
    spec = ChimeraSpec.square(2)
    qubits = list(iter_qubits(spec))

    assert sorted(reversed(qubits)) == qubits


def test_out_of_range_qubit_is_rejected():
    spec = ChimeraSpec.square(2)

    with pytest.raises(QubitRangeError):
        qubit_linear_index(spec, QubitId(2, 0, H, 0))
    with pytest.raises(QubitRangeError):
        qubit_linear_index(spec, QubitId(0, 0, H, 4))
    with pytest.raises(QubitRangeError):
        qubit_from_index(spec, 32)


def test_out_of_range_qubit_is_an_index_error():
    with pytest.raises(IndexError):
        qubit_from_index(ChimeraSpec.square(1), -1)


def test_neighbors_of_unknown_qubit(c1):
    with pytest.raises(UnknownQubitError):
        neighbors(c1, QubitId(1, 0, H, 0))


@pytest.mark.parametrize("kwargs", [{"n_rows": 0, "n_cols": 1}, {"n_rows": 1, "n_cols": 1, "m": 0}, {"n_rows": 1.5, "n_cols": 1}])
def test_spec_rejects_bad_sizes(kwargs):
    with pytest.raises(ConfigurationError):
        ChimeraSpec(**kwargs)


def test_couplers_are_canonical_and_unique(c8):
    for c in c8.couplers:
        assert c.a < c.b
    a, b = QubitId(0, 0, V, 1), QubitId(0, 0, H, 2)
    assert Coupler(a, b, CouplerKind.INTERNAL) == Coupler(b, a, CouplerKind.INTERNAL)
    assert c8.coupler_between(a, b).kind is CouplerKind.INTERNAL
    assert c8.coupler_between(QubitId(0, 0, H, 0), QubitId(0, 0, H, 1)) is None


def test_graph_is_connected_and_bipartite(c8):
    g = c8.to_networkx()

    assert nx.is_connected(g)
    assert nx.is_bipartite(g)


def test_frozen_networkx_view(c1):
    with pytest.raises(nx.NetworkXError):
        c1.to_networkx().add_edge(QubitId(0, 0, H, 0), QubitId(0, 0, H, 1))


def test_unit_tile_is_not_planar(c1):
    witness = kuratowski_witness(c1)

    assert witness is not None
    assert not nx.check_planarity(witness)[0]
    assert set(witness.nodes) <= set(c1.qubits)


def test_planar_graph_has_no_witness():
    assert kuratowski_witness(nx.cycle_graph(6)) is None
