"""Chimera hardware graphs: K_{m,m} unit tiles on an n_rows x n_cols grid.

Linear qubit index order is tile-row-major, then tile column, then
orientation (horizontal before vertical), then shore index:

    index = ((tile_row * n_cols + tile_col) * 2 + orientation) * m + shore_index
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from itertools import product
from typing import Iterator, Mapping

import networkx as nx

from app.exceptions.custom_exceptions import ConfigurationError, QubitRangeError, UnknownQubitError
from app.utils.logger import get_logger

log = get_logger(__name__)


class Orientation(str, Enum):
    """Side of a tile's bipartition. Values sort horizontal first."""

    HORIZONTAL = "H"
    VERTICAL = "V"

    @property
    def offset(self) -> int:
        return 0 if self is Orientation.HORIZONTAL else 1


class CouplerKind(str, Enum):
    INTERNAL = "internal"
    EXTERNAL = "external"


@dataclass(frozen=True)
class ChimeraSpec:
    """Grid size in tiles and shore size m (qubits per orientation per tile)."""

    n_rows: int
    n_cols: int
    m: int = 4

    def __post_init__(self) -> None:
        for name in ("n_rows", "n_cols", "m"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 1:
                raise ConfigurationError(f"ChimeraSpec.{name} must be a positive integer, got {value!r}")

    @classmethod
    def square(cls, n: int, m: int = 4) -> "ChimeraSpec":
        return cls(n_rows=n, n_cols=n, m=m)

    @property
    def num_qubits(self) -> int:
        return 2 * self.m * self.n_rows * self.n_cols

    @property
    def num_internal(self) -> int:
        return self.m * self.m * self.n_rows * self.n_cols

    @property
    def num_external(self) -> int:
        return self.m * (self.n_rows * (self.n_cols - 1) + self.n_cols * (self.n_rows - 1))

    @property
    def is_square(self) -> bool:
        return self.n_rows == self.n_cols


@dataclass(frozen=True, order=True)
class QubitId:
    """Tile coordinates, orientation and shore index of one qubit.

    Field order makes the natural ordering agree with the linear index.
    """

    tile_row: int
    tile_col: int
    orientation: Orientation
    shore_index: int

    def __str__(self) -> str:
        return f"({self.tile_row},{self.tile_col},{self.orientation.value}{self.shore_index})"


@dataclass(frozen=True)
class Coupler:
    """Unordered qubit pair; endpoints are stored in ascending order."""

    a: QubitId
    b: QubitId
    kind: CouplerKind = field(compare=False)

    def __post_init__(self) -> None:
        if self.b < self.a:
            first, second = self.b, self.a
            object.__setattr__(self, "a", first)
            object.__setattr__(self, "b", second)

    @property
    def endpoints(self) -> tuple[QubitId, QubitId]:
        return self.a, self.b

    def other(self, qubit: QubitId) -> QubitId:
        return self.b if qubit == self.a else self.a

    def __str__(self) -> str:
        return f"{self.a}-{self.b}"


def _check_coordinates(spec: ChimeraSpec, qubit: QubitId) -> None:
    if not (0 <= qubit.tile_row < spec.n_rows and 0 <= qubit.tile_col < spec.n_cols):
        raise QubitRangeError(f"Tile ({qubit.tile_row},{qubit.tile_col}) outside {spec.n_rows}x{spec.n_cols} grid")
    if not 0 <= qubit.shore_index < spec.m:
        raise QubitRangeError(f"Shore index {qubit.shore_index} outside [0, {spec.m})")


def qubit_linear_index(spec: ChimeraSpec, qubit: QubitId) -> int:
    """Canonical linear index of a qubit."""
    _check_coordinates(spec, qubit)
    tile = qubit.tile_row * spec.n_cols + qubit.tile_col
    return (tile * 2 + qubit.orientation.offset) * spec.m + qubit.shore_index


def qubit_from_index(spec: ChimeraSpec, index: int) -> QubitId:
    """Inverse of qubit_linear_index."""
    if not 0 <= index < spec.num_qubits:
        raise QubitRangeError(f"Linear index {index} outside [0, {spec.num_qubits})")
    rest, shore = divmod(index, spec.m)
    tile, side = divmod(rest, 2)
    row, col = divmod(tile, spec.n_cols)
    orientation = Orientation.HORIZONTAL if side == 0 else Orientation.VERTICAL
    return QubitId(row, col, orientation, shore)


def iter_qubits(spec: ChimeraSpec) -> Iterator[QubitId]:
    """Yield qubits in linear-index order."""
    for row, col, orientation, shore in product(
        range(spec.n_rows), range(spec.n_cols), (Orientation.HORIZONTAL, Orientation.VERTICAL), range(spec.m)
    ):
        yield QubitId(row, col, orientation, shore)


def _iter_couplers(spec: ChimeraSpec) -> Iterator[Coupler]:
    h, v = Orientation.HORIZONTAL, Orientation.VERTICAL
    for row, col in product(range(spec.n_rows), range(spec.n_cols)):
        for i, j in product(range(spec.m), repeat=2):
            yield Coupler(QubitId(row, col, h, i), QubitId(row, col, v, j), CouplerKind.INTERNAL)
        for s in range(spec.m):
            # Horizontal qubits couple to the tile on the right, vertical ones to the tile below.
            if col + 1 < spec.n_cols:
                yield Coupler(QubitId(row, col, h, s), QubitId(row, col + 1, h, s), CouplerKind.EXTERNAL)
            if row + 1 < spec.n_rows:
                yield Coupler(QubitId(row, col, v, s), QubitId(row + 1, col, v, s), CouplerKind.EXTERNAL)


@dataclass(frozen=True)
class HardwareGraph:
    """Immutable Chimera qubit/coupler graph."""

    spec: ChimeraSpec
    qubits: tuple[QubitId, ...]
    couplers: frozenset[Coupler]
    adjacency: Mapping[QubitId, frozenset[QubitId]]
    _graph: nx.Graph = field(repr=False, compare=False)

    @property
    def internal_couplers(self) -> frozenset[Coupler]:
        return frozenset(c for c in self.couplers if c.kind is CouplerKind.INTERNAL)

    @property
    def external_couplers(self) -> frozenset[Coupler]:
        return frozenset(c for c in self.couplers if c.kind is CouplerKind.EXTERNAL)

    def __contains__(self, qubit: object) -> bool:
        return qubit in self.adjacency

    def coupler_between(self, a: QubitId, b: QubitId) -> Coupler | None:
        """Coupler joining two qubits, or None."""
        if a not in self.adjacency or b not in self.adjacency[a]:
            return None
        return Coupler(a, b, self._graph.edges[a, b]["kind"])

    def to_networkx(self) -> nx.Graph:
        """Frozen networkx view; nodes are QubitId, edges carry `kind`."""
        return self._graph


def build_chimera(spec: ChimeraSpec) -> HardwareGraph:
    """Construct C_{n_rows x n_cols} with K_{m,m} tiles and grid couplers."""
    graph = nx.Graph()
    qubits = tuple(iter_qubits(spec))
    graph.add_nodes_from(qubits)
    couplers = frozenset(_iter_couplers(spec))
    for coupler in couplers:
        graph.add_edge(coupler.a, coupler.b, kind=coupler.kind)

    adjacency = {q: frozenset(graph.adj[q]) for q in qubits}
    log.info(
        "Built Chimera %sx%s (m=%s): %s qubits, %s couplers",
        spec.n_rows, spec.n_cols, spec.m, len(qubits), len(couplers),
    )
    return HardwareGraph(
        spec=spec,
        qubits=qubits,
        couplers=couplers,
        adjacency=adjacency,
        _graph=nx.freeze(graph),
    )


def neighbors(graph: HardwareGraph, qubit: QubitId) -> frozenset[QubitId]:
    """Qubits coupled to `qubit`."""
    try:
        return graph.adjacency[qubit]
    except KeyError:
        raise UnknownQubitError(f"Qubit {qubit} is not in the {graph.spec.n_rows}x{graph.spec.n_cols} graph") from None


def kuratowski_witness(graph: HardwareGraph | nx.Graph) -> nx.Graph | None:
    """Kuratowski subgraph proving non-planarity, or None if planar."""
    g = graph.to_networkx() if isinstance(graph, HardwareGraph) else graph
    planar, certificate = nx.check_planarity(g, counterexample=True)
    return None if planar else certificate
