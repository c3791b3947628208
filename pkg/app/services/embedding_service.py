"""Complete-graph minor embeddings in Chimera and minor verification."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Hashable, Iterable, Mapping

import networkx as nx
from networkx.utils import UnionFind

from app.exceptions.custom_exceptions import CapacityError, ConfigurationError, UnknownEdgeError
from app.services.chimera_service import (
    ChimeraSpec,
    Coupler,
    CouplerKind,
    HardwareGraph,
    Orientation,
    QubitId,
    build_chimera,
)
from app.utils.logger import get_logger

log = get_logger(__name__)

LogicalPair = tuple[int, int]


@dataclass(frozen=True)
class Chain:
    """Physical qubits standing in for one logical node."""

    logical_id: int
    physical: tuple[QubitId, ...]
    intra_couplers: tuple[Coupler, ...] = ()

    def __len__(self) -> int:
        return len(self.physical)


@dataclass(frozen=True)
class Embedding:
    chains: tuple[Chain, ...]
    inter_couplers: Mapping[LogicalPair, frozenset[Coupler]] = field(default_factory=dict)

    @property
    def qubit_count(self) -> int:
        return sum(len(c) for c in self.chains)

    @property
    def logical_ids(self) -> tuple[int, ...]:
        return tuple(c.logical_id for c in self.chains)

    def chain(self, logical_id: int) -> Chain:
        for c in self.chains:
            if c.logical_id == logical_id:
                return c
        raise KeyError(logical_id)

    def owner_of(self) -> dict[QubitId, int]:
        """Map each physical qubit to its logical id (first chain wins on overlap)."""
        owners: dict[QubitId, int] = {}
        for c in self.chains:
            for q in c.physical:
                owners.setdefault(q, c.logical_id)
        return owners


@dataclass
class VerificationReport:
    passed: bool
    target_k: int
    issues: list[str]
    qubit_count: int
    chain_lengths: dict[int, int]


def pair(i: int, j: int) -> LogicalPair:
    return (i, j) if i < j else (j, i)


def _chain_path(k_index: int, spec: ChimeraSpec) -> list[QubitId]:
    t, s = divmod(k_index, spec.m)
    n = spec.n_rows
    vertical = [QubitId(row, t, Orientation.VERTICAL, s) for row in range(t + 1)]
    horizontal = [QubitId(t, col, Orientation.HORIZONTAL, s) for col in range(t, n)]
    return vertical + horizontal


def collect_inter_couplers(chains: Iterable[Chain], graph: HardwareGraph) -> dict[LogicalPair, frozenset[Coupler]]:
    """Every hardware coupler joining two different chains, keyed by logical pair."""
    owners: dict[QubitId, int] = {}
    for c in chains:
        for q in c.physical:
            owners[q] = c.logical_id
    found: dict[LogicalPair, set[Coupler]] = {}
    for coupler in graph.couplers:
        i, j = owners.get(coupler.a), owners.get(coupler.b)
        if i is None or j is None or i == j:
            continue
        found.setdefault(pair(i, j), set()).add(coupler)
    return {key: frozenset(value) for key, value in sorted(found.items())}


def embed_complete(k: int, spec: ChimeraSpec, graph: HardwareGraph | None = None) -> Embedding:
    """Diagonal-chain embedding of K_k into a square Chimera grid.

    Logical node i = t*m + s uses vertical qubit s down column t (rows 0..t)
    joined in tile (t, t) to horizontal qubit s along row t (cols t..N-1).
    """
    if not spec.is_square:
        raise ConfigurationError(f"Complete-graph embedding needs a square grid, got {spec.n_rows}x{spec.n_cols}")
    capacity = spec.m * spec.n_rows
    if k < 1 or k > capacity:
        raise CapacityError(f"K_{k} does not fit C_{spec.n_rows} with m={spec.m} (capacity {capacity})")

    graph = graph or build_chimera(spec)
    chains: list[Chain] = []
    for i in range(k):
        path = _chain_path(i, spec)
        links = []
        for a, b in zip(path, path[1:]):
            coupler = graph.coupler_between(a, b)
            if coupler is None:
                raise ConfigurationError(f"Chain {i} needs missing coupler {a}-{b}")
            links.append(coupler)
        chains.append(Chain(logical_id=i, physical=tuple(path), intra_couplers=tuple(links)))

    embedding = Embedding(chains=tuple(chains), inter_couplers=collect_inter_couplers(chains, graph))
    log.info("Embedded K_%s into C_%s: %s physical qubits", k, spec.n_rows, embedding.qubit_count)
    return embedding


def _as_networkx(graph: HardwareGraph | nx.Graph) -> nx.Graph:
    return graph.to_networkx() if isinstance(graph, HardwareGraph) else graph


def contract_edges(graph: HardwareGraph | nx.Graph, pairs: Iterable[Coupler | tuple[Hashable, Hashable]]) -> nx.Graph:
    """Contract edges and return the simple minor.

    Merged nodes are labelled by the frozenset of original nodes they absorb.
    Parallel edges collapse and self-loops are dropped.
    """
    g = _as_networkx(graph)
    merged = UnionFind(g.nodes)
    for item in pairs:
        u, v = item.endpoints if isinstance(item, Coupler) else item
        if not g.has_edge(u, v):
            raise UnknownEdgeError(f"Cannot contract {u}-{v}: no such edge")
        merged.union(u, v)

    label = {}
    for group in merged.to_sets():
        name = frozenset(group)
        for node in group:
            label[node] = name

    minor = nx.Graph()
    minor.add_nodes_from(set(label.values()))
    for u, v in g.edges:
        if label[u] != label[v]:
            minor.add_edge(label[u], label[v])
    return minor


def contract_chains(graph: HardwareGraph | nx.Graph, embedding: Embedding) -> nx.Graph:
    """Contract every chain's intra-couplers."""
    return contract_edges(graph, [c for chain in embedding.chains for c in chain.intra_couplers])


def is_complete_graph(graph: nx.Graph, n: int) -> bool:
    """Certificate for K_n: n nodes, every node of degree n-1, no self-loops."""
    if graph.number_of_nodes() != n or nx.number_of_selfloops(graph):
        return False
    return all(d == n - 1 for _, d in graph.degree)


def is_complete_bipartite(graph: nx.Graph, n: int) -> bool:
    """Certificate for K_{n,n}: bipartite with two sides of n and n*n edges."""
    if graph.number_of_nodes() != 2 * n or graph.number_of_edges() != n * n:
        return False
    if not nx.is_connected(graph) or not nx.is_bipartite(graph):
        return False
    left, right = nx.bipartite.sets(graph)
    return len(left) == n and len(right) == n


def verify_embedding(embedding: Embedding, graph: HardwareGraph, target_k: int) -> VerificationReport:
    """Check that `embedding` is a K_{target_k} minor model in `graph`."""
    issues: list[str] = []
    ids = sorted(embedding.logical_ids)
    if ids != list(range(target_k)):
        issues.append(f"logical ids {ids} do not match K_{target_k}")

    owners: dict[QubitId, int] = {}
    for chain in embedding.chains:
        if not chain.physical:
            issues.append(f"empty chain {chain.logical_id}")
        for q in chain.physical:
            if q not in graph:
                issues.append(f"chain {chain.logical_id} uses unknown qubit {q}")
            elif q in owners:
                issues.append(f"chains {owners[q]} and {chain.logical_id} overlap at qubit {q}")
            else:
                owners[q] = chain.logical_id

    for chain in embedding.chains:
        members = set(chain.physical)
        links = nx.Graph()
        links.add_nodes_from(members)
        for coupler in chain.intra_couplers:
            if coupler.a not in members or coupler.b not in members:
                issues.append(f"chain {chain.logical_id} coupler {coupler} leaves the chain")
            elif graph.coupler_between(coupler.a, coupler.b) is None:
                issues.append(f"chain {chain.logical_id} coupler {coupler} is not in the hardware graph")
            else:
                links.add_edge(coupler.a, coupler.b)
        if members and not nx.is_connected(links):
            issues.append(f"disconnected chain {chain.logical_id}")

    coupled = set(collect_inter_couplers(embedding.chains, graph))
    for i, j in combinations(range(target_k), 2):
        if (i, j) not in coupled:
            issues.append(f"uncoupled pair ({i}, {j})")

    report = VerificationReport(
        passed=not issues,
        target_k=target_k,
        issues=issues,
        qubit_count=embedding.qubit_count,
        chain_lengths={c.logical_id: len(c) for c in embedding.chains},
    )
    log.info("Verified K_%s embedding: %s (%s issues)", target_k, "pass" if report.passed else "fail", len(issues))
    return report


def tile_subgraph(graph: HardwareGraph, tiles: Iterable[tuple[int, int]]) -> nx.Graph:
    """Induced subgraph on the qubits of the given tiles."""
    wanted = set(tiles)
    nodes = [q for q in graph.qubits if (q.tile_row, q.tile_col) in wanted]
    return graph.to_networkx().subgraph(nodes).copy()


def diagonal_couplers(graph: HardwareGraph, row: int, col: int) -> list[Coupler]:
    """Internal couplers joining H s and V s inside one tile."""
    out = []
    for s in range(graph.spec.m):
        coupler = graph.coupler_between(
            QubitId(row, col, Orientation.HORIZONTAL, s), QubitId(row, col, Orientation.VERTICAL, s)
        )
        if coupler is not None and coupler.kind is CouplerKind.INTERNAL:
            out.append(coupler)
    return out
