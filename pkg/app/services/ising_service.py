"""Quantized Ising problems: exact energies, solvers, and chain embedding."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Hashable, Mapping

import networkx as nx
import numpy as np

from app.exceptions.custom_exceptions import (
    CapacityError,
    IncompleteConfigError,
    ParameterError,
    QuantizationError,
    TopologyError,
)
from app.services.embedding_service import Embedding, pair
from app.utils.constants import ANNEAL_T_COLD, BRUTE_FORCE_MAX_NODES, MAX_NUMERATOR, WEIGHT_DENOMINATOR
from app.utils.logger import get_logger

log = get_logger(__name__)

Node = Hashable
Edge = tuple[Node, Node]
SpinConfig = Mapping[Node, int]

_CHUNK = 1 << 16


@dataclass(frozen=True, order=True)
class QuantizedWeight:
    """A weight numerator/8 with numerator in [-8, 8]."""

    numerator: int

    def __post_init__(self) -> None:
        if not isinstance(self.numerator, (int, np.integer)) or isinstance(self.numerator, bool):
            raise QuantizationError(f"Weight numerator must be an integer, got {self.numerator!r}")
        if abs(self.numerator) > MAX_NUMERATOR:
            raise QuantizationError(
                f"Weight numerator {self.numerator} outside [-{MAX_NUMERATOR}, {MAX_NUMERATOR}]; use quantize() for real values"
            )
        object.__setattr__(self, "numerator", int(self.numerator))

    @property
    def value(self) -> Fraction:
        return Fraction(self.numerator, WEIGHT_DENOMINATOR)

    def __float__(self) -> float:
        return self.numerator / WEIGHT_DENOMINATOR

    def __str__(self) -> str:
        return str(self.value)


ZERO = QuantizedWeight(0)


class SolveMethod(str, Enum):
    BRUTE_FORCE = "brute"
    ANNEAL = "anneal"


def edge_key(u: Node, v: Node) -> Edge:
    """Canonical (sorted) key for an undirected edge."""
    return (u, v) if u <= v else (v, u)


def _as_weight(value: QuantizedWeight | int) -> QuantizedWeight:
    return value if isinstance(value, QuantizedWeight) else QuantizedWeight(value)


@dataclass(frozen=True)
class IsingProblem:
    """h on nodes and J on edges of `graph`; missing entries are zero."""

    graph: nx.Graph
    h: Mapping[Node, QuantizedWeight] = field(default_factory=dict)
    J: Mapping[Edge, QuantizedWeight] = field(default_factory=dict)

    def __post_init__(self) -> None:
        h = {}
        for node, weight in self.h.items():
            if node not in self.graph:
                raise TopologyError(f"h given for node {node} which is not in the problem graph")
            h[node] = _as_weight(weight)
        couplings = {}
        for (u, v), weight in self.J.items():
            if not self.graph.has_edge(u, v):
                raise TopologyError(f"J given for ({u}, {v}) which is not an edge of the problem graph")
            couplings[edge_key(u, v)] = _as_weight(weight)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "J", couplings)

    @property
    def nodes(self) -> list[Node]:
        return sorted(self.graph.nodes)

    @property
    def edges(self) -> list[Edge]:
        return sorted(edge_key(u, v) for u, v in self.graph.edges)

    def h_of(self, node: Node) -> QuantizedWeight:
        return self.h.get(node, ZERO)

    def J_of(self, u: Node, v: Node) -> QuantizedWeight:
        return self.J.get(edge_key(u, v), ZERO)

    def numerator_arrays(self) -> tuple[list[Node], np.ndarray, np.ndarray, np.ndarray]:
        """Node order plus integer h vector and (i, j, J) edge arrays."""
        nodes = self.nodes
        index = {node: i for i, node in enumerate(nodes)}
        h = np.array([self.h_of(n).numerator for n in nodes], dtype=np.int64)
        edges = self.edges
        rows = np.array([index[u] for u, _ in edges], dtype=np.int64)
        cols = np.array([index[v] for _, v in edges], dtype=np.int64)
        couplings = np.array([self.J_of(u, v).numerator for u, v in edges], dtype=np.int64)
        return nodes, h, np.stack([rows, cols]) if edges else np.zeros((2, 0), dtype=np.int64), couplings


@dataclass
class SolveResult:
    best_config: dict[Node, int]
    best_energy: Fraction
    method: SolveMethod
    seed: int | None = None


@dataclass
class DecodeResult:
    config: dict[int, int]
    broken: tuple[int, ...]

    @property
    def has_breaks(self) -> bool:
        return bool(self.broken)


def complete_problem(k: int, h: Mapping[int, int] | None = None, J: Mapping[Edge, int] | None = None) -> IsingProblem:
    """Problem over the logical complete graph K_k with integer numerators."""
    return IsingProblem(graph=nx.complete_graph(k), h=dict(h or {}), J=dict(J or {}))


def quantize(value: float) -> QuantizedWeight:
    """Nearest multiple of 1/8, ties away from zero."""
    limit = 1 + 1 / (2 * WEIGHT_DENOMINATOR)
    if not math.isfinite(value) or abs(value) > limit:
        raise QuantizationError(f"Value {value} outside [-{limit}, {limit}]")
    scaled = abs(Fraction(value)) * WEIGHT_DENOMINATOR
    numerator = math.floor(scaled + Fraction(1, 2))
    numerator = min(numerator, MAX_NUMERATOR)
    return QuantizedWeight(int(math.copysign(numerator, value)) if numerator else 0)


def _energy_numerator(problem: IsingProblem, config: SpinConfig) -> int:
    missing = [n for n in problem.graph.nodes if n not in config]
    if missing:
        raise IncompleteConfigError(f"Spin configuration leaves {len(missing)} node(s) unset, e.g. {sorted(missing)[0]}")
    total = sum(w.numerator * config[n] for n, w in problem.h.items())
    total += sum(w.numerator * config[u] * config[v] for (u, v), w in problem.J.items())
    return total


def energy(problem: IsingProblem, config: SpinConfig) -> Fraction:
    """E(s) = sum h_i s_i + sum J_ij s_i s_j, exactly."""
    return Fraction(_energy_numerator(problem, config), WEIGHT_DENOMINATOR)


def _spins_for(indices: np.ndarray, n: int) -> np.ndarray:
    # First node is the most significant bit; bit 0 is spin -1.
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    bits = (indices[:, None] >> shifts) & 1
    return (2 * bits - 1).astype(np.int64)


def brute_force(problem: IsingProblem) -> SolveResult:
    """Exact ground state; ties go to the lexicographically smallest config (-1 < +1)."""
    nodes, h, edge_index, couplings = problem.numerator_arrays()
    n = len(nodes)
    if n > BRUTE_FORCE_MAX_NODES:
        raise CapacityError(f"brute_force handles at most {BRUTE_FORCE_MAX_NODES} nodes, problem has {n}")

    best_index, best_value = 0, None
    total = 1 << n
    for start in range(0, total, _CHUNK):
        indices = np.arange(start, min(start + _CHUNK, total), dtype=np.int64)
        spins = _spins_for(indices, n)
        values = spins @ h
        if couplings.size:
            values = values + (spins[:, edge_index[0]] * spins[:, edge_index[1]]) @ couplings
        pos = int(np.argmin(values))
        if best_value is None or values[pos] < best_value:
            best_value, best_index = int(values[pos]), start + pos

    spins = _spins_for(np.array([best_index], dtype=np.int64), n)[0] if n else np.zeros(0, dtype=np.int64)
    config = {node: int(s) for node, s in zip(nodes, spins)}
    result = SolveResult(config, Fraction(best_value or 0, WEIGHT_DENOMINATOR), SolveMethod.BRUTE_FORCE)
    log.debug("brute_force over %s nodes: E=%s", n, result.best_energy)
    return result


def _anneal_replica(
    h: list[int],
    neighbours: list[list[tuple[int, int]]],
    temperatures: np.ndarray,
    rng: np.random.Generator,
) -> tuple[int, tuple[int, ...]]:
    n = len(h)
    spins = [1] * n
    current = sum(h[i] for i in range(n)) + sum(w for i in range(n) for j, w in neighbours[i] if j > i)
    best = (current, tuple(spins))
    spins = [int(s) for s in rng.choice((-1, 1), size=n)]
    current = sum(h[i] * spins[i] for i in range(n)) + sum(
        w * spins[i] * spins[j] for i in range(n) for j, w in neighbours[i] if j > i
    )
    if (current, tuple(spins)) < best:
        best = (current, tuple(spins))

    for temperature in temperatures:
        # Numerators are eighths; temperatures are in weight units.
        beta = 1.0 / (temperature * WEIGHT_DENOMINATOR)
        draws = rng.random(n)
        for i in range(n):
            local = h[i] + sum(w * spins[j] for j, w in neighbours[i])
            delta = -2 * spins[i] * local
            if delta <= 0 or draws[i] < math.exp(-delta * beta):
                spins[i] = -spins[i]
                current += delta
                if current <= best[0]:
                    candidate = (current, tuple(spins))
                    if candidate < best:
                        best = candidate
    return best


def anneal(problem: IsingProblem, sweeps: int, restarts: int = 1, seed: int = 0) -> SolveResult:
    """Single-spin Metropolis annealing with a geometric schedule.

    Replica r is seeded with seed + r; sweeps visit nodes in sorted order.
    Deterministic for a given (seed, sweeps, restarts).
    """
    if sweeps < 1:
        raise ParameterError(f"sweeps must be >= 1, got {sweeps}")
    if restarts < 1:
        raise ParameterError(f"restarts must be >= 1, got {restarts}")

    nodes = problem.nodes
    index = {node: i for i, node in enumerate(nodes)}
    h = [problem.h_of(node).numerator for node in nodes]
    neighbours: list[list[tuple[int, int]]] = [[] for _ in nodes]
    for (u, v), weight in problem.J.items():
        if weight.numerator:
            neighbours[index[u]].append((index[v], weight.numerator))
            neighbours[index[v]].append((index[u], weight.numerator))

    scale = max((abs(h[i]) + sum(abs(w) for _, w in neighbours[i]) for i in range(len(nodes))), default=0)
    t_hot = max(2 * scale / WEIGHT_DENOMINATOR, ANNEAL_T_COLD)
    temperatures = np.geomspace(t_hot, ANNEAL_T_COLD, sweeps) if sweeps > 1 else np.array([ANNEAL_T_COLD])

    best = None
    for replica in range(restarts):
        candidate = _anneal_replica(h, neighbours, temperatures, np.random.default_rng(seed + replica))
        if best is None or candidate < best:
            best = candidate

    config = {node: best[1][index[node]] for node in nodes}
    result = SolveResult(config, Fraction(best[0], WEIGHT_DENOMINATOR), SolveMethod.ANNEAL, seed)
    log.info("anneal (%s sweeps x %s restarts, seed %s): E=%s", sweeps, restarts, seed, result.best_energy)
    return result


def _split(numerator: int, parts: int) -> list[int]:
    """Integer split whose parts sum to numerator; remainder goes to the first part."""
    sign = -1 if numerator < 0 else 1
    share, remainder = divmod(abs(numerator), parts)
    return [sign * (share + remainder)] + [sign * share] * (parts - 1)


def embed_problem(
    logical: IsingProblem,
    embedding: Embedding,
    chain_weight: QuantizedWeight | int,
) -> IsingProblem:
    """Physical problem over the chain qubits of `embedding`."""
    chain_weight = _as_weight(chain_weight)
    if chain_weight.numerator >= 0:
        raise ParameterError(f"chain_weight must be ferromagnetic (negative), got {chain_weight}")
    if sorted(logical.graph.nodes) != sorted(embedding.logical_ids):
        raise TopologyError("Logical problem nodes do not match the embedding's logical ids")

    graph = nx.Graph()
    h: dict[Node, int] = {}
    J: dict[Edge, int] = {}
    for chain in embedding.chains:
        members = sorted(chain.physical)
        graph.add_nodes_from(members)
        for qubit, part in zip(members, _split(logical.h_of(chain.logical_id).numerator, len(members))):
            h[qubit] = part
        for coupler in chain.intra_couplers:
            graph.add_edge(coupler.a, coupler.b)
            J[coupler.endpoints] = chain_weight.numerator

    for (i, j), couplers in embedding.inter_couplers.items():
        ordered = sorted(couplers, key=lambda c: c.endpoints)
        for coupler in ordered:
            graph.add_edge(coupler.a, coupler.b)
        weight = logical.J_of(i, j).numerator
        for coupler, part in zip(ordered, _split(weight, len(ordered))):
            J[coupler.endpoints] = part

    for u, v in logical.J:
        if logical.J_of(u, v).numerator and pair(u, v) not in embedding.inter_couplers:
            raise TopologyError(f"Logical edge ({u}, {v}) has no inter-chain coupler in the embedding")

    physical = IsingProblem(graph=graph, h=h, J=J)
    log.debug("Embedded %s-node problem onto %s qubits", logical.graph.number_of_nodes(), graph.number_of_nodes())
    return physical


def decode(physical_config: SpinConfig, embedding: Embedding) -> DecodeResult:
    """Majority vote per chain; exact ties read as -1."""
    config: dict[int, int] = {}
    broken: list[int] = []
    for chain in embedding.chains:
        spins = [physical_config[q] for q in chain.physical]
        config[chain.logical_id] = 1 if sum(spins) > 0 else -1
        if len(set(spins)) > 1:
            broken.append(chain.logical_id)
    return DecodeResult(config=config, broken=tuple(broken))


def random_problem(graph: nx.Graph, rng: np.random.Generator, max_numerator: int = 2) -> IsingProblem:
    """Random problem with numerators drawn uniformly from [-max_numerator, max_numerator]."""
    h = {n: int(rng.integers(-max_numerator, max_numerator + 1)) for n in sorted(graph.nodes)}
    J = {
        edge: int(rng.integers(-max_numerator, max_numerator + 1))
        for edge in sorted(edge_key(u, v) for u, v in graph.edges)
    }
    return IsingProblem(graph=graph, h=h, J=J)
