"""Reproduction table: topology, embedding, DAC, pulse-source, addressing, energy and fidelity checks."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from itertools import product
from typing import Callable

import networkx as nx
import numpy as np
from colorama import Fore, Style

from app.config.settings import Settings
from app.exceptions.custom_exceptions import DegenerateDesignError
from app.services.chimera_service import ChimeraSpec, Orientation, QubitId, build_chimera
from app.services.dac_service import (
    DacState,
    InductanceMatrix,
    Stage,
    area_objective,
    area_scaling,
    area_scaling_model,
    best_state,
    compile_target,
    derive_params,
    optimal_area_split,
    output_flux,
    reference_design,
)
from app.services.embedding_service import (
    contract_edges,
    diagonal_couplers,
    embed_complete,
    is_complete_bipartite,
    is_complete_graph,
    tile_subgraph,
    verify_embedding,
)
from app.services.fabric_service import activate, build_fabric, energy_per_sfq, line_budget, reprogram_energy, triples
from app.services.programming_service import ProgrammingService, problem_dac_design
from app.services.pulse_source_service import (
    ALL_LINES,
    BiasLevels,
    Line,
    PulseSourceParams,
    critical_current,
    find_operating_point,
    pulse_response,
    require_margins,
    reset,
    reset_levels,
)
from app.utils.constants import MICRO, PHI0, REFERENCE_GRID, REFERENCE_SHORE, REPRODUCE_TITLE, STATUS_FAIL, STATUS_PASS
from app.utils.logger import get_logger

log = get_logger(__name__)

COLUMNS = ("check", "expected", "actual", "status")


@dataclass(frozen=True)
class CheckResult:
    name: str
    expected: str
    actual: str
    passed: bool
    seconds: float = 0.0


@dataclass
class ReproduceReport:
    checks: list[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(c.passed for c in self.checks)

    def failures(self) -> list[str]:
        return [c.name for c in self.checks if not c.passed]


def _within(actual: float, expected: float, rel: float) -> bool:
    return abs(actual - expected) <= rel * abs(expected)


# -----------------------
# Topology and embedding
# -----------------------

def check_counts() -> CheckResult:
    graph = build_chimera(ChimeraSpec.square(REFERENCE_GRID, REFERENCE_SHORE))
    q, c = len(graph.qubits), len(graph.couplers)
    internal, external = len(graph.internal_couplers), len(graph.external_couplers)
    return CheckResult(
        "C_8 qubits / couplers",
        "512 / 1472 (1024 int, 448 ext)",
        f"{q} / {c} ({internal} int, {external} ext)",
        (q, c, internal, external) == (512, 1472, 1024, 448),
    )


def check_embedding() -> CheckResult:
    spec = ChimeraSpec.square(4)
    embedding = embed_complete(16, spec)
    report = verify_embedding(embedding, build_chimera(spec), 16)
    lengths = set(report.chain_lengths.values())
    ok = report.passed and report.qubit_count == 80 and lengths == {5}

    swept = []
    for n in range(1, REFERENCE_GRID + 1):
        spec_n = ChimeraSpec.square(n)
        emb = embed_complete(4 * n, spec_n)
        rep = verify_embedding(emb, build_chimera(spec_n), 4 * n)
        swept.append(rep.passed and rep.qubit_count == 4 * n * (n + 1))
    return CheckResult(
        "K_16 in C_4; K_4N in C_N, N=1..8",
        "80 qubits, chains of 5; 8/8 pass",
        f"{report.qubit_count} qubits, chains of {sorted(lengths)}; {sum(swept)}/{len(swept)} pass",
        ok and all(swept),
    )


def check_minors() -> CheckResult:
    """Three contraction observations on unit tiles."""
    h, v = Orientation.HORIZONTAL, Orientation.VERTICAL

    c1 = build_chimera(ChimeraSpec.square(1))
    k4 = contract_edges(c1, diagonal_couplers(c1, 0, 0))

    c2 = build_chimera(ChimeraSpec.square(2))
    k88 = contract_edges(c2, c2.external_couplers)

    strip = tile_subgraph(c2, [(0, 0), (0, 1), (1, 1)])
    pairs = diagonal_couplers(c2, 0, 0) + diagonal_couplers(c2, 1, 1)
    for s in range(c2.spec.m):
        pairs.append((QubitId(0, 0, h, s), QubitId(0, 1, h, s)))
        pairs.append((QubitId(0, 1, v, s), QubitId(1, 1, v, s)))
    k8 = contract_edges(strip, pairs)

    results = [
        is_complete_graph(k4, 4) and nx.is_isomorphic(k4, nx.complete_graph(4)),
        is_complete_bipartite(k88, 8) and nx.is_isomorphic(k88, nx.complete_bipartite_graph(8, 8)),
        is_complete_graph(k8, 8) and nx.is_isomorphic(k8, nx.complete_graph(8)),
    ]
    return CheckResult(
        "Tile minors",
        "K_4, K_8,8, K_8",
        f"K_{k4.number_of_nodes()}, {k88.number_of_nodes()} nodes/{k88.number_of_edges()} edges, "
        f"K_{k8.number_of_nodes()}",
        all(results),
    )


# -----------------------
# Flux DAC
# -----------------------

def _random_passive_matrix(rng: np.random.Generator) -> InductanceMatrix:
    l_lsd, l_msd, l_out = rng.uniform(200.0, 3000.0, size=3)
    k = rng.uniform(0.01, 0.9, size=3)
    return InductanceMatrix.from_ph(
        l_lsd,
        l_msd,
        l_out,
        k[0] * np.sqrt(l_lsd * l_msd),
        k[1] * np.sqrt(l_lsd * l_out),
        k[2] * np.sqrt(l_msd * l_out),
    )


def check_reference_design(samples: int = 1000, seed: int = 0) -> CheckResult:
    design = reference_design()
    table = (
        _within(design.w_msd, 20.0, 1e-9)
        and _within(design.w_lsd, 1.25, 1e-9)
        and _within(design.division_ratio, 16.0, 1e-9)
        and _within(design.range, 320.0, 1e-9)
        and _within(design.effective_bits, 8.0, 1e-9)
        and design.max_sfq_lsd == design.max_sfq_msd == 16
    )

    rng = np.random.default_rng(seed)
    consistent = 0
    for _ in range(samples):
        try:
            d = derive_params(_random_passive_matrix(rng), rng.uniform(5.0, 60.0) * MICRO)
        except DegenerateDesignError:
            consistent += 1
            continue
        covers = abs(d.w_msd) <= d.max_sfq_lsd * abs(d.w_lsd)
        ratio_ok = _within(d.division_ratio, d.w_msd / d.w_lsd, 1e-12)
        consistent += covers == d.covers_msd_step and ratio_ok
    return CheckResult(
        "Reference DAC parameters",
        "W 20 / 1.25 mPhi0, ratio 16, 320 mPhi0, 8.0 bits",
        f"W {design.w_msd:.4g} / {design.w_lsd:.4g} mPhi0, ratio {design.division_ratio:.4g}, "
        f"{design.range:.4g} mPhi0, {design.effective_bits:.3f} bits; {consistent}/{samples} coverage",
        table and consistent == samples,
    )


def check_compile_precision(targets: int = 1537) -> CheckResult:
    design = reference_design()
    worst = 0.0
    mismatches = 0
    for target in np.linspace(-design.range, design.range, targets):
        achieved = output_flux(design, compile_target(design, float(target)))
        oracle = output_flux(design, best_state(design, float(target)))
        err = abs(achieved - target)
        worst = max(worst, err)
        mismatches += err > abs(oracle - target) + 1e-9
    half = abs(design.w_lsd) / 2
    return CheckResult(
        "Compile precision",
        f"|error| <= {half:.4g} mPhi0, = oracle",
        f"max {worst:.4g} mPhi0, {mismatches} worse than oracle",
        worst <= half + 1e-9 and mismatches == 0,
    )


def check_area() -> CheckResult:
    grid = np.linspace(0.0, 1.0, 1_000_001)
    brute = float(grid[np.argmax(area_objective(grid))])
    split = optimal_area_split()
    model = area_scaling_model(36)
    factor = area_scaling(36)
    ok = abs(split - 0.5) <= 1e-6 and abs(brute - 0.5) <= 1e-6 and abs(factor - 6) <= 1e-9
    return CheckResult(
        "Area split and J_c scaling",
        "x = 0.5; 6x smaller at 36x J_c, L*I_c fixed",
        f"x = {split:.6f} (grid {brute:.6f}); {factor:.4g}x, L*I_c x{model.l_ic_product:.4g}",
        ok and abs(model.l_ic_product - 1) <= 1e-12,
    )


# -----------------------
# Pulse source
# -----------------------

def _pulse_sweep_ok(params: PulseSourceParams, levels: BiasLevels) -> tuple[int, int]:
    """(violations, cases) of the one-SFQ / no-change rules for the problem DAC design under levels."""
    design = problem_dac_design()
    require_margins(params, levels, design.loop_current_span)
    partial = [frozenset(c) for c in ((), (Line.PWR,), (Line.ADDR,), (Line.TRIG,),
                                      (Line.PWR, Line.ADDR), (Line.PWR, Line.TRIG), (Line.ADDR, Line.TRIG))]
    violations = cases = 0
    for m_lsd, m_msd in product(range(-design.max_sfq_lsd, design.max_sfq_lsd + 1),
                                range(-design.max_sfq_msd, design.max_sfq_msd + 1)):
        state = DacState(m_lsd=m_lsd, m_msd=m_msd)
        for stage, sign in product(Stage, (1, -1)):
            moved = state.count(stage) + sign
            expected = state.with_count(stage, moved) if abs(moved) <= design.capacity(stage) else state
            cases += 1
            violations += pulse_response(design, state, ALL_LINES, stage, sign, params, levels) != expected
            for lines in partial:
                cases += 1
                violations += pulse_response(design, state, lines, stage, sign, params, levels) != state
    return violations, cases


def check_pulse_source(points: int = 100, seed: int = 0, loop_current_range: float = 27.5 * MICRO) -> CheckResult:
    params = PulseSourceParams()
    at_zero = critical_current(params, 0.0)
    rng = np.random.default_rng(seed)
    symmetric = 0
    for phi in rng.uniform(-2 * PHI0, 2 * PHI0, size=points):
        base = critical_current(params, float(phi))
        if _within(critical_current(params, float(phi + PHI0)), base, 1e-4) and _within(
            critical_current(params, float(-phi)), base, 1e-4
        ):
            symmetric += 1

    found = [find_operating_point(params, sign * 45 * MICRO, loop_current_range) for sign in (1, -1)]
    operating = [report.passed for _, report in found]
    violations, cases = _pulse_sweep_ok(params, found[0][0])
    return CheckResult(
        "dc-SQUID source",
        "I_c(0) = 110 uA; periodic+even; margins at +/-45 uA; 0 violations",
        f"I_c(0) = {at_zero / MICRO:.6g} uA; {symmetric}/{points}; "
        f"{sum(operating)}/2 operating points; {violations}/{cases} violations",
        abs(at_zero - 110 * MICRO) <= 1e-9 * 110 * MICRO and symmetric == points and all(operating) and not violations,
    )


def check_reset() -> CheckResult:
    design = reference_design()
    params = PulseSourceParams()
    levels = reset_levels(params)
    bad = 0
    span = range(-16, 17)
    for m_lsd, m_msd in product(span, span):
        state, pulses = reset(design, DacState(m_lsd=m_lsd, m_msd=m_msd), params, levels)
        again, repeat = reset(design, state, params, levels)
        if not state.is_zero or (pulses.lsd, pulses.msd) != (abs(m_lsd), abs(m_msd)) or not again.is_zero or repeat.total:
            bad += 1
    return CheckResult(
        "Reset over [-16,16]^2",
        "1089 states -> (0,0), pulses = |m|",
        f"{33 * 33 - bad}/{33 * 33} states",
        bad == 0,
    )


# -----------------------
# Addressing and energy
# -----------------------

def check_addressing() -> CheckResult:
    fabric = build_fabric(REFERENCE_GRID, REFERENCE_SHORE)
    budget = line_budget(len(fabric.slots), fabric)
    seen = set()
    clashes = 0
    count = 0
    for address in triples(fabric):
        count += 1
        hit = activate(fabric, address)
        clashes += len(hit) > 1 or bool(hit & seen)
        seen |= hit
    ok = (
        fabric.slots_per_tile == 72
        and len(fabric.slots) == 4608
        and fabric.num_pwr == 16
        and fabric.total_lines == 56
        and budget.lower_bound == 50
        and count == 4800
        and clashes == 0
        and len(seen) == len(fabric.slots)
    )
    return CheckResult(
        "XYZ addressing",
        "72/tile, 4608 slots, 16 PWR, 56 lines, bound 50, 4800 unique",
        f"{fabric.slots_per_tile}/tile, {len(fabric.slots)} slots, {fabric.num_pwr} PWR, "
        f"{fabric.total_lines} lines, bound {budget.lower_bound}, {count} triples, {clashes} clashes",
        ok,
    )


def check_energy() -> CheckResult:
    per_sfq = energy_per_sfq(55 * MICRO)
    stages = build_fabric(REFERENCE_GRID, REFERENCE_SHORE).census().slot_stages
    total = reprogram_energy(stages, 32, 55 * MICRO)
    return CheckResult(
        "Programming energy",
        "~0.22 aJ/SFQ; ~65 fJ full reprogram",
        f"{per_sfq / 1e-18:.4f} aJ; {stages} x 32 SFQ -> {total / 1e-15:.1f} fJ",
        _within(per_sfq, 0.22e-18, 0.05) and _within(total, 65e-15, 0.05),
    )


def check_fidelity(settings: Settings, trials: int | None = None) -> CheckResult:
    trials = settings.fidelity_trials if trials is None else trials
    service = ProgrammingService.from_settings(settings, fabric=build_fabric(2, REFERENCE_SHORE))
    outcomes = service.run_fidelity(trials, seed=settings.default_seed)
    passed = sum(o.passed for o in outcomes)
    return CheckResult(
        "End-to-end K_4 fidelity",
        f"{trials}/{trials} ground states, no breaks",
        f"{passed}/{trials}",
        passed == trials,
    )


def _timed(check: Callable[[], CheckResult]) -> CheckResult:
    start = time.perf_counter()
    result = check()
    elapsed = time.perf_counter() - start
    log.info("Check %r: %s in %.2fs", result.name, STATUS_PASS if result.passed else STATUS_FAIL, elapsed)
    return CheckResult(result.name, result.expected, result.actual, result.passed, elapsed)


@dataclass
class ReproduceService:
    settings: Settings

    def checks(self) -> list[Callable[[], CheckResult]]:
        range_ua = self.settings.loop_current_range_ua
        return [
            check_counts,
            check_embedding,
            check_minors,
            check_reference_design,
            check_compile_precision,
            lambda: check_pulse_source(loop_current_range=range_ua * MICRO),
            check_reset,
            check_addressing,
            check_energy,
            lambda: check_fidelity(self.settings),
            check_area,
        ]

    def run(self) -> ReproduceReport:
        report = ReproduceReport([_timed(check) for check in self.checks()])
        log.info("Reproduction: %s/%s checks passed", sum(c.passed for c in report.checks), len(report.checks))
        return report


def render_table(report: ReproduceReport, color: bool = True) -> str:
    rows = [(c.name, c.expected, c.actual, STATUS_PASS if c.passed else STATUS_FAIL) for c in report.checks]
    widths = [max(len(str(row[i])) for row in [COLUMNS, *rows]) for i in range(len(COLUMNS))]

    def line(cells: tuple[str, ...]) -> str:
        return " | ".join(str(cell).ljust(width) for cell, width in zip(cells, widths))

    out = [REPRODUCE_TITLE, line(COLUMNS), "-+-".join("-" * w for w in widths)]
    for row in rows:
        text = line(row)
        if color:
            tint = Fore.GREEN if row[3] == STATUS_PASS else Fore.RED
            text = text[: -widths[3]] + tint + row[3].ljust(widths[3]) + Style.RESET_ALL
        out.append(text)
    return "\n".join(out)
