"""Export service: turns graphs, embeddings, problems, designs, programs and
margin curves into JSON, DOT and CSV artifacts.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Mapping

from app.services.chimera_service import ChimeraSpec, HardwareGraph, QubitId, qubit_linear_index
from app.services.dac_service import DacDesign, DacState, StageChainDesign
from app.services.embedding_service import Embedding, VerificationReport
from app.services.fabric_service import DacSlot, EnergyReport, ProgramSequence
from app.services.ising_service import IsingProblem, SolveResult
from app.services.pulse_source_service import MarginReport
from app.utils.constants import MICRO, PHI0, PICO
from app.utils.logger import get_logger
from app.utils.utils import ensure_dir, format_fraction, write_json, write_text

log = get_logger(__name__)

MARGIN_COLUMNS = ["phi_b_mphi0", "zero_state_i_max_ua", "envelope_i_max_ua"]
ZONE_COLUMNS = ["zone", "i_low_ua", "i_high_ua"]
TARGET_COLUMNS = ["slot", "role", "m_lsd", "m_msd"]


# -----------------------
# Graphs and embeddings
# -----------------------

def spec_to_dict(spec: ChimeraSpec) -> dict[str, int]:
    return {"n_rows": spec.n_rows, "n_cols": spec.n_cols, "m": spec.m}


def graph_to_dict(graph: HardwareGraph) -> dict[str, Any]:
    spec = graph.spec
    nodes = [
        {
            "index": qubit_linear_index(spec, q),
            "tile_row": q.tile_row,
            "tile_col": q.tile_col,
            "orientation": q.orientation.value,
            "shore_index": q.shore_index,
        }
        for q in graph.qubits
    ]
    edges = [
        {
            "source": qubit_linear_index(spec, c.a),
            "target": qubit_linear_index(spec, c.b),
            "kind": c.kind.value,
        }
        for c in sorted(graph.couplers, key=lambda c: c.endpoints)
    ]
    return {"spec": spec_to_dict(spec), "nodes": nodes, "edges": edges}


def graph_to_dot(graph: HardwareGraph) -> str:
    """Undirected DOT; external couplers are dashed."""
    spec = graph.spec
    lines = ["graph chimera {"]
    for q in graph.qubits:
        lines.append(f'  {qubit_linear_index(spec, q)} [label="{q}"];')
    for c in sorted(graph.couplers, key=lambda c: c.endpoints):
        style = " [style=dashed]" if c.kind.value == "external" else ""
        lines.append(f"  {qubit_linear_index(spec, c.a)} -- {qubit_linear_index(spec, c.b)}{style};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _pairs(spec: ChimeraSpec, couplers: Iterable) -> list[list[int]]:
    return [[qubit_linear_index(spec, c.a), qubit_linear_index(spec, c.b)] for c in sorted(couplers, key=lambda c: c.endpoints)]


def embedding_to_dict(embedding: Embedding, spec: ChimeraSpec) -> dict[str, Any]:
    return {
        "spec": spec_to_dict(spec),
        "chains": {str(c.logical_id): [qubit_linear_index(spec, q) for q in c.physical] for c in embedding.chains},
        "intra_couplers": {str(c.logical_id): _pairs(spec, c.intra_couplers) for c in embedding.chains},
        "inter_couplers": {f"{i},{j}": _pairs(spec, cs) for (i, j), cs in embedding.inter_couplers.items()},
    }


def verification_to_dict(report: VerificationReport) -> dict[str, Any]:
    return {
        "passed": report.passed,
        "target_k": report.target_k,
        "qubit_count": report.qubit_count,
        "chain_lengths": {str(k): v for k, v in report.chain_lengths.items()},
        "issues": list(report.issues),
    }


# -----------------------
# Problems and solutions
# -----------------------

def _node_key(node: Any, spec: ChimeraSpec | None) -> int:
    return qubit_linear_index(spec, node) if isinstance(node, QubitId) and spec is not None else int(node)


def problem_to_dict(problem: IsingProblem, spec: ChimeraSpec | None = None) -> dict[str, Any]:
    """Problem file layout; hardware problems name their Chimera topology."""
    return {
        "topology": "complete" if spec is None else {"chimera": spec_to_dict(spec)},
        "nodes": [_node_key(n, spec) for n in problem.nodes],
        "h": {str(_node_key(n, spec)): problem.h_of(n).numerator for n in problem.nodes},
        "J": {
            f"{_node_key(u, spec)},{_node_key(v, spec)}": problem.J_of(u, v).numerator
            for u, v in problem.edges
            if problem.J_of(u, v).numerator
        },
    }


def solve_result_to_dict(result: SolveResult, spec: ChimeraSpec | None = None) -> dict[str, Any]:
    return {
        "method": result.method.value,
        "seed": result.seed,
        "best_energy": str(result.best_energy),
        "best_energy_decimal": float(result.best_energy),
        "best_energy_display": format_fraction(result.best_energy),
        "best_config": {str(_node_key(n, spec)): s for n, s in result.best_config.items()},
    }


# -----------------------
# DAC designs and programs
# -----------------------

def design_to_dict(design: DacDesign) -> dict[str, Any]:
    """Inputs (pH, uA) echoed with the derived parameters."""
    matrix = design.matrix
    return {
        "l_lsd_ph": matrix.l_lsd / PICO,
        "l_msd_ph": matrix.l_msd / PICO,
        "l_out_ph": matrix.l_out / PICO,
        "m_lsd_msd_ph": matrix.m_lsd_msd / PICO,
        "m_lsd_out_ph": matrix.m_lsd_out / PICO,
        "m_msd_out_ph": matrix.m_msd_out / PICO,
        "i_in_ua": design.i_in / MICRO,
        "derating": design.derating,
        "derived": {
            "w_lsd_mphi0": design.w_lsd,
            "w_msd_mphi0": design.w_msd,
            "max_sfq_lsd": design.max_sfq_lsd,
            "max_sfq_msd": design.max_sfq_msd,
            "division_ratio": design.division_ratio,
            "range_mphi0": design.range,
            "effective_bits": design.effective_bits,
            "covers_msd_step": design.covers_msd_step,
        },
    }


def chain_to_dict(chain: StageChainDesign) -> dict[str, Any]:
    return {
        "n_stages": chain.n_stages,
        "weights_mphi0": list(chain.weights),
        "capacities": list(chain.capacities),
        "range_mphi0": chain.range,
        "effective_bits": chain.effective_bits,
        "ordered": chain.is_ordered,
        "covers_steps": chain.covers_steps,
    }


def sequence_to_dict(sequence: ProgramSequence) -> dict[str, Any]:
    return {
        "events": [
            {
                "kind": e.kind.value,
                "pwr_domain": e.pwr_domain,
                "pwr_sign": e.pwr_sign,
                "addr_line": e.addr_line,
                "trig_line": e.trig_line,
                "polarity": e.polarity.value,
                "pulse_count": e.pulse_count,
                "active_lines": sorted(line.value for line in e.active_lines),
            }
            for e in sequence.events
        ]
    }


def energy_to_dict(report: EnergyReport) -> dict[str, Any]:
    return {
        "total_sfq": report.total_sfq,
        "energy_per_sfq_j": report.energy_per_sfq,
        "total_energy_j": report.total_energy,
        "per_domain": {str(k): v for k, v in report.per_domain.items()},
        "reset_sfq": report.reset_sfq,
    }


def margin_report_to_dict(report: MarginReport) -> dict[str, Any]:
    return {
        "passed": report.passed,
        "i_in_ua": report.i_in / MICRO,
        "zones": [
            {
                "zone": z.name,
                "passed": z.passed,
                "current_margin_ua": z.current_margin / MICRO,
                "flux_margin_mphi0": None if z.flux_margin is None else 1000 * z.flux_margin / PHI0,
                "i_low_ua": z.i_low / MICRO,
                "i_high_ua": z.i_high / MICRO,
            }
            for z in report.zones
        ],
    }


def margin_rows(curve: Iterable[tuple[float, float, float]]) -> list[dict[str, float]]:
    return [
        {
            "phi_b_mphi0": round(1000 * phi / PHI0, 6),
            "zero_state_i_max_ua": round(zero / MICRO, 6),
            "envelope_i_max_ua": round(env / MICRO, 6),
        }
        for phi, zero, env in curve
    ]


def zone_rows(report: MarginReport) -> list[dict[str, Any]]:
    return [
        {"zone": z.name, "i_low_ua": round(z.i_low / MICRO, 6), "i_high_ua": round(z.i_high / MICRO, 6)}
        for z in report.zones
    ]


def target_rows(states: Mapping[DacSlot, DacState]) -> list[dict[str, Any]]:
    return [
        {"slot": slot.label, "role": slot.role.value, "m_lsd": state.m_lsd, "m_msd": state.m_msd}
        for slot, state in sorted(states.items())
    ]


@dataclass
class ExportService:
    output_dir: Path

    def write_json(self, filename: str, payload: Any) -> Path:
        path = ensure_dir(self.output_dir) / filename
        write_json(path, payload)
        log.info("Wrote %s", path)
        return path

    def write_dot(self, filename: str, graph: HardwareGraph) -> Path:
        path = ensure_dir(self.output_dir) / filename
        write_text(path, graph_to_dot(graph))
        log.info("Wrote %s", path)
        return path

    def write_margin_csv(self, filename: str, curve: Iterable[tuple[float, float, float]], report: MarginReport) -> Path:
        """Curve samples followed by a zone table in the same file."""
        path = ensure_dir(self.output_dir) / filename
        with path.open("w", encoding="utf-8", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=MARGIN_COLUMNS)
            writer.writeheader()
            writer.writerows(margin_rows(curve))
            zones = csv.DictWriter(f, fieldnames=ZONE_COLUMNS)
            zones.writeheader()
            zones.writerows(zone_rows(report))
        log.info("Wrote %s", path)
        return path

    def write_targets_csv(self, filename: str, states: Mapping[DacSlot, DacState]) -> Path:
        path = ensure_dir(self.output_dir) / filename
        _write_csv(path, TARGET_COLUMNS, target_rows(states))
        log.info("Wrote %s", path)
        return path


def _write_csv(path: Path, columns: list[str], rows: list[dict[str, Any]]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)

    with path.open("w", encoding="utf-8", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=columns)
        writer.writeheader()
        writer.writerows(rows)
