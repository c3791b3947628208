from dataclasses import replace
from unittest.mock import patch

import pytest

from app.config.settings import Settings
from app.exceptions.custom_exceptions import CompileError
from app.services.chimera_service import ChimeraSpec, build_chimera
from app.services.dac_service import DacState
from app.services.embedding_service import embed_complete
from app.services.fabric_service import EventKind, build_fabric
from app.services.ising_service import IsingProblem, complete_problem, embed_problem
from app.services.programming_service import (
    ProgrammingService,
    full_chip_design,
    problem_dac_design,
    targets_to_problem,
    weights_to_targets,
)
from app.services.pulse_source_service import PulseSourceParams, check_margins, nominal_levels
from app.utils.constants import MICRO


@pytest.fixture(scope="module")
def fabric():
    return build_fabric(2)


@pytest.fixture
def service(fabric):
    return ProgrammingService(fabric=fabric, design=problem_dac_design())


@pytest.fixture
def tile_problem():
    graph = build_chimera(ChimeraSpec.square(1)).to_networkx()
    nodes = sorted(graph.nodes)
    edges = sorted(tuple(sorted(e)) for e in graph.edges)
    h = {q: (i * 3) % 17 - 8 for i, q in enumerate(nodes)}
    J = {e: (i * 5) % 17 - 8 for i, e in enumerate(edges)}
    return IsingProblem(graph=graph, h=h, J=J)


@pytest.fixture
def settings():
    with patch("app.config.settings.load_dotenv"), patch.dict("os.environ", {}, clear=True):
        return Settings.from_env()


# -----------------------
# Designs
# -----------------------

def test_problem_design_resolves_every_numerator():
    design = problem_dac_design()

    assert design.w_msd == pytest.approx(20.0)
    assert design.max_sfq_lsd == design.max_sfq_msd == 6
    assert design.w_lsd == pytest.approx(5.0)
    assert design.range == pytest.approx(120.0)


def test_problem_design_fits_nominal_margins():
    assert check_margins(PulseSourceParams(), nominal_levels(), problem_dac_design().loop_current_span).passed


def test_full_chip_design_keeps_eight_bits_inside_margins():
    design = full_chip_design()

    assert design.effective_bits == pytest.approx(8.0, rel=1e-6)
    assert design.max_sfq_lsd == design.max_sfq_msd == 16
    assert design.loop_current_span < 27.5 * MICRO


# -----------------------
# Weights <-> targets
# -----------------------

def test_weights_map_to_one_slot_each(fabric, tile_problem):
    targets = weights_to_targets(fabric, tile_problem, problem_dac_design())

    assert len(targets) == 8 + 16
    assert all(isinstance(state, DacState) for state in targets.values())


def test_targets_read_back_to_same_problem(fabric, tile_problem):
    design = problem_dac_design()
    targets = weights_to_targets(fabric, tile_problem, design)

    readback = targets_to_problem(fabric, targets, design, tile_problem.graph)

    assert readback.h == tile_problem.h
    assert readback.J == tile_problem.J


def test_missing_states_read_as_zero(fabric, tile_problem):
    readback = targets_to_problem(fabric, {}, problem_dac_design(), tile_problem.graph)

    assert all(w.numerator == 0 for w in readback.h.values())
    assert all(w.numerator == 0 for w in readback.J.values())


# -----------------------
# Programming
# -----------------------

def test_program_problem_is_exact(service, tile_problem):
    result = service.program_problem(tile_problem)

    assert result.exact
    assert result.simulation.disturbed == []
    assert result.readback.h == tile_problem.h
    assert result.readback.J == tile_problem.J
    assert result.sequence.events[0].kind is EventKind.RESET
    assert result.energy.total_sfq == sum(e.pulse_count for e in result.sequence.pulse_events)


def test_program_embedded_problem(service):
    spec = ChimeraSpec.square(1)
    embedding = embed_complete(4, spec)
    logical = complete_problem(4, h={0: 1, 3: -2}, J={(0, 1): 2, (1, 2): -1, (2, 3): 1})

    result = service.program_problem(embed_problem(logical, embedding, -8))

    assert result.exact
    assert result.readback.J_of(*embedding.chain(0).intra_couplers[0].endpoints).numerator == -8


def test_program_problem_raises_when_states_drift(service, tile_problem):
    with patch("app.services.programming_service.simulate") as simulate:
        simulate.return_value.states = {}
        simulate.return_value.reset_pulses = 0
        with pytest.raises(CompileError):
            service.program_problem(tile_problem)


def test_program_problem_leaves_drift_to_caller_when_not_strict(service, tile_problem):
    with patch("app.services.programming_service.simulate") as simulate:
        simulate.return_value.states = {}
        simulate.return_value.reset_pulses = 0
        result = service.program_problem(tile_problem, strict=False)

    assert not result.exact


# -----------------------
# Fidelity
# -----------------------

@pytest.mark.parametrize("seed", range(5))
def test_fidelity_trial_recovers_logical_ground_state(service, seed):
    outcome = service.fidelity_trial(seed)

    assert outcome.passed
    assert outcome.decoded_energy == outcome.logical_energy
    assert outcome.broken == ()
    assert outcome.disturbed == 0


def test_run_fidelity_uses_consecutive_seeds(service):
    outcomes = service.run_fidelity(3, seed=10)

    assert [o.seed for o in outcomes] == [10, 11, 12]
    assert all(o.passed for o in outcomes)


def test_from_settings_uses_configured_levels(settings):
    service = ProgrammingService.from_settings(replace(settings, pwr_current_ua=44.0, chain_weight=-6))

    assert service.levels.i_pwr == pytest.approx(44.0 * MICRO)
    assert service.chain_weight == -6
    assert service.fabric.n == 2
    assert service.design.max_sfq_msd == 6
