import csv
import json
from unittest.mock import patch

import pytest
from click.testing import CliRunner

from app import create_cli
from app.controllers.program_controller import _fabric_side
from app.exceptions.custom_exceptions import ConfigurationError
from app.services.dac_service import DacState
from app.services.fabric_service import simulate

TARGETS = {
    "fabric": {"n": 2},
    "targets": [
        {"tile_row": 0, "tile_col": 0, "plaq_row": 0, "plaq_col": 0, "position": 0, "m_lsd": 3, "m_msd": -2},
        {"tile_row": 1, "tile_col": 1, "plaq_row": 4, "plaq_col": 1, "position": 2, "m_lsd": -6, "m_msd": 6},
    ],
}


@pytest.fixture
def invoke():
    runner = CliRunner()

    def run(*args):
        with patch("app.config.settings.load_dotenv"), patch.dict("os.environ", {}, clear=True), patch(
            "app.configure_logging"
        ):
            return runner.invoke(create_cli(), list(args))

    return run


def write_json(path, obj):
    path.write_text(json.dumps(obj), encoding="utf-8")
    return str(path)


def test_program_targets(invoke, tmp_path):
    result = invoke("program", "--targets", write_json(tmp_path / "t.json", TARGETS))

    assert result.exit_code == 0
    data = json.loads(result.output)
    assert data["exact"] is True
    assert data["disturbed"] == []
    assert data["sequence"]["events"][0]["kind"] == "reset"
    assert data["energy"]["total_sfq"] == 3 + 2 + 6 + 6
    assert "readback" not in data


def test_program_targets_csv(invoke, tmp_path):
    result = invoke(
        "program", "--targets", write_json(tmp_path / "t.json", TARGETS), "--format", "csv", "--out", str(tmp_path / "o")
    )

    assert result.exit_code == 0
    with (tmp_path / "o" / "programmed_states.csv").open(encoding="utf-8", newline="") as f:
        rows = list(csv.DictReader(f))
    assert [(r["m_lsd"], r["m_msd"]) for r in rows] == [("3", "-2"), ("-6", "6")]


def test_program_hardware_problem_reads_back(invoke, tmp_path):
    problem = {"topology": {"chimera": {"n_rows": 1, "n_cols": 1}}, "nodes": list(range(8)), "h": {"0": -3}, "J": {"0,4": 7}}

    result = invoke("program", "--problem", write_json(tmp_path / "p.json", problem))

    assert result.exit_code == 0
    data = json.loads(result.output)
    assert data["exact"] is True
    assert data["readback"]["h"]["0"] == -3
    assert data["readback"]["J"] == {"0,4": 7}


def test_program_needs_exactly_one_input(invoke, tmp_path):
    assert invoke("program").exit_code == 2

    path = write_json(tmp_path / "t.json", TARGETS)
    assert invoke("program", "--targets", path, "--problem", path).exit_code == 2


def test_program_rejects_logical_problem(invoke, tmp_path):
    result = invoke("program", "--problem", write_json(tmp_path / "p.json", {"nodes": [0, 1]}))

    assert result.exit_code == 2
    assert "embed" in result.output


def test_program_over_capacity_target(invoke, tmp_path):
    targets = {"fabric": {"n": 2}, "targets": [{**TARGETS["targets"][0], "m_lsd": 7}]}

    result = invoke("program", "--targets", write_json(tmp_path / "t.json", targets))

    assert result.exit_code == 2


@pytest.mark.parametrize("side, expected", [(1, 2), (2, 2), (3, 4), (8, 8)])
def test_fabric_side_rounds_up_to_even(side, expected):
    assert _fabric_side(side, side) == expected


def test_fabric_side_needs_square_grid():
    with pytest.raises(ConfigurationError):
        _fabric_side(2, 4)


def test_program_problem_readback_mismatch_is_a_failed_check(invoke, tmp_path):
    problem = {"topology": {"chimera": {"n_rows": 1, "n_cols": 1}}, "nodes": list(range(8)), "h": {"0": -3}, "J": {"0,4": 7}}

    def drifting(*args, **kwargs):
        result = simulate(*args, **kwargs)
        slot = next(s for s, state in result.states.items() if not state.is_zero)
        result.states[slot] = DacState()
        return result

    with patch("app.services.programming_service.simulate", side_effect=drifting):
        result = invoke("program", "--problem", write_json(tmp_path / "p.json", problem))

    assert result.exit_code == 1
    assert "Programming mismatch" in result.output
