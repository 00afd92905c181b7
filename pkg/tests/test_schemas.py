from collections.abc import Callable
from pathlib import Path

import pytest

from hjgraph.config import get_settings
from hjgraph.core.hamiltonians import SchemeKind
from hjgraph.core.scheme import R0_FLOOR
from hjgraph.core.weights import WeightKind
from hjgraph.exceptions import ConfigError
from hjgraph.schemas import RunConfig, build_solver_config, parse_config, validate_config


def test_defaults() -> None:
    config = validate_config(None)
    assert config == RunConfig()
    assert config.graph.d == 2
    assert config.lattice.N == 32
    assert config.scheme.kind is SchemeKind.LAX_FRIEDRICHS
    assert config.scheme.r0 == "auto"
    assert config.run.N_list == [8, 16, 32, 64, 128]
    assert config.dirac_target() == [0.5, 0.5]


def test_weight_lambda_alias() -> None:
    config = validate_config({"weight": {"kind": "exponential", "lambda": 2.5}})
    assert config.weight.kind is WeightKind.EXPONENTIAL
    assert config.weight.lam == 2.5
    assert '"lambda"' in config.model_dump_json(by_alias=True)


@pytest.mark.parametrize(
    ("document", "key_path"),
    [
        ({"scheme": {"kindd": "lax_friedrichs"}}, "scheme.kindd"),
        ({"lattice": {"N": 0}}, "lattice.N"),
        ({"graph": {"d": 1}}, "graph.d"),
        ({"scheme": {"cfl": 1.5}}, "scheme.cfl"),
        ({"weight": {"alpha": 0.5}}, "weight.alpha"),
        ({"problem": {"u0": "sine"}}, "problem.u0"),
        ({"bogus": {}}, "bogus"),
        ({"graph": {"d": 3, "omega": [[0, 1], [1, 0]]}}, "graph.omega"),
        ({"graph": {"d": 3, "omega": [[0, 1, 0], [1, 0, 0], [0, 0, 0]]}}, "graph.omega"),
        (
            {"graph": {"d": 3}, "problem": {"F": "linear", "F_coefficients": [1, 2]}},
            "problem.F_coefficients",
        ),
        ({"run": {"dirac_site": [0.7, 0.7]}}, "run.dirac_site"),
        ({"run": {"report_times": [0.7]}}, "run.report_times"),
    ],
)
def test_invalid_documents_name_the_key(document: dict, key_path: str) -> None:
    with pytest.raises(ConfigError) as exc_info:
        validate_config(document)
    assert exc_info.value.key_path == key_path
    assert exc_info.value.exit_code == 1


def test_parse_config_errors(tmp_path: Path, write_run: Callable[[dict], Path]) -> None:
    with pytest.raises(ConfigError):
        parse_config(tmp_path / "missing.yaml")
    broken = tmp_path / "broken.yaml"
    broken.write_text("graph: [unclosed\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        parse_config(broken)
    listed = tmp_path / "list.yaml"
    listed.write_text("- 1\n- 2\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        parse_config(listed)
    assert parse_config(write_run({"lattice": {"N": 12}})).lattice.N == 12
    assert parse_config(None) == RunConfig()


def test_build_solver_config_with_fixed_r0() -> None:
    config = validate_config(
        {
            "graph": {"d": 3},
            "lattice": {"N": 6},
            "scheme": {"kind": "osher_sethian", "r0": 3.0, "integrator": "euler"},
            "problem": {"F": "linear", "F_coefficients": [1, 0, 0], "T": 0.3},
            "run": {"report_times": [0.2, 0.1]},
        }
    )
    solver = build_solver_config(config)
    assert solver.N == 6
    assert solver.graph.edges == ((0, 1), (0, 2), (1, 2))
    assert solver.hamiltonian.scheme is SchemeKind.OSHER_SETHIAN
    assert solver.hamiltonian.r0 == 3.0
    assert solver.problem.F_coefficients == (1.0, 0.0, 0.0)
    assert solver.report_times == (0.1, 0.2)
    assert solver.site_budget == get_settings().SITE_BUDGET
    assert build_solver_config(config, N=12).N == 12


def test_auto_r0_is_calibrated() -> None:
    config = validate_config({"lattice": {"N": 8}, "problem": {"T": 0.2}})
    assert build_solver_config(config, calibrate=False).hamiltonian.r0 == R0_FLOOR
    assert build_solver_config(config).hamiltonian.r0 >= 1.5 * R0_FLOOR
