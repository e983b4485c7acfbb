"""Embedded and external solver backends behind the one solve() contract."""

import json
import sys
from fractions import Fraction
from pathlib import Path

import pytest

from mplsotn.milp import MilpModel, SolveStatus, VarKind
from mplsotn.solvers import (
    DEFAULT_EXTERNAL_TEMPLATE,
    ENV_SOLVER_COMMAND,
    SolverConfig,
    hard_deadline,
    solve,
)


def knapsack() -> MilpModel:
    # max 5a + 4b + 3c s.t. 2a + 3b + c <= 4  ->  min form, optimum -8 (a, c)
    m = MilpModel("knap")
    for name in ("a", "b", "c"):
        m.add_variable(name, VarKind.BINARY)
    m.add_objective_term("a", -5)
    m.add_objective_term("b", -4)
    m.add_objective_term("c", -3)
    m.add_constraint("cap", [("a", 2), ("b", 3), ("c", 1)], "<=", 4)
    return m


def test_empty_model_is_trivially_optimal():
    m = MilpModel("empty")
    m.add_objective_constant(Fraction(5, 2))
    sol = solve(m)
    assert sol.status is SolveStatus.OPTIMAL
    assert sol.solver_name == "trivial"
    assert sol.objective == 2.5
    assert sol.values == {}


def test_embedded_solves_to_optimality():
    sol = solve(knapsack(), gap=0.0)
    assert sol.status is SolveStatus.OPTIMAL
    assert sol.objective == -8.0
    assert sol.values["a"] == 1 and sol.values["b"] == 0 and sol.values["c"] == 1
    assert all(isinstance(v, Fraction) for v in sol.values.values())
    assert sol.wall_seconds > 0


def test_embedded_reports_infeasible():
    m = MilpModel("bad")
    m.add_variable("x", VarKind.BINARY)
    m.add_constraint("lo", [("x", 1)], ">=", 2)
    assert solve(m).status is SolveStatus.INFEASIBLE


def test_hard_deadline_adds_slack():
    assert hard_deadline(None) is None
    assert hard_deadline(10.0) == pytest.approx(10.0 * 1.1 + 1.0)


def test_config_from_environment(monkeypatch):
    monkeypatch.delenv(ENV_SOLVER_COMMAND, raising=False)
    assert SolverConfig.from_environment().backend == "embedded"
    monkeypatch.setenv(ENV_SOLVER_COMMAND, "my-solver {lp} -o {sol}")
    cfg = SolverConfig.from_environment()
    assert cfg.backend == "external"
    assert cfg.command == "my-solver {lp} -o {sol}"


def test_unknown_backend_rejected():
    with pytest.raises(ValueError):
        solve(knapsack(), solver=SolverConfig(backend="simplex"))


def test_external_via_bundled_script():
    cfg = SolverConfig(backend="external", command=DEFAULT_EXTERNAL_TEMPLATE)
    sol = solve(knapsack(), gap=0.0, solver=cfg)
    assert sol.status is SolveStatus.OPTIMAL
    assert sol.objective == -8.0
    assert sol.solver_name == "mplsotn-lp-solve"


def test_external_solver_missing_or_misconfigured():
    missing = SolverConfig(backend="external",
                           command="definitely-not-a-solver {lp} -o {sol}")
    sol = solve(knapsack(), solver=missing)
    assert sol.status is SolveStatus.NO_SOLVER
    assert "not found" in sol.message

    unset = SolverConfig(backend="external", command=None)
    assert solve(knapsack(), solver=unset).status is SolveStatus.NO_SOLVER

    bad_template = SolverConfig(backend="external", command="solver-without-slots")
    sol = solve(knapsack(), solver=bad_template)
    assert sol.status is SolveStatus.NO_SOLVER
    assert "{lp}" in sol.message


def test_external_incumbents_are_feasibility_checked(tmp_path):
    # a "solver" that always answers x=1 against a model that forbids it
    script = tmp_path / "liar.py"
    script.write_text(
        "import sys\n"
        "out = sys.argv[2]\n"
        "open(out, 'w').write('# status optimal\\nx 1\\n')\n"
    )
    m = MilpModel("guarded")
    m.add_variable("x", VarKind.BINARY)
    m.add_objective_term("x", -1)
    m.add_constraint("ban", [("x", 1)], "<=", 0)
    cfg = SolverConfig(backend="external",
                       command=f"{sys.executable} {script} {{lp}} {{sol}}")
    sol = solve(m, solver=cfg)
    assert sol.status is SolveStatus.ERROR
    assert "infeasible point" in sol.message


def test_keep_artifacts_writes_stage_files(tmp_path):
    cfg = SolverConfig(keep_artifacts_dir=tmp_path / "art")
    sol = solve(knapsack(), solver=cfg, stage="working-mpls")
    assert sol.status is SolveStatus.OPTIMAL

    base = tmp_path / "art"
    lp = (base / "working-mpls.lp").read_text()
    assert lp.startswith("\\ model: knap")
    meta = json.loads((base / "working-mpls.meta.json").read_text())
    assert meta["variables"] == {"a": "binary", "b": "binary", "c": "binary"}
    body = (base / "working-mpls.sol").read_text()
    assert "# status optimal" in body and "a 1" in body


def test_keep_artifacts_on_external_backend(tmp_path):
    cfg = SolverConfig(backend="external", command=DEFAULT_EXTERNAL_TEMPLATE,
                       keep_artifacts_dir=tmp_path)
    sol = solve(knapsack(), solver=cfg, stage="s2")
    assert sol.status is SolveStatus.OPTIMAL
    for suffix in (".lp", ".meta.json", ".sol"):
        assert (tmp_path / f"s2{suffix}").exists()
