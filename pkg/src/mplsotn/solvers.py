"""Solver backends behind one contract.

``solve`` takes a model plus gap/time limits and returns a ``Solution``. Two
backends exist: an embedded one (HiGHS through scipy) that needs no external
binaries, and an external-process one that writes the model to an LP file,
runs a configurable command template, and reads the solver's variable-value
output back. The bundled ``mplsotn-lp-solve`` script makes the external path
usable on machines with no system solver installed.

Every incumbent returned by either backend is feasibility-checked against the
model (1e-6 absolute) before being handed to callers.
"""

from __future__ import annotations

import os
import shlex
import shutil
import subprocess
import tempfile
import time
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Optional

import numpy as np
import scipy
import scipy.sparse
from scipy.optimize import Bounds, LinearConstraint, milp as scipy_milp

from .milp import (
    MilpModel,
    Solution,
    SolveStatus,
    VarKind,
    check_solution,
    read_solution,
    snap_values,
    write_metadata,
    write_model,
    write_solution,
)

ENV_SOLVER_COMMAND = "MPLSOTN_SOLVER_CMD"

# Template placeholders: {lp} input model, {sol} output file, plus the
# requested {gap} and {time_limit}. The default points at the bundled script.
DEFAULT_EXTERNAL_TEMPLATE = (
    "mplsotn-lp-solve {lp} -o {sol} --gap {gap} --time-limit {time_limit}"
)

# Solvers may overshoot their deadline while wrapping up; this is the slack
# the driver (and the tests) allow on top of a stage's time budget.
TIME_LIMIT_SLACK_FRACTION = 0.10
TIME_LIMIT_SLACK_FLOOR_SECONDS = 1.0

OPTIMAL_GAP_EPSILON = 1e-9


@dataclass(frozen=True)
class SolverConfig:
    backend: str = "embedded"  # "embedded" | "external"
    command: Optional[str] = None
    keep_artifacts_dir: Optional[Path] = None

    @staticmethod
    def from_environment() -> "SolverConfig":
        cmd = os.environ.get(ENV_SOLVER_COMMAND)
        if cmd:
            return SolverConfig(backend="external", command=cmd)
        return SolverConfig()


def hard_deadline(time_limit: Optional[float]) -> Optional[float]:
    if time_limit is None:
        return None
    return time_limit * (1 + TIME_LIMIT_SLACK_FRACTION) + TIME_LIMIT_SLACK_FLOOR_SECONDS


def solve(model: MilpModel, *, gap: float = 0.0,
          time_limit: Optional[float] = None,
          solver: Optional[SolverConfig] = None,
          stage: str = "model") -> Solution:
    solver = solver or SolverConfig()
    start = time.perf_counter()

    if not model.variables:
        # nothing to decide; the objective is its constant
        sol = Solution(
            status=SolveStatus.OPTIMAL,
            objective=float(model.objective_constant),
            values={},
            gap=0.0,
            solver_name="trivial",
        )
        _keep_artifacts(model, sol, solver, stage)
        return sol

    if solver.backend == "embedded":
        sol = _solve_embedded(model, gap=gap, time_limit=time_limit)
    elif solver.backend == "external":
        sol = _solve_external(model, gap=gap, time_limit=time_limit, solver=solver,
                              stage=stage)
    else:
        raise ValueError(f"unknown solver backend {solver.backend!r}")

    wall = time.perf_counter() - start
    sol = Solution(
        status=sol.status, objective=sol.objective, values=sol.values,
        gap=sol.gap, wall_seconds=wall, solver_name=sol.solver_name,
        message=sol.message,
    )

    if sol.status.has_solution:
        bad = check_solution(model, sol.values)
        if bad:
            sol = Solution(
                status=SolveStatus.ERROR, objective=None, values={}, gap=None,
                wall_seconds=wall, solver_name=sol.solver_name,
                message="solver returned an infeasible point: " + "; ".join(bad[:5]),
            )
    _keep_artifacts(model, sol, solver, stage)
    return sol


def _keep_artifacts(model: MilpModel, sol: Solution, solver: SolverConfig,
                    stage: str) -> None:
    if solver.keep_artifacts_dir is None:
        return
    d = Path(solver.keep_artifacts_dir)
    d.mkdir(parents=True, exist_ok=True)
    (d / f"{stage}.lp").write_text(write_model(model))
    (d / f"{stage}.meta.json").write_text(write_metadata(model))
    (d / f"{stage}.sol").write_text(write_solution(sol))


def _solve_embedded(model: MilpModel, *, gap: float,
                    time_limit: Optional[float]) -> Solution:
    names = [v.name for v in model.variables]
    index = {n: i for i, n in enumerate(names)}
    n = len(names)

    c = np.zeros(n)
    for var, coeff in model.objective_terms:
        c[index[var]] = float(coeff)

    integrality = np.array(
        [0 if v.kind is VarKind.CONTINUOUS else 1 for v in model.variables]
    )
    lower = np.array([float(v.lower) for v in model.variables])
    upper = np.array([float(v.upper) for v in model.variables])

    rows: list[int] = []
    cols: list[int] = []
    data: list[float] = []
    lo: list[float] = []
    hi: list[float] = []
    for r, con in enumerate(model.constraints):
        for var, coeff in con.terms:
            rows.append(r)
            cols.append(index[var])
            data.append(float(coeff))
        rhs = float(con.rhs)
        if con.sense == "<=":
            lo.append(-np.inf)
            hi.append(rhs)
        elif con.sense == ">=":
            lo.append(rhs)
            hi.append(np.inf)
        else:
            lo.append(rhs)
            hi.append(rhs)

    n_rows = len(model.constraints)
    matrix = scipy.sparse.csr_matrix(
        (data, (rows, cols)), shape=(n_rows, n)
    )
    constraints = LinearConstraint(matrix, np.array(lo), np.array(hi)) \
        if n_rows else []

    options: dict = {"mip_rel_gap": float(gap)}
    if time_limit is not None:
        options["time_limit"] = float(time_limit)

    res = scipy_milp(
        c=c,
        constraints=constraints,
        integrality=integrality,
        bounds=Bounds(lower, upper),
        options=options,
    )

    solver_name = f"highs(scipy-{scipy.__version__})"
    if res.status == 2:
        return Solution(SolveStatus.INFEASIBLE, None, {}, None,
                        solver_name=solver_name, message=res.message)
    if res.status == 3:
        return Solution(SolveStatus.UNBOUNDED, None, {}, None,
                        solver_name=solver_name, message=res.message)
    if res.x is None:
        return Solution(SolveStatus.ERROR, None, {}, None,
                        solver_name=solver_name,
                        message=f"no incumbent: {res.message}")

    raw = {name: float(x) for name, x in zip(names, res.x)}
    snapped, problems = snap_values(model, raw)
    if problems:
        return Solution(SolveStatus.ERROR, None, {}, None,
                        solver_name=solver_name,
                        message="; ".join(problems[:5]))

    achieved = getattr(res, "mip_gap", None)
    achieved = float(achieved) if achieved is not None and np.isfinite(achieved) else None
    if res.status == 0:
        status = (
            SolveStatus.OPTIMAL
            if achieved is None or achieved <= OPTIMAL_GAP_EPSILON
            else SolveStatus.FEASIBLE_WITHIN_GAP
        )
    elif res.status == 1:
        status = SolveStatus.TIME_LIMIT_FEASIBLE
    else:
        return Solution(SolveStatus.ERROR, None, {}, None,
                        solver_name=solver_name, message=res.message)

    exact = model.objective_value(snapped)
    return Solution(
        status=status,
        objective=float(exact),
        values=snapped,
        gap=achieved,
        solver_name=solver_name,
    )


def _render_command(template: str, *, lp: Path, sol: Path, gap: float,
                    time_limit: Optional[float]) -> list[str]:
    fields = {
        "lp": str(lp),
        "sol": str(sol),
        "gap": repr(float(gap)),
        "time_limit": repr(float(time_limit)) if time_limit is not None else "inf",
    }
    argv = []
    for token in shlex.split(template):
        try:
            argv.append(token.format(**fields))
        except (KeyError, IndexError) as exc:
            raise ValueError(f"bad solver command token {token!r}: {exc}") from exc
    return argv


def _solve_external(model: MilpModel, *, gap: float, time_limit: Optional[float],
                    solver: SolverConfig, stage: str) -> Solution:
    if not solver.command:
        return Solution(
            SolveStatus.NO_SOLVER, None, {}, None,
            message=(
                "no external solver command configured; pass --solver-cmd or set "
                f"${ENV_SOLVER_COMMAND}, e.g. {DEFAULT_EXTERNAL_TEMPLATE!r}"
            ),
        )
    if "{lp}" not in solver.command or "{sol}" not in solver.command:
        return Solution(
            SolveStatus.NO_SOLVER, None, {}, None,
            message="solver command template must use {lp} and {sol} placeholders",
        )

    workdir = Path(tempfile.mkdtemp(prefix="mplsotn-"))
    lp_path = workdir / f"{stage}.lp"
    sol_path = workdir / f"{stage}.sol"
    lp_path.write_text(write_model(model))
    (workdir / f"{stage}.meta.json").write_text(write_metadata(model))
    argv = _render_command(solver.command, lp=lp_path, sol=sol_path, gap=gap,
                           time_limit=time_limit)
    solver_name = Path(argv[0]).name

    try:
        proc = subprocess.run(
            argv,
            capture_output=True,
            text=True,
            timeout=hard_deadline(time_limit),
        )
    except FileNotFoundError:
        return Solution(
            SolveStatus.NO_SOLVER, None, {}, None, solver_name=solver_name,
            message=f"solver executable {argv[0]!r} not found on PATH",
        )
    except subprocess.TimeoutExpired:
        if sol_path.exists():
            sol = read_solution(sol_path.read_text(), model)
            if sol.status.has_solution:
                return Solution(SolveStatus.TIME_LIMIT_FEASIBLE, sol.objective,
                                sol.values, sol.gap, solver_name=solver_name)
        return Solution(SolveStatus.ERROR, None, {}, None, solver_name=solver_name,
                        message="external solver exceeded the hard deadline")
    finally:
        if solver.keep_artifacts_dir is not None:
            dest = Path(solver.keep_artifacts_dir)
            dest.mkdir(parents=True, exist_ok=True)
            for f in workdir.glob("*"):
                shutil.copy2(f, dest / f.name)

    if not sol_path.exists():
        detail = (proc.stderr or proc.stdout or "").strip()[:300]
        if proc.returncode != 0:
            return Solution(SolveStatus.ERROR, None, {}, None, solver_name=solver_name,
                            message=f"solver exited {proc.returncode}: {detail}")
        return Solution(SolveStatus.ERROR, None, {}, None, solver_name=solver_name,
                        message=f"solver wrote no solution file: {detail}")

    sol = read_solution(sol_path.read_text(), model)
    # re-apply the objective constant for dialects that report bare objectives
    if sol.status.has_solution:
        exact = model.objective_value(sol.values)
        sol = Solution(sol.status, float(exact), sol.values, sol.gap,
                       solver_name=solver_name, message=sol.message)
    else:
        sol = Solution(sol.status, sol.objective, sol.values, sol.gap,
                       solver_name=solver_name, message=sol.message)
    return sol
