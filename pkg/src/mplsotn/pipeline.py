"""Runs the staged optimization and turns solver output into designs.

The sequential approach chains two to four models, each consuming the decoded
results of the previous one. The integrated approach merges each MPLS stage
with its optical counterpart. Decoding is strict: a solution that does not
describe simple paths is reported as an error, never patched up. The one
exception is optical protection routes under shared restoration, where the
solver may legally return zero-cost cycle slack; those arcs are discarded
(dropping them can only relax wavelength usage, and an accounting check below
still ties the final design back to the stage objectives).
"""

from __future__ import annotations

from fractions import Fraction
from typing import Mapping, Optional, Sequence

from . import evaluate
from .formulation import (
    ProtectionPlan,
    StageModel,
    build_integrated_protection,
    build_integrated_working,
    build_lightpath_protection,
    build_lightpath_routing_seq,
    build_protection_mpls,
    build_working_mpls,
    compute_protection_plan,
)
from .milp import SolveStatus, Solution
from .model import (
    CostModel,
    Design,
    DesignConfig,
    Instance,
    InvalidInstanceError,
    Lightpath,
    LightpathKey,
    LightpathRole,
    LogicalTopology,
    LspRoute,
    StageTrace,
    Survivability,
    instance_hash,
    validate_instance,
)
from .solvers import SolverConfig, solve

S_WORK = "working-mpls"
S_PROT = "protection-mpls"
S_ROUTE = "lightpath-routing"
S_OPROT = "lightpath-protection"
S_IWORK = "integrated-working"
S_IPROT = "integrated-protection"

MIN_BUDGET_SHARE = 0.10


class PipelineError(RuntimeError):
    pass


class SolverUnavailableError(PipelineError):
    pass


class DecodeError(PipelineError):
    pass


class StageInfeasibleError(PipelineError):
    def __init__(self, stage: str, status: str, traces: Sequence[StageTrace],
                 message: str = ""):
        self.stage = stage
        self.status = status
        self.traces = tuple(traces)
        detail = f" ({message})" if message else ""
        super().__init__(f"stage {stage!r} ended {status}{detail}")


def default_cost_model(instance: Instance) -> CostModel:
    return CostModel(lightpath_capacity_gbps=instance.lightpath_capacity_gbps)


def stage_names(instance: Instance, cfg: DesignConfig) -> tuple[str, ...]:
    opt = cfg.survivability
    if cfg.approach.value == "integrated":
        if opt is Survivability.NONE:
            return (S_IWORK,)
        return (S_IWORK, S_IPROT)
    if opt is Survivability.NONE:
        return (S_WORK, S_ROUTE)
    if opt is Survivability.SINGLE_LAYER:
        return (S_WORK, S_PROT, S_ROUTE)
    return (S_WORK, S_PROT, S_ROUTE, S_OPROT)


def allocate_budgets(instance: Instance, cfg: DesignConfig) -> dict[str, float]:
    """Split the wall-clock limit across stages by estimated model size.

    Weights come from closed-form variable-count estimates; every stage keeps
    at least a 10% share so a cheap stage cannot be starved into timeout by a
    noisy estimate.
    """
    n = len(instance.topology.nodes)
    arcs = n * (n - 1)
    edges = len(instance.topology.links)
    k = max(1, len(instance.traffic.demands))
    q = cfg.effective_q_max(instance)
    mpls = q * arcs * (k + 1)
    optical = q * arcs * 2 * edges
    weight = {
        S_WORK: mpls,
        S_PROT: mpls,
        S_ROUTE: optical,
        S_OPROT: optical,
        S_IWORK: mpls + optical,
        S_IPROT: mpls + 3 * optical,
    }
    names = stage_names(instance, cfg)
    total = sum(weight[s] for s in names)
    shares = {s: max(weight[s] / total, MIN_BUDGET_SHARE) for s in names}
    norm = sum(shares.values())
    return {s: cfg.time_limit_seconds * shares[s] / norm for s in names}


# -- decoding -------------------------------------------------------------------


def _is_one(values: Mapping[str, Fraction], name: Optional[str]) -> bool:
    return name is not None and values.get(name, Fraction(0)) == 1


def decode_slot_path(
    sol: Solution,
    sm: StageModel,
    family: str,
    k: int,
    source: int,
    destination: int,
) -> tuple[LightpathKey, ...]:
    """Selected slot arcs of one LSP -> its ordered logical path."""
    outgoing: dict[int, list[tuple[int, int]]] = {}
    for key, name in sm.index.items(family):
        if key[0] != k or not _is_one(sol.values, name):
            continue
        _k, i, j, q = key
        outgoing.setdefault(i, []).append((j, q))

    path: list[LightpathKey] = []
    visited = {source}
    cur = source
    while cur != destination:
        nxt = outgoing.pop(cur, [])
        if len(nxt) != 1:
            raise DecodeError(
                f"{sm.stage}: LSP {k} flow at router {cur} has "
                f"{len(nxt)} outgoing arcs, expected 1"
            )
        j, q = nxt[0]
        if j in visited:
            raise DecodeError(f"{sm.stage}: LSP {k} path revisits router {j}")
        path.append((cur, j, q))
        visited.add(j)
        cur = j
    if any(outgoing.values()):
        raise DecodeError(f"{sm.stage}: LSP {k} solution has disconnected flow")
    return tuple(path)


def decode_route(
    sol: Solution,
    sm: StageModel,
    family: str,
    slot: LightpathKey,
    lenient: bool = False,
) -> tuple[int, ...]:
    """Selected physical arcs of one lightpath -> its node route."""
    origin, termination, _q = slot
    outgoing: dict[int, list[int]] = {}
    for key, name in sm.index.items(family):
        if key[0] != slot or not _is_one(sol.values, name):
            continue
        a, b = key[1]
        outgoing.setdefault(a, []).append(b)

    route = [origin]
    visited = {origin}
    cur = origin
    while cur != termination:
        nxt = outgoing.pop(cur, [])
        if len(nxt) != 1:
            raise DecodeError(
                f"{sm.stage}: lightpath {slot} route branches at node {cur}"
            )
        cur = nxt[0]
        if cur in visited:
            raise DecodeError(f"{sm.stage}: lightpath {slot} route revisits {cur}")
        visited.add(cur)
        route.append(cur)
    if any(outgoing.values()) and not lenient:
        raise DecodeError(f"{sm.stage}: lightpath {slot} has disconnected flow")
    return tuple(route)


def _decode_slots(sol: Solution, sm: StageModel, family: str
                  ) -> tuple[LightpathKey, ...]:
    return tuple(sorted(
        key for key, name in sm.index.items(family) if _is_one(sol.values, name)
    ))


def _check_unused_routes(sol: Solution, sm: StageModel, family: str,
                         open_slots: frozenset[LightpathKey]) -> None:
    # a slot that does not exist must not hold wavelengths
    for key, name in sm.index.items(family):
        if key[0] not in open_slots and _is_one(sol.values, name):
            raise DecodeError(
                f"{sm.stage}: closed slot {key[0]} occupies fiber arc {key[1]}"
            )


# -- stage execution ------------------------------------------------------------


def _run_stage(
    sm: StageModel,
    cfg: DesignConfig,
    budget: float,
    solver: Optional[SolverConfig],
    traces: list[StageTrace],
) -> Solution:
    sol = solve(
        sm.model,
        gap=cfg.optimality_gap,
        time_limit=budget,
        solver=solver,
        stage=sm.stage,
    )
    exact = sm.model.objective_value(sol.values) if sol.status.has_solution else None
    traces.append(StageTrace(
        stage=sm.stage,
        variables=len(sm.model.variables),
        constraints=len(sm.model.constraints),
        status=sol.status.value,
        objective=sol.objective,
        objective_exact=exact,
        gap=sol.gap,
        wall_seconds=sol.wall_seconds,
        time_budget_seconds=budget,
        solver=sol.solver_name,
    ))
    if sol.status is SolveStatus.NO_SOLVER:
        raise SolverUnavailableError(sol.message or "no MILP solver available")
    if not sol.status.has_solution:
        raise StageInfeasibleError(sm.stage, sol.status.value, traces, sol.message)
    return sol


# -- materialization --------------------------------------------------------------


def _materialize(
    instance: Instance,
    cfg: DesignConfig,
    cost_model: CostModel,
    work_slots: Sequence[LightpathKey],
    spare_slots: Sequence[LightpathKey],
    working_paths: Mapping[str, tuple[LightpathKey, ...]],
    protection_paths: Mapping[str, tuple[LightpathKey, ...]],
    carrier_routes: Mapping[LightpathKey, tuple[int, ...]],
    protection_routes: Mapping[LightpathKey, tuple[int, ...]],
    traces: Sequence[StageTrace],
) -> Design:
    lightpaths: list[Lightpath] = []
    for slot in sorted(work_slots):
        lightpaths.append(Lightpath(slot[0], slot[1], slot[2],
                                    LightpathRole.WORK_CARRIER,
                                    carrier_routes[slot]))
    for slot in sorted(spare_slots):
        lightpaths.append(Lightpath(slot[0], slot[1], slot[2],
                                    LightpathRole.SPARE_CARRIER,
                                    carrier_routes[slot]))
    for slot in sorted(protection_routes):
        lightpaths.append(Lightpath(slot[0], slot[1], slot[2],
                                    LightpathRole.OPTICAL_PROTECTION,
                                    protection_routes[slot]))
    routes = tuple(
        LspRoute(
            demand_id=d.id,
            working=working_paths[d.id],
            protection=protection_paths.get(d.id),
        )
        for d in instance.traffic.demands
    )
    logical = LogicalTopology(
        lightpaths=tuple(lightpaths),
        router_interfaces=cfg.effective_interfaces(instance),
    )
    metrics, cost = evaluate.compute_metrics(
        instance, logical.lightpaths, routes, cost_model,
        cfg.survivability, cfg.transit_double_count,
    )
    design = Design(
        instance_name=instance.name,
        instance_hash=instance_hash(instance),
        config=cfg,
        cost_model=cost_model,
        logical=logical,
        lsp_routes=routes,
        metrics=metrics,
        cost=cost,
        traces=tuple(traces),
    )
    _check_accounting(design)
    return design


def _check_accounting(design: Design) -> None:
    """Decoded-design cost must reproduce the stage objectives.

    The stage models and the design accounting are written independently; at
    gap zero their totals must agree exactly, and at any gap the decoded
    design can never cost more than what the solver reported.
    """
    exact = [t.objective_exact for t in design.traces]
    if any(e is None for e in exact):
        return
    stage_total = sum(exact, Fraction(0))
    total = design.cost.total
    if total > stage_total:
        raise PipelineError(
            f"accounting mismatch: design costs {float(total):.6g} but stages "
            f"reported {float(stage_total):.6g}"
        )
    all_optimal = all(t.status == SolveStatus.OPTIMAL.value for t in design.traces)
    if design.config.optimality_gap == 0 and all_optimal and total != stage_total:
        raise PipelineError(
            f"accounting mismatch at optimality: design {float(total):.6g} "
            f"!= stages {float(stage_total):.6g}"
        )


# -- the two approaches -----------------------------------------------------------


def _run_sequential(
    instance: Instance,
    cfg: DesignConfig,
    cost_model: CostModel,
    solver: Optional[SolverConfig],
) -> Design:
    budgets = allocate_budgets(instance, cfg)
    traces: list[StageTrace] = []
    kmap = {d.id: k for k, d in enumerate(instance.traffic.demands)}

    sm = build_working_mpls(instance, cfg, cost_model)
    sol = _run_stage(sm, cfg, budgets[S_WORK], solver, traces)
    work_slots = _decode_slots(sol, sm, "wb")
    working_paths = {
        d.id: decode_slot_path(sol, sm, "wd", kmap[d.id], d.source, d.destination)
        for d in instance.traffic.demands
    }

    plan = compute_protection_plan(instance, cfg, working_paths)
    spare_slots: tuple[LightpathKey, ...] = ()
    protection_paths: dict[str, tuple[LightpathKey, ...]] = {}
    if cfg.survivability is not Survivability.NONE:
        sm = build_protection_mpls(
            instance, cfg, cost_model, plan, work_slots, working_paths
        )
        sol = _run_stage(sm, cfg, budgets[S_PROT], solver, traces)
        spare_slots = _decode_slots(sol, sm, "pb")
        demand_by_id = {d.id: d for d in instance.traffic.demands}
        for did in plan.protected_demands:
            d = demand_by_id[did]
            protection_paths[did] = decode_slot_path(
                sol, sm, "pd", kmap[did], d.source, d.destination
            )

    sm = build_lightpath_routing_seq(
        instance, cfg, cost_model, work_slots, spare_slots,
        plan, working_paths, protection_paths,
    )
    sol = _run_stage(sm, cfg, budgets[S_ROUTE], solver, traces)
    carrier_routes = {
        slot: decode_route(sol, sm, "wr", slot) for slot in work_slots
    }
    carrier_routes.update(
        (slot, decode_route(sol, sm, "sr", slot)) for slot in spare_slots
    )

    protection_routes: dict[LightpathKey, tuple[int, ...]] = {}
    if cfg.survivability.multilayer:
        sm = build_lightpath_protection(
            instance, cfg, cost_model, plan, carrier_routes,
            work_slots, spare_slots, working_paths, protection_paths,
        )
        sol = _run_stage(sm, cfg, budgets[S_OPROT], solver, traces)
        for slot in plan.protected_carriers(work_slots, spare_slots):
            protection_routes[slot] = decode_route(sol, sm, "pr", slot,
                                                   lenient=True)

    return _materialize(
        instance, cfg, cost_model, work_slots, spare_slots,
        working_paths, protection_paths, carrier_routes, protection_routes,
        traces,
    )


def _run_integrated(
    instance: Instance,
    cfg: DesignConfig,
    cost_model: CostModel,
    solver: Optional[SolverConfig],
) -> Design:
    budgets = allocate_budgets(instance, cfg)
    traces: list[StageTrace] = []
    kmap = {d.id: k for k, d in enumerate(instance.traffic.demands)}

    sm = build_integrated_working(instance, cfg, cost_model)
    sol = _run_stage(sm, cfg, budgets[S_IWORK], solver, traces)
    work_slots = _decode_slots(sol, sm, "wb")
    _check_unused_routes(sol, sm, "wr", frozenset(work_slots))
    working_paths = {
        d.id: decode_slot_path(sol, sm, "wd", kmap[d.id], d.source, d.destination)
        for d in instance.traffic.demands
    }
    carrier_routes = {
        slot: decode_route(sol, sm, "wr", slot) for slot in work_slots
    }

    spare_slots: tuple[LightpathKey, ...] = ()
    protection_paths: dict[str, tuple[LightpathKey, ...]] = {}
    protection_routes: dict[LightpathKey, tuple[int, ...]] = {}
    if cfg.survivability is not Survivability.NONE:
        plan = compute_protection_plan(instance, cfg, working_paths)
        sm = build_integrated_protection(
            instance, cfg, cost_model, plan, work_slots, working_paths,
            carrier_routes,
        )
        sol = _run_stage(sm, cfg, budgets[S_IPROT], solver, traces)
        spare_slots = _decode_slots(sol, sm, "pb")
        _check_unused_routes(sol, sm, "sr", frozenset(spare_slots))
        demand_by_id = {d.id: d for d in instance.traffic.demands}
        for did in plan.protected_demands:
            d = demand_by_id[did]
            protection_paths[did] = decode_slot_path(
                sol, sm, "pd", kmap[did], d.source, d.destination
            )
        carrier_routes.update(
            (slot, decode_route(sol, sm, "sr", slot)) for slot in spare_slots
        )
        for slot in sm.info.get("protected_work", ()):
            protection_routes[slot] = decode_route(sol, sm, "pr", slot,
                                                   lenient=True)
        if plan.protect_spare_carriers:
            for slot in spare_slots:
                protection_routes[slot] = decode_route(sol, sm, "pr2", slot,
                                                       lenient=True)

    return _materialize(
        instance, cfg, cost_model, work_slots, spare_slots,
        working_paths, protection_paths, carrier_routes, protection_routes,
        traces,
    )


def run_design(
    instance: Instance,
    cfg: DesignConfig,
    cost_model: Optional[CostModel] = None,
    solver: Optional[SolverConfig] = None,
) -> Design:
    """Validate, optimize stage by stage, decode, and account.

    With ``auto_grow_q`` set, an infeasible stage is retried once with one
    more parallel lightpath slot per node pair.
    """
    violations = validate_instance(instance, cfg)
    if violations:
        raise InvalidInstanceError(violations)
    cm = cost_model if cost_model is not None else default_cost_model(instance)
    runner = (_run_integrated if cfg.approach.value == "integrated"
              else _run_sequential)
    try:
        return runner(instance, cfg, cm, solver)
    except StageInfeasibleError:
        if not cfg.auto_grow_q:
            raise
        grown = cfg.grown(instance)
        return runner(instance, grown, cm, solver)


def manifest_dict(design: Design) -> dict:
    """Reproducibility record: what ran, how long, how close to optimal."""
    return {
        "instance": {"name": design.instance_name, "hash": design.instance_hash},
        "configuration": {
            "survivability": design.config.survivability.value,
            "approach": design.config.approach.value,
            "optimality_gap": design.config.optimality_gap,
            "time_limit_seconds": design.config.time_limit_seconds,
            "transit_double_count": design.config.transit_double_count,
        },
        "cost": {
            "transit": str(design.cost.transit),
            "mpls": str(design.cost.mpls),
            "optical": str(design.cost.optical),
            "total": str(design.cost.total),
            "total_float": float(design.cost.total),
        },
        "metrics": {
            "transit_gbps": float(design.metrics.transit_total_gbps),
            "working_lightpaths": design.metrics.working_lightpaths,
            "spare_lightpaths": design.metrics.spare_lightpaths,
            "protection_lightpaths": design.metrics.protection_lightpaths,
            "wavelength_total": design.metrics.wavelength_total,
            "extra_wavelengths": design.metrics.extra_wavelengths,
            "reuse_factor": (None if design.metrics.reuse_factor is None
                             else float(design.metrics.reuse_factor)),
        },
        "stages": [
            {
                "stage": t.stage,
                "variables": t.variables,
                "constraints": t.constraints,
                "status": t.status,
                "objective": t.objective,
                "achieved_gap": t.gap,
                "wall_seconds": round(t.wall_seconds, 6),
                "budget_seconds": round(t.time_budget_seconds, 6),
                "solver": t.solver,
            }
            for t in design.traces
        ],
        "wall_seconds_total": round(sum(t.wall_seconds for t in design.traces), 6),
    }
