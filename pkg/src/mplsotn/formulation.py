"""Stage models for the two-layer design problem.

Each builder emits one MILP over a documented variable family set:

==========  =================================================================
family      meaning
==========  =================================================================
``wb``      lightpath slot (i,j,q) holds a carrier for working LSPs
``pb``      lightpath slot holds a carrier for protection LSPs
``wd``      demand k's working LSP crosses slot (i,j,q)
``pd``      demand k's protection LSP crosses slot (i,j,q)
``wr``      work carrier (i,j,q) routed over physical arc (m,n)
``sr``      spare carrier (i,j,q) routed over physical arc (m,n)
``pr``      optical protection lightpath for carrier (i,j,q) over arc (m,n)
``x``       link's extra wavelengths beyond the spare pool (shared restoration)
``brsy``    link is used by a spare carrier whose protection LSP guards a
            demand transiting a given router (pool-exclusion helper)
==========  =================================================================

The sequential approach solves four of these in order (working MPLS,
protection MPLS, lightpath routing, lightpath protection); the integrated
approach merges each MPLS stage with its optical stage. Constraint rows are
tagged with functional names (``working-flow``, ``grooming-capacity``, ...)
for the model linter and kept artifacts.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence

from .milp import MilpModel, VarKind
from .model import (
    CostModel,
    DesignConfig,
    Instance,
    LightpathKey,
    Link,
    LspDemand,
    Survivability,
    normalized_link,
)

Slot = LightpathKey
Arc = tuple[int, int]


class VarIndex:
    """family -> index tuple -> variable name."""

    def __init__(self) -> None:
        self._families: dict[str, dict[tuple, str]] = {}

    def add(self, family: str, key: tuple, name: str) -> str:
        self._families.setdefault(family, {})[key] = name
        return name

    def get(self, family: str, key: tuple) -> Optional[str]:
        return self._families.get(family, {}).get(key)

    def items(self, family: str) -> tuple[tuple[tuple, str], ...]:
        return tuple(self._families.get(family, {}).items())

    def count(self, family: str) -> int:
        return len(self._families.get(family, {}))

    def families(self) -> tuple[str, ...]:
        return tuple(self._families)


@dataclass(frozen=True)
class StageModel:
    stage: str
    model: MilpModel
    index: VarIndex
    info: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ProtectionPlan:
    """What the chosen survivability option demands of the design.

    ``protected_demands`` lists LSPs that need a protection LSP.
    ``excluded_routers`` bars each protection LSP from its working path's
    intermediate routers. ``lsp_pair_disjointness`` is the physical
    disjointness owed between a demand's working and protection LSP paths
    ("none", "node", or "node-link"). Carrier-level optical protection and
    wavelength sharing are flagged separately.
    """

    survivability: Survivability
    protected_demands: tuple[str, ...] = ()
    excluded_routers: tuple[tuple[str, tuple[int, ...]], ...] = ()
    lsp_pair_disjointness: str = "none"
    protect_work_carriers: bool = False
    protect_spare_carriers: bool = False
    brs_sharing: bool = False

    def excluded_for(self, demand_id: str) -> tuple[int, ...]:
        for did, routers in self.excluded_routers:
            if did == demand_id:
                return routers
        return ()

    def protected_carriers(
        self, work_slots: Sequence[Slot], spare_slots: Sequence[Slot]
    ) -> tuple[Slot, ...]:
        out: list[Slot] = []
        if self.protect_work_carriers:
            out.extend(work_slots)
        if self.protect_spare_carriers:
            out.extend(spare_slots)
        return tuple(sorted(out))


def compute_protection_plan(
    instance: Instance,
    cfg: DesignConfig,
    working_paths: Mapping[str, tuple[Slot, ...]],
) -> ProtectionPlan:
    """Derive protection requirements from the routed working layer."""
    opt = cfg.survivability
    if opt is Survivability.NONE:
        return ProtectionPlan(survivability=opt)

    def intermediates(path: tuple[Slot, ...]) -> tuple[int, ...]:
        return tuple(j for (_, j, _) in path[:-1])

    if opt is Survivability.SINGLE_LAYER:
        protected = tuple(d.id for d in instance.traffic.demands)
        return ProtectionPlan(
            survivability=opt,
            protected_demands=protected,
            excluded_routers=tuple(
                (did, intermediates(working_paths[did])) for did in protected
            ),
            lsp_pair_disjointness="node-link",
        )

    # multilayer options protect single-hop LSPs optically, so only
    # multi-hop LSPs carry an MPLS-level protection path
    protected = tuple(
        d.id for d in instance.traffic.demands if len(working_paths[d.id]) >= 2
    )
    excluded = tuple((did, intermediates(working_paths[did])) for did in protected)
    if opt is Survivability.MULTI_DOUBLE:
        return ProtectionPlan(
            survivability=opt,
            protected_demands=protected,
            excluded_routers=excluded,
            lsp_pair_disjointness="none",
            protect_work_carriers=True,
            protect_spare_carriers=True,
        )
    if opt is Survivability.MULTI_SPARE_UNPROTECTED:
        return ProtectionPlan(
            survivability=opt,
            protected_demands=protected,
            excluded_routers=excluded,
            lsp_pair_disjointness="node",
            protect_work_carriers=True,
        )
    if opt is Survivability.MULTI_INTERLAYER_BRS:
        return ProtectionPlan(
            survivability=opt,
            protected_demands=protected,
            excluded_routers=excluded,
            lsp_pair_disjointness="node",
            protect_work_carriers=True,
            brs_sharing=True,
        )
    raise ValueError(f"unhandled survivability {opt}")


# -- shared pieces -----------------------------------------------------------


def _slots(instance: Instance, cfg: DesignConfig) -> tuple[Slot, ...]:
    nodes = instance.topology.nodes
    q_max = cfg.effective_q_max(instance)
    return tuple(
        (i, j, q)
        for i in nodes
        for j in nodes
        if i != j
        for q in range(1, q_max + 1)
    )


def _transit_coeff(costs: CostModel, demand: LspDemand) -> Fraction:
    return costs.transit_cost_per_gbps * demand.bandwidth_gbps


def _slot_name(prefix: str, slot: Slot) -> str:
    i, j, q = slot
    return f"{prefix}_{i}_{j}_{q}"


def _route_name(prefix: str, slot: Slot, arc: Arc) -> str:
    i, j, q = slot
    return f"{prefix}_{i}_{j}_{q}__{arc[0]}_{arc[1]}"


def _demand_index(instance: Instance) -> dict[str, int]:
    return {d.id: k for k, d in enumerate(instance.traffic.demands)}


def _add_lsp_flow_rows(
    m: MilpModel,
    index: VarIndex,
    family: str,
    k: int,
    demand: LspDemand,
    nodes: Iterable[int],
    tag: str,
    row_prefix: str,
    skip_nodes: frozenset[int] = frozenset(),
) -> None:
    """One flow-conservation row per eligible node for an LSP's path."""
    for i in nodes:
        if i in skip_nodes:
            continue
        terms: list[tuple[str, int]] = []
        for key, name in index.items(family):
            kk, a, b, _q = key
            if kk != k:
                continue
            if a == i:
                terms.append((name, 1))
            elif b == i:
                terms.append((name, -1))
        rhs = 1 if i == demand.source else -1 if i == demand.destination else 0
        if not terms and rhs == 0:
            continue
        m.add_constraint(f"{row_prefix}_k{k}_n{i}", terms, "=", rhs, tag=tag)


def _route_occupancy_terms(
    index: VarIndex, family: str, slot: Slot, node: int
) -> tuple[Optional[int], list[tuple[str, int]]]:
    """How a carrier's route occupies a physical node.

    Returns (constant, variable terms): endpoints occupy unconditionally
    (constant 1), every other node is occupied exactly when an arc enters it.
    """
    i, j, _q = slot
    if node == i or node == j:
        return 1, []
    terms = [
        (name, 1)
        for (s, arc), name in _route_items(index, family)
        if s == slot and arc[1] == node
    ]
    return None, terms


def _route_items(index: VarIndex, family: str):
    for key, name in index.items(family):
        slot = key[0]
        arc = key[1]
        yield (slot, arc), name


def _route_link_usage_terms(
    index: VarIndex, family: str, slot: Slot, link: Link
) -> list[tuple[str, int]]:
    a, b = link
    out = []
    for arc in ((a, b), (b, a)):
        name = index.get(family, (slot, arc))
        if name:
            out.append((name, 1))
    return out


def _add_route_vars(
    m: MilpModel,
    index: VarIndex,
    family: str,
    slot: Slot,
    arcs: Iterable[Arc],
    forbidden_nodes: frozenset[int] = frozenset(),
) -> None:
    for arc in arcs:
        if arc[0] in forbidden_nodes or arc[1] in forbidden_nodes:
            continue
        name = _route_name(family, slot, arc)
        m.add_variable(name, VarKind.BINARY)
        index.add(family, (slot, arc), name)


def _add_route_flow_rows(
    m: MilpModel,
    index: VarIndex,
    family: str,
    slot: Slot,
    nodes: Iterable[int],
    tag: str,
    row_prefix: str,
    rhs_var: Optional[str] = None,
    skip_nodes: frozenset[int] = frozenset(),
) -> None:
    """Conservation for one lightpath's physical route.

    With ``rhs_var`` set (a slot-existence binary), the route exists exactly
    when the slot does; otherwise the route is unconditional.
    """
    i, j, q = slot
    for n in nodes:
        if n in skip_nodes:
            continue
        terms: list[tuple[str, int]] = []
        for (s, arc), name in _route_items(index, family):
            if s != slot:
                continue
            if arc[0] == n:
                terms.append((name, 1))
            elif arc[1] == n:
                terms.append((name, -1))
        sign = 1 if n == i else -1 if n == j else 0
        if rhs_var is not None and sign != 0:
            terms.append((rhs_var, -sign))
            rhs = 0
        else:
            rhs = sign
        if not terms and rhs == 0:
            continue
        m.add_constraint(
            f"{row_prefix}_{i}_{j}_{q}_n{n}", terms, "=", rhs, tag=tag
        )


def demand_physical_path_nodes(
    demand_path: Sequence[Slot],
    routes: Mapping[Slot, tuple[int, ...]],
) -> tuple[int, ...]:
    """Every physical node an LSP's path touches, in traversal order."""
    out: list[int] = []
    for slot in demand_path:
        for n in routes[slot]:
            if not out or out[-1] != n:
                out.append(n)
    return tuple(out)


def demand_physical_path_links(
    demand_path: Sequence[Slot],
    routes: Mapping[Slot, tuple[int, ...]],
) -> tuple[Link, ...]:
    out: list[Link] = []
    for slot in demand_path:
        route = routes[slot]
        out.extend(normalized_link(a, b) for a, b in zip(route, route[1:]))
    return tuple(out)


def brs_needed_spares(
    demands_transiting: Mapping[int, tuple[str, ...]],
    protection_paths: Mapping[str, tuple[Slot, ...]],
    spare_routes: Mapping[Slot, tuple[int, ...]],
) -> dict[tuple[int, Link], int]:
    """Per (router, link): spare carriers that router's failure activates.

    When router n dies, LSPs transiting it switch to their protection LSPs.
    The spare carriers those ride (the ones surviving n) hold wavelengths
    that the same failure's optical recovery cannot borrow. Each carrier
    counts once no matter how many switched LSPs it picks up.
    """
    out: dict[tuple[int, Link], set[Slot]] = {}
    for node, demand_ids in demands_transiting.items():
        for did in demand_ids:
            for slot in protection_paths.get(did, ()):
                route = spare_routes.get(slot)
                if not route or node in route:
                    continue
                for a, b in zip(route, route[1:]):
                    out.setdefault((node, normalized_link(a, b)), set()).add(slot)
    return {key: len(slots) for key, slots in out.items()}


# -- stage I: working MPLS ----------------------------------------------------


def build_working_mpls(
    instance: Instance, cfg: DesignConfig, costs: CostModel
) -> StageModel:
    """Logical topology plus working LSP routing, MPLS-layer cost only."""
    m = MilpModel("working-mpls")
    index = VarIndex()
    slots = _slots(instance, cfg)
    demands = instance.traffic.demands
    cap = instance.lightpath_capacity_mbps
    t_limit = cfg.effective_interfaces(instance)

    for slot in slots:
        name = m.add_variable(_slot_name("wb", slot), VarKind.BINARY)
        index.add("wb", slot, name)
        m.add_objective_term(name, costs.lightpath_cost)
    for k, d in enumerate(demands):
        coeff = _transit_coeff(costs, d)
        for slot in slots:
            name = m.add_variable(f"wd_{k}_{slot[0]}_{slot[1]}_{slot[2]}",
                                  VarKind.BINARY)
            index.add("wd", (k, *slot), name)
            m.add_objective_term(name, coeff)
        # arrival at the destination is not transit
        m.add_objective_constant(-coeff)

    for k, d in enumerate(demands):
        _add_lsp_flow_rows(m, index, "wd", k, d, instance.topology.nodes,
                           "working-flow", "wflow")

    for slot in slots:
        terms = [
            (index.get("wd", (k, *slot)), d.bandwidth_mbps)
            for k, d in enumerate(demands)
        ]
        terms.append((index.get("wb", slot), -cap))
        m.add_constraint(
            _slot_name("groom", slot), terms, "<=", 0, tag="grooming-capacity"
        )

    for node in instance.topology.nodes:
        terms = [
            (name, 1)
            for (i, j, _q), name in index.items("wb")
            if i == node or j == node
        ]
        m.add_constraint(f"ifaces_n{node}", terms, "<=", t_limit,
                         tag="interface-limit")

    for (i, j, q) in slots:
        if q == 1:
            continue
        m.add_constraint(
            f"slotsym_{i}_{j}_{q}",
            [(index.get("wb", (i, j, q)), 1), (index.get("wb", (i, j, q - 1)), -1)],
            "<=",
            0,
            tag="slot-symmetry",
        )

    return StageModel(
        stage="working-mpls",
        model=m,
        index=index,
        info={"slots": slots, "demand_ids": tuple(d.id for d in demands)},
    )


# -- stage II: protection MPLS ------------------------------------------------


def build_protection_mpls(
    instance: Instance,
    cfg: DesignConfig,
    costs: CostModel,
    plan: ProtectionPlan,
    work_slots: Sequence[Slot],
    working_paths: Mapping[str, tuple[Slot, ...]],
) -> StageModel:
    """Spare carriers plus protection LSP routing over them.

    The working layer is fixed. Protection LSPs may not reuse any lightpath
    slot of their own working path, keep off their working path's
    intermediate routers, and ride spare carriers only.
    """
    m = MilpModel("protection-mpls")
    index = VarIndex()
    if not plan.protected_demands:
        return StageModel(
            stage="protection-mpls", model=m, index=index,
            info={"slots": (), "protected": ()},
        )

    slots = _slots(instance, cfg)
    demand_by_id = {d.id: d for d in instance.traffic.demands}
    kmap = _demand_index(instance)
    occupied = frozenset(work_slots)
    cap = instance.lightpath_capacity_mbps
    t_limit = cfg.effective_interfaces(instance)

    for slot in slots:
        name = m.add_variable(_slot_name("pb", slot), VarKind.BINARY)
        index.add("pb", slot, name)
        m.add_objective_term(name, costs.lightpath_cost)
        if slot in occupied:
            m.add_constraint(
                _slot_name("slotexcl", slot), [(name, 1)], "<=", 0,
                tag="slot-exclusive",
            )

    for did in plan.protected_demands:
        d = demand_by_id[did]
        k = kmap[did]
        banned = frozenset(plan.excluded_for(did))
        coeff = _transit_coeff(costs, d)
        for slot in slots:
            i, j, _q = slot
            if i in banned or j in banned:
                continue  # barred routers are excluded from both row sides
            name = m.add_variable(f"pd_{k}_{i}_{j}_{slot[2]}", VarKind.BINARY)
            index.add("pd", (k, *slot), name)
            m.add_objective_term(name, coeff)
        if not cfg.transit_double_count:
            m.add_objective_constant(-coeff)

    for did in plan.protected_demands:
        d = demand_by_id[did]
        k = kmap[did]
        banned = frozenset(plan.excluded_for(did))
        _add_lsp_flow_rows(m, index, "pd", k, d, instance.topology.nodes,
                           "protection-flow", "pflow", skip_nodes=banned)
        # a protected LSP's two paths never share a lightpath slot
        for slot in working_paths[did]:
            name = index.get("pd", (k, *slot))
            if name:
                m.add_constraint(
                    f"arcdisj_k{k}_{slot[0]}_{slot[1]}_{slot[2]}",
                    [(name, 1)], "<=", 0, tag="logical-arc-disjoint",
                )

    for slot in slots:
        terms = [
            (index.get("pd", (kmap[did], *slot)), demand_by_id[did].bandwidth_mbps)
            for did in plan.protected_demands
            if index.get("pd", (kmap[did], *slot))
        ]
        terms.append((index.get("pb", slot), -cap))
        m.add_constraint(
            _slot_name("pgroom", slot), terms, "<=", 0,
            tag="spare-grooming-capacity",
        )

    for node in instance.topology.nodes:
        fixed = sum(1 for (i, j, _q) in occupied if node in (i, j))
        terms = [
            (name, 1)
            for (i, j, _q), name in index.items("pb")
            if i == node or j == node
        ]
        m.add_constraint(f"ifaces_n{node}", terms, "<=", t_limit - fixed,
                         tag="interface-limit")

    for (i, j, q) in slots:
        if q == 1:
            continue
        prev_fixed = 1 if (i, j, q - 1) in occupied else 0
        this_fixed = 1 if (i, j, q) in occupied else 0
        m.add_constraint(
            f"slotsym_{i}_{j}_{q}",
            [(index.get("pb", (i, j, q)), 1), (index.get("pb", (i, j, q - 1)), -1)],
            "<=",
            prev_fixed - this_fixed,
            tag="slot-symmetry",
        )

    return StageModel(
        stage="protection-mpls",
        model=m,
        index=index,
        info={"slots": slots, "protected": plan.protected_demands},
    )


# -- stage III: lightpath routing (sequential) --------------------------------


def _carrier_pairs(
    plan: ProtectionPlan,
    working_paths: Mapping[str, tuple[Slot, ...]],
    protection_paths: Mapping[str, tuple[Slot, ...]],
) -> tuple[tuple[str, Slot, Slot], ...]:
    """(demand, working carrier, protection-side carrier) disjointness pairs."""
    pairs: list[tuple[str, Slot, Slot]] = []
    seen: set[tuple[str, Slot, Slot]] = set()
    for did in plan.protected_demands:
        for a in working_paths.get(did, ()):
            for b in protection_paths.get(did, ()):
                item = (did, a, b)
                if item not in seen:
                    seen.add(item)
                    pairs.append(item)
    return tuple(pairs)


def build_lightpath_routing_seq(
    instance: Instance,
    cfg: DesignConfig,
    costs: CostModel,
    work_slots: Sequence[Slot],
    spare_slots: Sequence[Slot],
    plan: ProtectionPlan,
    working_paths: Mapping[str, tuple[Slot, ...]],
    protection_paths: Mapping[str, tuple[Slot, ...]],
) -> StageModel:
    """Physical routes for every carrier, minimizing wavelength count.

    When the option requires a demand's working and protection LSPs to be
    physically disjoint, pairwise rows keep each working-path carrier and each
    protection-path carrier off shared transit nodes (and shared links for the
    single-layer option). Endpoint nodes of a carrier occupy unconditionally,
    so rows against them pin the partner's route away from those nodes.
    """
    m = MilpModel("lightpath-routing")
    index = VarIndex()
    arcs = instance.topology.directed_arcs()
    nodes = instance.topology.nodes
    w_limit = instance.topology.wavelengths_per_link

    for slot in sorted(work_slots):
        _add_route_vars(m, index, "wr", slot, arcs)
    for slot in sorted(spare_slots):
        _add_route_vars(m, index, "sr", slot, arcs)
    for family in ("wr", "sr"):
        for (_slot, _arc), name in _route_items(index, family):
            m.add_objective_term(name, costs.wavelength_cost)

    for slot in sorted(work_slots):
        _add_route_flow_rows(m, index, "wr", slot, nodes, "lightpath-flow", "lproute")
    for slot in sorted(spare_slots):
        _add_route_flow_rows(m, index, "sr", slot, nodes, "lightpath-flow", "sproute")

    for link in instance.topology.links:
        terms: list[tuple[str, int]] = []
        for family, slot_list in (("wr", work_slots), ("sr", spare_slots)):
            for slot in slot_list:
                terms.extend(_route_link_usage_terms(index, family, slot, link))
        m.add_constraint(
            f"wavecap_{link[0]}_{link[1]}", terms, "<=", w_limit,
            tag="wavelength-capacity",
        )

    if plan.lsp_pair_disjointness != "none":
        demand_by_id = {d.id: d for d in instance.traffic.demands}
        kmap = _demand_index(instance)
        work_set = frozenset(work_slots)

        def family_of(slot: Slot) -> str:
            return "wr" if slot in work_set else "sr"

        for did, a, b in _carrier_pairs(plan, working_paths, protection_paths):
            d = demand_by_id[did]
            fa, fb = family_of(a), family_of(b)
            pair_id = (f"k{kmap[did]}_{a[0]}_{a[1]}_{a[2]}"
                       f"__{b[0]}_{b[1]}_{b[2]}")
            for v in nodes:
                if v in (d.source, d.destination):
                    continue
                const_a, terms_a = _route_occupancy_terms(index, fa, a, v)
                const_b, terms_b = _route_occupancy_terms(index, fb, b, v)
                rhs = 1 - (const_a or 0) - (const_b or 0)
                terms = terms_a + terms_b
                if not terms and rhs >= 0:
                    continue
                m.add_constraint(
                    f"pairnode_{pair_id}_n{v}", terms, "<=", rhs,
                    tag="pair-node-disjoint",
                )
            if plan.lsp_pair_disjointness == "node-link":
                for link in instance.topology.links:
                    terms = _route_link_usage_terms(index, fa, a, link) + \
                        _route_link_usage_terms(index, fb, b, link)
                    if len(terms) < 2:
                        continue
                    m.add_constraint(
                        f"pairlink_{pair_id}_l{link[0]}_{link[1]}",
                        terms, "<=", 1, tag="pair-link-disjoint",
                    )

    return StageModel(
        stage="lightpath-routing",
        model=m,
        index=index,
        info={"work_slots": tuple(sorted(work_slots)),
              "spare_slots": tuple(sorted(spare_slots))},
    )


# -- stage IV: lightpath protection (sequential) -------------------------------


def build_lightpath_protection(
    instance: Instance,
    cfg: DesignConfig,
    costs: CostModel,
    plan: ProtectionPlan,
    carrier_routes: Mapping[Slot, tuple[int, ...]],
    work_slots: Sequence[Slot],
    spare_slots: Sequence[Slot],
    working_paths: Mapping[str, tuple[Slot, ...]],
    protection_paths: Mapping[str, tuple[Slot, ...]],
) -> StageModel:
    """Optical protection routes for carriers the option protects.

    Each protection lightpath keeps off its carrier's transit OXCs (routes
    through them are never created) and its carrier's links (explicit rows).
    Under shared restoration only the shortfall beyond the spare-carrier pool
    is paid, and a protection lightpath may not preempt wavelengths that the
    same failure's MPLS recovery needs.
    """
    m = MilpModel("lightpath-protection")
    index = VarIndex()
    protected = plan.protected_carriers(work_slots, spare_slots)
    if not protected:
        return StageModel(stage="lightpath-protection", model=m, index=index,
                          info={"protected_carriers": ()})

    arcs = instance.topology.directed_arcs()
    nodes = instance.topology.nodes
    w_limit = instance.topology.wavelengths_per_link
    links = instance.topology.links

    w1: dict[Link, int] = {l: 0 for l in links}
    w2: dict[Link, int] = {l: 0 for l in links}
    for slot in work_slots:
        for l in _links_of_route(carrier_routes[slot]):
            w1[l] += 1
    for slot in spare_slots:
        for l in _links_of_route(carrier_routes[slot]):
            w2[l] += 1

    needed_spares: dict[tuple[int, Link], int] = {}
    if plan.brs_sharing:
        transiting: dict[int, list[str]] = {}
        for did, path in working_paths.items():
            for (_i, j, _q) in path[:-1]:
                transiting.setdefault(j, []).append(did)
        needed_spares = brs_needed_spares(
            {n: tuple(v) for n, v in transiting.items()},
            protection_paths,
            {s: carrier_routes[s] for s in spare_slots},
        )

    for slot in protected:
        route = carrier_routes[slot]
        transit = frozenset(route[1:-1])
        _add_route_vars(m, index, "pr", slot, arcs, forbidden_nodes=transit)
        _add_route_flow_rows(
            m, index, "pr", slot, nodes, "protection-lightpath-flow", "plproute",
            skip_nodes=transit,
        )
        # never share a fiber with the carrier it protects
        for link in _links_of_route(route):
            terms = _route_link_usage_terms(index, "pr", slot, link)
            if terms:
                m.add_constraint(
                    f"lpdisj_{slot[0]}_{slot[1]}_{slot[2]}_l{link[0]}_{link[1]}",
                    terms, "<=", 0, tag="lightpath-link-disjoint",
                )
    if plan.brs_sharing:
        for link in links:
            name = m.add_variable(f"x_{link[0]}_{link[1]}", VarKind.INTEGER,
                                  0, max(0, w_limit - w1[link] - w2[link]))
            index.add("x", (link,), name)
            m.add_objective_term(name, costs.wavelength_cost)
        for link in links:
            terms: list[tuple[str, int]] = []
            for slot in protected:
                terms.extend(_route_link_usage_terms(index, "pr", slot, link))
            if not terms:
                continue
            terms.append((index.get("x", (link,)), -1))
            m.add_constraint(
                f"brsextra_l{link[0]}_{link[1]}", terms, "<=", w2[link],
                tag="brs-extra",
            )
        # when router n dies, protection lightpaths of carriers transiting
        # OXC n fire together with n's MPLS recovery; both draw on the spare
        # pool plus the paid extra wavelengths
        transit_of = {s: frozenset(carrier_routes[s][1:-1]) for s in protected}
        for (node, link), needed in sorted(needed_spares.items()):
            terms = []
            for slot in protected:
                if node in transit_of[slot]:
                    terms.extend(_route_link_usage_terms(index, "pr", slot, link))
            if not terms:
                continue
            terms.append((index.get("x", (link,)), -1))
            m.add_constraint(
                f"brscont_n{node}_l{link[0]}_{link[1]}",
                terms, "<=", w2[link] - needed, tag="brs-pool-exclusion",
            )
    else:
        for (_slot, _arc), name in _route_items(index, "pr"):
            m.add_objective_term(name, costs.wavelength_cost)
        for link in links:
            terms = []
            for slot in protected:
                terms.extend(_route_link_usage_terms(index, "pr", slot, link))
            if not terms:
                continue
            m.add_constraint(
                f"wavecap_l{link[0]}_{link[1]}", terms, "<=",
                w_limit - w1[link] - w2[link], tag="wavelength-capacity",
            )

    return StageModel(
        stage="lightpath-protection",
        model=m,
        index=index,
        info={"protected_carriers": protected},
    )


def _links_of_route(route: tuple[int, ...]) -> tuple[Link, ...]:
    return tuple(normalized_link(a, b) for a, b in zip(route, route[1:]))


# -- integrated stages ---------------------------------------------------------


def build_integrated_working(
    instance: Instance, cfg: DesignConfig, costs: CostModel
) -> StageModel:
    """Working MPLS layer and its lightpath routes in one model."""
    base = build_working_mpls(instance, cfg, costs)
    m = base.model
    index = base.index
    m.name = "integrated-working"
    slots = base.info["slots"]
    arcs = instance.topology.directed_arcs()
    nodes = instance.topology.nodes

    for slot in slots:
        _add_route_vars(m, index, "wr", slot, arcs)
        for arc in arcs:
            m.add_objective_term(index.get("wr", (slot, arc)), costs.wavelength_cost)
        _add_route_flow_rows(
            m, index, "wr", slot, nodes, "lightpath-flow", "lproute",
            rhs_var=index.get("wb", slot),
        )

    for link in instance.topology.links:
        terms: list[tuple[str, int]] = []
        for slot in slots:
            terms.extend(_route_link_usage_terms(index, "wr", slot, link))
        m.add_constraint(
            f"wavecap_{link[0]}_{link[1]}", terms, "<=",
            instance.topology.wavelengths_per_link, tag="wavelength-capacity",
        )

    return StageModel(stage="integrated-working", model=m, index=index,
                      info=base.info)


def build_integrated_protection(
    instance: Instance,
    cfg: DesignConfig,
    costs: CostModel,
    plan: ProtectionPlan,
    work_slots: Sequence[Slot],
    working_paths: Mapping[str, tuple[Slot, ...]],
    carrier_routes: Mapping[Slot, tuple[int, ...]],
) -> StageModel:
    """Protection MPLS layer and all protection-side optical routing jointly.

    Covers spare-carrier placement and routing, protection LSP routing,
    optical protection of fixed work carriers, optical protection of the
    spare carriers themselves (double protection), and shared-restoration
    wavelength accounting. The working layer is fixed throughout.
    """
    base = build_protection_mpls(
        instance, cfg, costs, plan, work_slots, working_paths
    )
    if not plan.protected_demands and not plan.protect_work_carriers:
        return StageModel(stage="integrated-protection", model=base.model,
                          index=base.index, info={"slots": (), "protected": ()})

    # graft the MPLS-layer protection model, then add the optical layer
    m = base.model
    index = base.index
    m.name = "integrated-protection"
    slots = base.info.get("slots") or _slots(instance, cfg)
    arcs = instance.topology.directed_arcs()
    nodes = instance.topology.nodes
    links = instance.topology.links
    w_limit = instance.topology.wavelengths_per_link
    kmap = _demand_index(instance)
    demand_by_id = {d.id: d for d in instance.traffic.demands}

    w1: dict[Link, int] = {l: 0 for l in links}
    for slot in work_slots:
        for l in _links_of_route(carrier_routes[slot]):
            w1[l] += 1

    spare_capable = [s for s in slots if index.get("pb", s) is not None]

    # spare carriers route iff they exist
    for slot in spare_capable:
        _add_route_vars(m, index, "sr", slot, arcs)
        for arc in arcs:
            m.add_objective_term(index.get("sr", (slot, arc)), costs.wavelength_cost)
        _add_route_flow_rows(
            m, index, "sr", slot, nodes, "lightpath-flow", "sproute",
            rhs_var=index.get("pb", slot),
        )

    # physical disjointness between each demand's working path and the spare
    # carriers its protection LSP rides, conditioned on the riding decision
    if plan.lsp_pair_disjointness != "none":
        want_links = plan.lsp_pair_disjointness == "node-link"
        for did in plan.protected_demands:
            d = demand_by_id[did]
            k = kmap[did]
            nodes_on_path = set(
                demand_physical_path_nodes(working_paths[did], carrier_routes)
            ) - {d.source, d.destination}
            links_on_path = set(
                demand_physical_path_links(working_paths[did], carrier_routes)
            )
            for slot in spare_capable:
                pd_name = index.get("pd", (k, *slot))
                if pd_name is None:
                    continue
                i, j, _q = slot
                if i in nodes_on_path or j in nodes_on_path:
                    m.add_constraint(
                        f"condend_k{k}_{i}_{j}_{slot[2]}",
                        [(pd_name, 1)], "<=", 0, tag="conditional-node-disjoint",
                    )
                    continue
                for v in sorted(nodes_on_path):
                    _c, terms = _route_occupancy_terms(index, "sr", slot, v)
                    if not terms:
                        continue
                    m.add_constraint(
                        f"condnode_k{k}_{i}_{j}_{slot[2]}_n{v}",
                        terms + [(pd_name, 1)], "<=", 1,
                        tag="conditional-node-disjoint",
                    )
                if want_links:
                    for link in sorted(links_on_path):
                        terms = _route_link_usage_terms(index, "sr", slot, link)
                        if not terms:
                            continue
                        m.add_constraint(
                            f"condlink_k{k}_{i}_{j}_{slot[2]}_l{link[0]}_{link[1]}",
                            terms + [(pd_name, 1)], "<=", 1,
                            tag="conditional-link-disjoint",
                        )

    # optical protection for fixed work carriers
    protected_work = tuple(sorted(work_slots)) if plan.protect_work_carriers else ()
    for slot in protected_work:
        route = carrier_routes[slot]
        transit = frozenset(route[1:-1])
        _add_route_vars(m, index, "pr", slot, arcs, forbidden_nodes=transit)
        _add_route_flow_rows(
            m, index, "pr", slot, nodes, "protection-lightpath-flow", "plproute",
            skip_nodes=transit,
        )
        for link in _links_of_route(route):
            terms = _route_link_usage_terms(index, "pr", slot, link)
            if terms:
                m.add_constraint(
                    f"lpdisj_{slot[0]}_{slot[1]}_{slot[2]}_l{link[0]}_{link[1]}",
                    terms, "<=", 0, tag="lightpath-link-disjoint",
                )
        if not plan.brs_sharing:
            for arc in arcs:
                name = index.get("pr", (slot, arc))
                if name:
                    m.add_objective_term(name, costs.wavelength_cost)

    # optical protection for spare carriers (double protection): exists iff
    # the spare does, and avoids the spare's own links and transit nodes
    if plan.protect_spare_carriers:
        for slot in spare_capable:
            _add_route_vars(m, index, "pr2", slot, arcs)
            for arc in arcs:
                m.add_objective_term(index.get("pr2", (slot, arc)),
                                     costs.wavelength_cost)
            _add_route_flow_rows(
                m, index, "pr2", slot, nodes, "protection-lightpath-flow",
                "plproute2", rhs_var=index.get("pb", slot),
            )
            for link in links:
                terms = _route_link_usage_terms(index, "pr2", slot, link) + \
                    _route_link_usage_terms(index, "sr", slot, link)
                m.add_constraint(
                    f"lpdisj2_{slot[0]}_{slot[1]}_{slot[2]}_l{link[0]}_{link[1]}",
                    terms, "<=", 1, tag="lightpath-link-disjoint",
                )
            for v in nodes:
                if v in (slot[0], slot[1]):
                    continue
                _ca, terms_a = _route_occupancy_terms(index, "pr2", slot, v)
                _cb, terms_b = _route_occupancy_terms(index, "sr", slot, v)
                if not terms_a or not terms_b:
                    continue
                m.add_constraint(
                    f"pairnode2_{slot[0]}_{slot[1]}_{slot[2]}_n{v}",
                    terms_a + terms_b, "<=", 1, tag="pair-node-disjoint",
                )

    # shared restoration: pay only wavelengths beyond the spare pool, and keep
    # a failure's optical recovery off the links its MPLS recovery rides
    if plan.brs_sharing:
        for link in links:
            name = m.add_variable(f"x_{link[0]}_{link[1]}", VarKind.INTEGER,
                                  0, max(0, w_limit - w1[link]))
            index.add("x", (link,), name)
            m.add_objective_term(name, costs.wavelength_cost)
        for link in links:
            terms: list[tuple[str, int]] = []
            for slot in protected_work:
                terms.extend(_route_link_usage_terms(index, "pr", slot, link))
            for slot in spare_capable:
                for t, c in _route_link_usage_terms(index, "sr", slot, link):
                    terms.append((t, -c))
            terms.append((index.get("x", (link,)), -1))
            m.add_constraint(
                f"brsextra_l{link[0]}_{link[1]}", terms, "<=", 0, tag="brs-extra",
            )

        transiting: dict[int, list[str]] = {}
        for did in plan.protected_demands:
            for (_i, j, _q) in working_paths[did][:-1]:
                transiting.setdefault(j, []).append(did)
        pool_nodes = sorted(
            n for n in transiting
            if any(n in carrier_routes[s][1:-1] for s in protected_work)
        )
        for n in pool_nodes:
            for link in links:
                yname = m.add_variable(f"brsy_{n}_{link[0]}_{link[1]}",
                                       VarKind.CONTINUOUS, 0, 1)
                index.add("brsy", (n, link), yname)
                for did in transiting[n]:
                    k = kmap[did]
                    for slot in spare_capable:
                        pd_name = index.get("pd", (k, *slot))
                        if pd_name is None:
                            continue
                        terms = _route_link_usage_terms(index, "sr", slot, link)
                        if not terms:
                            continue
                        m.add_constraint(
                            f"brsy_{n}_l{link[0]}_{link[1]}_k{k}"
                            f"_{slot[0]}_{slot[1]}_{slot[2]}",
                            terms + [(pd_name, 1), (yname, -1)], "<=", 1,
                            tag="brs-pool-exclusion",
                        )
                for slot in protected_work:
                    if n not in carrier_routes[slot][1:-1]:
                        continue
                    terms = _route_link_usage_terms(index, "pr", slot, link)
                    if not terms:
                        continue
                    m.add_constraint(
                        f"brsban_{slot[0]}_{slot[1]}_{slot[2]}"
                        f"_n{n}_l{link[0]}_{link[1]}",
                        terms + [(yname, 1)], "<=", 1, tag="brs-pool-exclusion",
                    )

    # wavelength capacity with the fixed working layer folded in
    for link in links:
        terms = []
        for slot in spare_capable:
            terms.extend(_route_link_usage_terms(index, "sr", slot, link))
        if plan.brs_sharing:
            terms.append((index.get("x", (link,)), 1))
        else:
            for slot in protected_work:
                terms.extend(_route_link_usage_terms(index, "pr", slot, link))
            if plan.protect_spare_carriers:
                for slot in spare_capable:
                    terms.extend(_route_link_usage_terms(index, "pr2", slot, link))
        if not terms:
            continue
        m.add_constraint(
            f"wavecap_{link[0]}_{link[1]}", terms, "<=", w_limit - w1[link],
            tag="wavelength-capacity",
        )

    return StageModel(
        stage="integrated-protection",
        model=m,
        index=index,
        info={
            "slots": slots,
            "protected": plan.protected_demands,
            "protected_work": protected_work,
            "spare_capable": tuple(spare_capable),
        },
    )
