"""Optimal-strategy solvers and cross-evaluation.

Three routes to the optimum are implemented and compared: exhaustive control
strategy enumeration (the oracle), the coordinator recursion over the
lowest-information agent's beliefs, and the per-agent decomposition in which
an agent conditions prescriptions for higher-indexed targets on their own,
coarser information. Every solver re-evaluates its emitted strategy exactly,
so reported optima are directly comparable.
"""

from __future__ import annotations

import dataclasses
import itertools
import math
import os
import time
from dataclasses import dataclass, field

import numpy as np

from .belief import (
    accessible_support,
    belief_step,
    belief_tuple_key,
    expected_stage_cost,
    initial_state_at,
)
from .errors import CapExceeded, ShapeMismatch, WomError
from .infostruct import KIND_OBSERVATION
from .prescription import (
    CompletePrescription,
    Prescription,
    PrescriptionStrategy,
    count_strategies,
    derive_complete,
    enumerate_prescription_tables,
    joint_control_strategy,
    make_prescription,
    prescription_space_size,
)
from .sysmodel import (
    ControlStrategy,
    CostReport,
    Instance,
    enumerate_realizations,
    exact_strategy_cost,
    feasible_schema_realizations,
    joint_primitives,
    realization_count,
    realization_index,
    restrict_realization,
)

COST_TOL = 1e-9
_CHUNK = 1 << 18


@dataclass(frozen=True)
class Caps:
    brute: int = 2**24
    tables: int = 2**20
    branches: int = 2**20


def resolve_caps(cap: int | None = None) -> Caps:
    if cap is None:
        env = os.environ.get("WOMCTL_CAP")
        if env is not None:
            cap = int(env)
    if cap is None:
        return Caps()
    return Caps(brute=cap, tables=cap, branches=cap)


@dataclass
class SolveResult:
    method: str
    agent: int | None
    optimal_cost: float
    control_strategy: ControlStrategy
    prescription_strategy: PrescriptionStrategy | None
    search_size: int
    wall_time: float
    dp_value: float | None = None
    extras: dict = field(default_factory=dict)


# -- brute force ---------------------------------------------------------------


def solve_brute_force(instance: Instance, cap: int | None = None) -> SolveResult:
    """Enumerate every control strategy over feasible memory realizations.

    Strategies are encoded mixed-radix with stage, then agent, then realization
    as increasingly fast digits; the reported minimizer is the one with the
    smallest encoding. Memory realizations never reachable under any strategy
    keep a fixed default action.
    """
    caps = resolve_caps(cap)
    start = time.perf_counter()
    sys = instance.system
    T, K = instance.horizon, sys.agent_count

    cells = []  # (t, k, realizations, radix)
    for t in range(T + 1):
        for k in range(1, K + 1):
            feas = feasible_schema_realizations(instance, instance.info.memory(t, k))
            cells.append((t, k, feas, sys.control_sizes[k - 1]))
    total = 1
    for _, _, feas, radix in cells:
        total *= radix ** len(feas)
    if total > caps.brute:
        raise CapExceeded(total, caps.brute, "brute-force enumeration")

    flat_radix, flat_cell_of = [], {}
    for t, k, feas, radix in cells:
        base = len(flat_radix)
        flat_cell_of[(t, k)] = base
        flat_radix.extend([radix] * len(feas))
    suffix = np.ones(len(flat_radix) + 1, dtype=np.int64)
    for c in range(len(flat_radix) - 1, -1, -1):
        suffix[c] = suffix[c + 1] * flat_radix[c]
    suffix_np = suffix[1:]  # weight of each digit
    radix_np = np.asarray(flat_radix, dtype=np.int64)

    lookup = {}  # (t, k) -> (sizes, code->local np array)
    for t, k, feas, _ in cells:
        sizes = instance.schema_sizes(instance.info.memory(t, k))
        table = np.full(max(1, realization_count(sizes)), -1, dtype=np.int64)
        for local, real in enumerate(feas):
            table[realization_index(sizes, real)] = local
        lookup[(t, k)] = (sizes, table)

    prim = list(joint_primitives(instance))
    control_stride = [1] * K
    for k in range(K - 2, -1, -1):
        control_stride[k] = control_stride[k + 1] * sys.control_sizes[k + 1]

    best_cost, best_id = math.inf, -1
    for lo in range(0, total, _CHUNK):
        hi = min(total, lo + _CHUNK)
        ids = np.arange(lo, hi, dtype=np.int64)
        costs = np.zeros(hi - lo)
        for p, x0, w_seq, v_seq in prim:
            x = np.full(hi - lo, x0, dtype=np.int64)
            vals = {}
            for t in range(T + 1):
                for k in range(1, K + 1):
                    vals[(t, k, KIND_OBSERVATION)] = sys.observation[k - 1][
                        t, x, v_seq[k - 1][t]
                    ]
                uj = np.zeros(hi - lo, dtype=np.int64)
                for k in range(1, K + 1):
                    sizes, code_table = lookup[(t, k)]
                    code = np.zeros(hi - lo, dtype=np.int64)
                    for var, size in zip(instance.info.memory(t, k), sizes):
                        code = code * size + vals[var]
                    local = code_table[code]
                    gidx = flat_cell_of[(t, k)] + local
                    u = (ids // suffix_np[gidx]) % radix_np[gidx]
                    vals[(t, k, "U")] = u
                    uj += u * control_stride[k - 1]
                costs += p * sys.cost[t][x, uj]
                if t < T:
                    x = sys.transition[t][x, uj, w_seq[t]]
        arg = int(np.argmin(costs))
        if costs[arg] < best_cost:
            best_cost, best_id = float(costs[arg]), lo + arg

    tables = {}
    for t, k, feas, radix in cells:
        sizes = instance.schema_sizes(instance.info.memory(t, k))
        table = {real: 0 for real in enumerate_realizations(sizes)}
        base = flat_cell_of[(t, k)]
        for local, real in enumerate(feas):
            gidx = base + local
            table[real] = int((best_id // int(suffix_np[gidx])) % radix)
        tables[(t, k)] = table
    strategy = ControlStrategy(tables=tables)
    report = exact_strategy_cost(instance, strategy)
    return SolveResult(
        method="brute",
        agent=None,
        optimal_cost=report.expected_cost,
        control_strategy=strategy,
        prescription_strategy=None,
        search_size=total,
        wall_time=time.perf_counter() - start,
        extras={"vectorized_cost": best_cost},
    )


# -- prescription dynamic programming ------------------------------------------


class _Chain:
    """Stage decisions per agent, filled from agent K downward."""

    def __init__(self):
        self.decisions: dict[int, dict] = {}  # agent -> {(t, key): heads tuple}
        self.values: dict[int, float] = {}
        self.examined: dict[int, int] = {}


def _head_spaces(instance: Instance, j: int, caps: Caps):
    """Per stage, the candidate tables for each of agent j's own components."""
    spaces = {}
    for t in range(instance.horizon + 1):
        per_target = []
        joint = 1
        for m in range(1, j + 1):
            domain = instance.info.prescription_domain(t, j, m)
            sizes = instance.schema_sizes(domain)
            csize = instance.system.control_sizes[m - 1]
            joint *= prescription_space_size(sizes, csize)
            per_target.append(
                [
                    Prescription(j, m, t, domain, sizes, csize, table)
                    for table in enumerate_prescription_tables(sizes, csize, caps.tables)
                ]
            )
        if joint > caps.tables:
            raise CapExceeded(joint, caps.tables, f"stage-{t} joint prescription search")
        spaces[t] = per_target
    return spaces


def _tail_parts(instance: Instance, chain: _Chain, j: int, t: int, pis) -> list:
    """Inherited prescriptions for targets above j at the current belief tuple."""
    parts = []
    for m in range(j + 1, instance.agent_count + 1):
        key = (t, belief_tuple_key(pis[m - j :]))
        try:
            heads = chain.decisions[m][key]
        except KeyError:
            raise WomError(
                f"missing inherited decision for agent {m} at t={t}; "
                "the belief tuple was never reached in that agent's pass"
            ) from None
        diag = heads[m - 1]
        parts.append(dataclasses.replace(diag, owner=j))
    return parts


def _advance_branch(instance, j, amap, pis, theta, z, pi_next, tail_steps):
    """Child accessible map and belief tuple after observing z."""
    amap_child = dict(amap)
    t = pis[0].time
    for var, val in zip(instance.info.new_info(t + 1, j), z):
        amap_child[var] = val
    pis_child = [pi_next]
    for i in range(j + 1, instance.agent_count + 1):
        z_i = tuple(amap_child[var] for var in instance.info.new_info(t + 1, i))
        steps_i = tail_steps[i]
        if z_i not in steps_i:
            raise WomError(
                f"agent {i} new information {z_i} impossible on a positive branch"
            )
        pis_child.append(steps_i[z_i][1])
    return amap_child, tuple(pis_child)


def _solve_agent(instance: Instance, j: int, chain: _Chain, caps: Caps) -> float:
    """Backward recursion over agent j's reachable accessible-history tree.

    Components for targets above j are fixed functions of the targets' belief
    tuples, inherited from their own passes; components up to j are chosen per
    reachable belief tuple.
    """
    T = instance.horizon
    spaces = _head_spaces(instance, j, caps)
    memo: dict = {}
    decisions: dict = {}
    examined = 0
    nodes = 0

    def visit(t, amap, pis):
        nonlocal examined, nodes
        key = (t, belief_tuple_key(pis))
        if key in memo:
            return memo[key]
        nodes += 1
        if nodes > caps.branches:
            raise CapExceeded(nodes, caps.branches, "reachable belief branches")
        tails = _tail_parts(instance, chain, j, t, pis)
        best_val, best_heads = math.inf, None
        for heads in itertools.product(*spaces[t]):
            examined += 1
            theta = CompletePrescription(owner=j, time=t, parts=heads + tuple(tails))
            val = expected_stage_cost(instance, pis[0], theta)
            if t < T:
                steps = belief_step(instance, pis[0], theta)
                tail_steps = {
                    i: belief_step(
                        instance, pis[i - j], derive_complete(instance, theta, i)
                    )
                    for i in range(j + 1, instance.agent_count + 1)
                }
                # every child is visited so lower agents can inherit decisions
                # at any tuple their own candidate profiles can reach
                for z, (pz, pi_next) in steps.items():
                    amap_child, pis_child = _advance_branch(
                        instance, j, amap, pis, theta, z, pi_next, tail_steps
                    )
                    val += pz * visit(t + 1, amap_child, pis_child)
            if val < best_val:
                best_val, best_heads = val, heads
        memo[key] = best_val
        decisions[key] = best_heads
        return best_val

    support = accessible_support(instance, j)
    acc0 = instance.info.accessible(0, j)
    total = 0.0
    for a_real, pa in support.items():
        pis = tuple(
            initial_state_at(
                instance, i, restrict_realization(acc0, a_real, instance.info.accessible(0, i))
            )
            for i in range(j, instance.agent_count + 1)
        )
        total += pa * visit(0, dict(zip(acc0, a_real)), pis)
    chain.decisions[j] = decisions
    chain.values[j] = total
    chain.examined[j] = examined
    return total


def _default_laws(instance: Instance, k: int) -> dict:
    laws = {}
    for t in range(instance.horizon + 1):
        for target in range(1, instance.agent_count + 1):
            cond = instance.info.conditioning_schema(t, k, target)
            domain = instance.info.prescription_domain(t, k, target)
            entries = realization_count(instance.schema_sizes(domain))
            zero = make_prescription(instance, t, k, target, (0,) * entries)
            laws[(t, target)] = {
                real: zero
                for real in enumerate_realizations(instance.schema_sizes(cond))
            }
    return laws


def _emit_strategy(instance: Instance, k: int, chain: _Chain):
    """Replay the decided tree, filling laws and collecting reachable beliefs."""
    laws = _default_laws(instance, k)
    belief_rows = []

    def record(t, amap, pis):
        key = (t, belief_tuple_key(pis))
        heads = chain.decisions[k][key]
        tails = _tail_parts(instance, chain, k, t, pis)
        theta = CompletePrescription(owner=k, time=t, parts=heads + tuple(tails))
        acc_k = instance.info.accessible(t, k)
        a_real = tuple(amap[v] for v in acc_k)
        for m in range(1, instance.agent_count + 1):
            cond = instance.info.conditioning_schema(t, k, m)
            cond_real = tuple(amap[v] for v in cond)
            part = theta.parts[m - 1]
            laws[(t, m)][cond_real] = dataclasses.replace(part, owner=k)
        belief_rows.append(
            {
                "t": t,
                "accessible": {v.label(): amap[v] for v in acc_k},
                "beliefs": {
                    f"agent_{pi.agent}": [float(p) for p in pi.probs] for pi in pis
                },
            }
        )
        if t < instance.horizon:
            steps = belief_step(instance, pis[0], theta)
            tail_steps = {
                i: belief_step(instance, pis[i - k], derive_complete(instance, theta, i))
                for i in range(k + 1, instance.agent_count + 1)
            }
            for z, (pz, pi_next) in steps.items():
                amap_child, pis_child = _advance_branch(
                    instance, k, amap, pis, theta, z, pi_next, tail_steps
                )
                record(t + 1, amap_child, pis_child)

    support = accessible_support(instance, k)
    acc0 = instance.info.accessible(0, k)
    for a_real in support:
        pis = tuple(
            initial_state_at(
                instance, i, restrict_realization(acc0, a_real, instance.info.accessible(0, i))
            )
            for i in range(k, instance.agent_count + 1)
        )
        record(0, dict(zip(acc0, a_real)), pis)
    return PrescriptionStrategy(owner=k, laws=laws), belief_rows


def solve_prescription_dp(instance: Instance, k: int, cap: int | None = None) -> SolveResult:
    """Per-agent backward recursion with inherited higher-agent components."""
    caps = resolve_caps(cap)
    start = time.perf_counter()
    if not 1 <= k <= instance.agent_count:
        raise ShapeMismatch(f"agent {k} out of range")
    chain = _Chain()
    for j in range(instance.agent_count, k - 1, -1):
        _solve_agent(instance, j, chain, caps)
    psi, belief_rows = _emit_strategy(instance, k, chain)
    strategy = joint_control_strategy(instance, psi)
    report = exact_strategy_cost(instance, strategy)
    belief_policy = [
        {
            "t": t,
            "belief_key": [list(part) for part in key],
            "tables": {m: list(p.table) for m, p in enumerate(heads, start=1)},
        }
        for (t, key), heads in sorted(chain.decisions[k].items())
    ]
    return SolveResult(
        method="prescription-dp",
        agent=k,
        optimal_cost=report.expected_cost,
        control_strategy=strategy,
        prescription_strategy=psi,
        search_size=chain.examined[k],
        wall_time=time.perf_counter() - start,
        dp_value=chain.values[k],
        extras={
            "chain_examined": dict(chain.examined),
            "chain_values": dict(chain.values),
            "belief_tree": belief_rows,
            "belief_policy": belief_policy,
        },
    )


def solve_common_info_dp(instance: Instance, cap: int | None = None) -> SolveResult:
    """Coordinator recursion for the highest-indexed agent (the common-information case)."""
    result = solve_prescription_dp(instance, instance.agent_count, cap)
    result.method = "common-info"
    return result


# -- static decomposition -------------------------------------------------------


def solve_prescription_static(instance: Instance, k: int, cap: int | None = None) -> SolveResult:
    """Single-stage decomposition over the agent's conditioning realizations.

    Components for targets above k are enumerated once per realization of the
    target's own (coarser) conditioning information; components up to k are
    minimized innermost per full conditioning realization. The relaxed value
    in which every subproblem also picks its own shared components is reported
    alongside for diagnosis.
    """
    caps = resolve_caps(cap)
    start = time.perf_counter()
    if instance.horizon != 0:
        raise ShapeMismatch("static decomposition requires horizon 0")
    if not 1 <= k <= instance.agent_count:
        raise ShapeMismatch(f"agent {k} out of range")
    sys = instance.system
    K = instance.agent_count

    rows_by_leaf: dict[tuple, list] = {}
    acc_k = instance.info.accessible(0, k)
    noise_axes = [range(sys.noise_sizes[j]) for j in range(K)]
    for x0 in range(sys.state_size):
        p0 = float(sys.initial_probs[x0])
        if p0 == 0.0:
            continue
        for v in itertools.product(*noise_axes):
            p = p0
            for j in range(K):
                p *= float(sys.noise_probs[j][0, v[j]])
            if p == 0.0:
                continue
            yvals = {
                (0, j, KIND_OBSERVATION): int(sys.observation[j - 1][0, x0, v[j - 1]])
                for j in range(1, K + 1)
            }
            leaf = tuple(yvals[var] for var in acc_k)
            rows_by_leaf.setdefault(leaf, []).append((p, x0, yvals))

    head_tables = []
    joint_heads = 1
    for m in range(1, k + 1):
        domain = instance.info.prescription_domain(0, k, m)
        sizes = instance.schema_sizes(domain)
        csize = sys.control_sizes[m - 1]
        joint_heads *= prescription_space_size(sizes, csize)
        head_tables.append(
            [
                Prescription(k, m, 0, domain, sizes, csize, tab)
                for tab in enumerate_prescription_tables(sizes, csize, caps.tables)
            ]
        )
    if joint_heads > caps.tables:
        raise CapExceeded(joint_heads, caps.tables, "joint head search")
    tail_tables = {}
    for i in range(k + 1, K + 1):
        domain = instance.info.prescription_domain(0, k, i)
        sizes = instance.schema_sizes(domain)
        csize = sys.control_sizes[i - 1]
        tail_tables[i] = [
            Prescription(k, i, 0, domain, sizes, csize, tab)
            for tab in enumerate_prescription_tables(sizes, csize, caps.tables)
        ]

    domains = {
        m: instance.info.prescription_domain(0, k, m) for m in range(1, K + 1)
    }
    relaxed_best: dict[tuple, float] = {leaf: math.inf for leaf in rows_by_leaf}
    examined = 0

    def leaf_value(leaf, tails):
        """Min over joint heads of the unnormalized conditional stage cost."""
        nonlocal examined
        rows = rows_by_leaf[leaf]
        best = math.inf
        best_heads = None
        for heads in itertools.product(*head_tables):
            examined += 1
            parts = list(heads) + [tails[i] for i in range(k + 1, K + 1)]
            total = 0.0
            for p, x0, yvals in rows:
                controls = []
                for m in range(1, K + 1):
                    inputs = tuple(yvals[var] for var in domains[m])
                    part = parts[m - 1]
                    controls.append(part.table[realization_index(part.domain_sizes, inputs)])
                total += p * float(sys.cost[0, x0, instance.joint_control_index(controls)])
            if total < best:
                best, best_heads = total, heads
            if total < relaxed_best[leaf]:
                relaxed_best[leaf] = total
        return best, best_heads

    tail_levels = list(range(K, k, -1))

    def solve_part(depth, leaves, tails):
        if depth == len(tail_levels):
            total = 0.0
            frag = {}
            for leaf in sorted(leaves):
                val, heads = leaf_value(leaf, tails)
                total += val
                frag[("heads", leaf)] = heads
            return total, frag
        i = tail_levels[depth]
        acc_i = instance.info.accessible(0, i)
        groups: dict[tuple, list] = {}
        for leaf in leaves:
            groups.setdefault(restrict_realization(acc_k, leaf, acc_i), []).append(leaf)
        total = 0.0
        frag: dict = {}
        for gkey in sorted(groups):
            best, best_frag, best_tab = math.inf, None, None
            for tab in tail_tables[i]:
                tails[i] = tab
                val, sub = solve_part(depth + 1, groups[gkey], tails)
                if val < best:
                    best, best_frag, best_tab = val, sub, tab
            del tails[i]
            total += best
            frag[("tail", i, gkey)] = best_tab
            frag.update(best_frag)
        return total, frag

    leaves = sorted(rows_by_leaf)
    dp_value, frag = solve_part(0, leaves, {})
    relaxed_value = math.fsum(relaxed_best[leaf] for leaf in leaves)

    laws = _default_laws(instance, k)
    for keyed, chosen in frag.items():
        if keyed[0] == "heads":
            leaf = keyed[1]
            for m in range(1, k + 1):
                laws[(0, m)][leaf] = chosen[m - 1]
        else:
            _, i, gkey = keyed
            laws[(0, i)][gkey] = chosen
    psi = PrescriptionStrategy(owner=k, laws=laws)
    strategy = joint_control_strategy(instance, psi)
    report = exact_strategy_cost(instance, strategy)
    extras = {
        "relaxed_value": relaxed_value,
        "relaxed_gap": abs(relaxed_value - report.expected_cost),
    }
    if extras["relaxed_gap"] > COST_TOL:
        extras["relaxed_gap_exceeds_tolerance"] = True
    return SolveResult(
        method="prescription-static",
        agent=k,
        optimal_cost=report.expected_cost,
        control_strategy=strategy,
        prescription_strategy=psi,
        search_size=count_strategies(instance, k),
        wall_time=time.perf_counter() - start,
        dp_value=dp_value,
        extras=extras,
    )


# -- evaluation and comparison ---------------------------------------------------


def evaluate_prescription_strategy(
    instance: Instance, psi: PrescriptionStrategy
) -> CostReport:
    """Exact cost of the control strategy a prescription strategy induces."""
    return exact_strategy_cost(instance, joint_control_strategy(instance, psi))


@dataclass
class CompareReport:
    rows: list
    max_spread: float


def compare_agents(instance: Instance, cap: int | None = None) -> CompareReport:
    """Run every applicable solver and check the optima agree."""
    rows = []

    def attempt(label, agent, fn):
        try:
            res = fn()
            rows.append(
                {
                    "method": label,
                    "agent": agent,
                    "status": "ok",
                    "cost": res.optimal_cost,
                    "search_size": res.search_size,
                    "wall_time": res.wall_time,
                }
            )
        except CapExceeded as exc:
            rows.append(
                {
                    "method": label,
                    "agent": agent,
                    "status": "skipped",
                    "reason": str(exc),
                }
            )

    attempt("brute", None, lambda: solve_brute_force(instance, cap))
    attempt("common-info", None, lambda: solve_common_info_dp(instance, cap))
    for k in range(1, instance.agent_count + 1):
        if instance.horizon == 0:
            attempt(
                "prescription-static",
                k,
                lambda k=k: solve_prescription_static(instance, k, cap),
            )
        else:
            attempt(
                "prescription-dp", k, lambda k=k: solve_prescription_dp(instance, k, cap)
            )
    costs = [r["cost"] for r in rows if r["status"] == "ok"]
    spread = max(costs) - min(costs) if costs else 0.0
    if spread > COST_TOL:
        raise WomError(f"solver optima disagree by {spread}: {rows}")
    return CompareReport(rows=rows, max_spread=spread)
