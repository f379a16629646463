"""Finite system model, instance validation, and exact / Monte Carlo strategy cost.

An instance couples the communication graph (or a direct delay matrix) with
finite dynamics, observation channels, per-stage costs, and the distributions
of the primitive random variables. All tables are dense numpy arrays; agents
are 1-based, values 0-based.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import netgraph
from .errors import (
    AgentCountMismatch,
    CapExceeded,
    DistributionNotNormalized,
    DomainMismatch,
    ShapeMismatch,
)
from .infostruct import (
    KIND_OBSERVATION,
    InfoSchema,
    InfoStructure,
    VariableId,
)

PROB_TOL = 1e-9
SWEEP_CAP = 1_000_000


@dataclass(frozen=True)
class SystemSpec:
    """Dynamics, observation channels, costs, and primitive distributions."""

    horizon: int
    state_size: int
    control_sizes: tuple[int, ...]
    observation_sizes: tuple[int, ...]
    disturbance_size: int
    disturbance_probs: np.ndarray  # (horizon, |W|)
    noise_sizes: tuple[int, ...]
    noise_probs: tuple[np.ndarray, ...]  # per agent, (horizon+1, |V^k|)
    initial_probs: np.ndarray  # (|X|,)
    transition: np.ndarray  # (horizon, |X|, NU, |W|) -> next state
    observation: tuple[np.ndarray, ...]  # per agent, (horizon+1, |X|, |V^k|) -> y
    cost: np.ndarray  # (horizon+1, |X|, NU)

    @property
    def agent_count(self) -> int:
        return len(self.control_sizes)

    @property
    def joint_control_count(self) -> int:
        return int(np.prod(self.control_sizes))


@dataclass(frozen=True)
class Instance:
    """Validated problem instance with precomputed information schemas."""

    system: SystemSpec
    delays: netgraph.DelayMatrix
    info: InfoStructure
    network: netgraph.NetworkSpec | None = None
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def agent_count(self) -> int:
        return self.system.agent_count

    @property
    def horizon(self) -> int:
        return self.system.horizon

    def variable_size(self, var: VariableId) -> int:
        if var.kind == KIND_OBSERVATION:
            return self.system.observation_sizes[var.agent - 1]
        return self.system.control_sizes[var.agent - 1]

    def schema_sizes(self, schema: InfoSchema) -> tuple[int, ...]:
        return tuple(self.variable_size(v) for v in schema)

    def joint_control_index(self, controls) -> int:
        idx = 0
        for size, u in zip(self.system.control_sizes, controls):
            idx = idx * size + u
        return idx


def realization_count(sizes) -> int:
    n = 1
    for s in sizes:
        n *= s
    return n


def enumerate_realizations(sizes):
    """Row-major enumeration: first coordinate slowest."""
    return itertools.product(*[range(s) for s in sizes])


def realization_index(sizes, values) -> int:
    idx = 0
    for size, v in zip(sizes, values):
        idx = idx * size + v
    return idx


def index_realization(sizes, index: int) -> tuple[int, ...]:
    out = []
    for size in reversed(sizes):
        out.append(index % size)
        index //= size
    return tuple(reversed(out))


def restrict_realization(schema: InfoSchema, values, sub: InfoSchema) -> tuple[int, ...]:
    """Project values of `schema` onto the subset schema `sub`."""
    pos = {v: i for i, v in enumerate(schema)}
    return tuple(values[pos[v]] for v in sub)


@dataclass(frozen=True)
class ControlStrategy:
    """Per (time, agent) lookup tables from full memory realizations to controls."""

    tables: dict  # (t, k) -> {realization tuple: action}


@dataclass(frozen=True)
class CostReport:
    expected_cost: float
    per_stage_costs: tuple[float, ...]
    method: str  # "exact" | "monte_carlo"
    stderr: float | None = None
    sample_count: int | None = None
    seed: int | None = None


def _check_distribution(name: str, vec: np.ndarray):
    if np.any(vec < 0):
        raise DistributionNotNormalized(name, float(vec.sum()))
    total = float(vec.sum())
    if abs(total - 1.0) > PROB_TOL:
        raise DistributionNotNormalized(name, total)


def _per_t_probs(raw, steps: int, size: int, name: str) -> np.ndarray:
    """Accept one vector (constant over time) or one vector per step."""
    arr = np.asarray(raw, dtype=float)
    if arr.ndim == 1:
        arr = np.tile(arr, (steps, 1)) if steps else np.zeros((0, size))
    if arr.shape != (steps, size):
        raise ShapeMismatch(f"{name} must have shape ({steps},{size}), got {arr.shape}")
    for t in range(steps):
        _check_distribution(f"{name}[t={t}]", arr[t])
    return arr


def validate_instance(system: SystemSpec, network) -> Instance:
    """Validate all tables and distributions and attach the information schemas.

    `network` is either a NetworkSpec (validated, delays derived) or a
    DelayMatrix supplied directly.
    """
    if isinstance(network, netgraph.NetworkSpec):
        netgraph.validate_network(network)
        delays = netgraph.compute_delay_matrix(network)
        netspec = network
    elif isinstance(network, netgraph.DelayMatrix):
        delays = netgraph.validate_delay_matrix(network.rows)
        netspec = None
    else:
        raise ShapeMismatch("network must be a NetworkSpec or DelayMatrix")

    K = system.agent_count
    if delays.agent_count != K:
        raise AgentCountMismatch(
            f"network has {delays.agent_count} agents, system has {K}"
        )
    T = system.horizon
    if T < 0:
        raise ShapeMismatch("horizon must be >= 0")
    if len(system.observation_sizes) != K or len(system.noise_sizes) != K:
        raise AgentCountMismatch("per-agent size lists must all have length K")

    _check_distribution("initial_probs", system.initial_probs)
    if system.initial_probs.shape != (system.state_size,):
        raise ShapeMismatch("initial_probs length must equal state_size")
    if system.disturbance_probs.shape != (T, system.disturbance_size):
        raise ShapeMismatch("disturbance_probs must have one row per stage 0..T-1")
    for t in range(T):
        _check_distribution(f"disturbance[t={t}]", system.disturbance_probs[t])
    for k in range(K):
        if system.noise_probs[k].shape != (T + 1, system.noise_sizes[k]):
            raise ShapeMismatch(f"noise_probs[{k + 1}] must have one row per stage 0..T")
        for t in range(T + 1):
            _check_distribution(f"noise[{k + 1}][t={t}]", system.noise_probs[k][t])

    NU = system.joint_control_count
    if system.transition.shape != (T, system.state_size, NU, system.disturbance_size):
        raise ShapeMismatch(
            f"transition shape {system.transition.shape} != "
            f"({T},{system.state_size},{NU},{system.disturbance_size})"
        )
    if np.any(system.transition < 0) or np.any(system.transition >= system.state_size):
        raise ShapeMismatch("transition entries out of state range")
    if system.cost.shape != (T + 1, system.state_size, NU):
        raise ShapeMismatch(
            f"cost shape {system.cost.shape} != ({T + 1},{system.state_size},{NU})"
        )
    for k in range(K):
        h = system.observation[k]
        if h.shape != (T + 1, system.state_size, system.noise_sizes[k]):
            raise ShapeMismatch(f"observation[{k + 1}] shape {h.shape} is wrong")
        if np.any(h < 0) or np.any(h >= system.observation_sizes[k]):
            raise ShapeMismatch(f"observation[{k + 1}] entries out of range")

    info = InfoStructure(delays, T)
    return Instance(system=system, delays=delays, info=info, network=netspec)


# -- trajectory evaluation ----------------------------------------------------


def memory_realization(instance: Instance, t: int, k: int, y, u) -> tuple[int, ...]:
    """Extract the memory realization from trajectory maps y[(t,k)], u[(t,k)]."""
    out = []
    for var in instance.info.memory(t, k):
        src = y if var.kind == KIND_OBSERVATION else u
        out.append(src[(var.time, var.agent)])
    return tuple(out)


def _rollout(instance: Instance, action_fn, x0: int, w_seq, v_seq):
    """One trajectory under the activity ordering: observe, act, pay, advance."""
    sys = instance.system
    T, K = sys.horizon, sys.agent_count
    y, u = {}, {}
    x = x0
    stage_costs = []
    for t in range(T + 1):
        for k in range(1, K + 1):
            y[(t, k)] = int(sys.observation[k - 1][t, x, v_seq[k - 1][t]])
        controls = tuple(action_fn(t, k, y, u) for k in range(1, K + 1))
        for k in range(1, K + 1):
            u[(t, k)] = controls[k - 1]
        uj = instance.joint_control_index(controls)
        stage_costs.append(float(sys.cost[t, x, uj]))
        if t < T:
            x = int(sys.transition[t, x, uj, w_seq[t]])
    return stage_costs


def _strategy_action_fn(instance: Instance, strategy: ControlStrategy):
    def action(t, k, y, u):
        table = strategy.tables.get((t, k))
        if table is None:
            raise DomainMismatch(f"strategy has no table for (t={t}, agent={k})")
        real = memory_realization(instance, t, k, y, u)
        try:
            return table[real]
        except KeyError:
            raise DomainMismatch(
                f"strategy table (t={t}, agent={k}) missing realization {real}"
            ) from None

    return action


def validate_strategy(instance: Instance, strategy: ControlStrategy):
    """Check that every table exactly enumerates the memory schema domain."""
    sys = instance.system
    for t in range(instance.horizon + 1):
        for k in range(1, sys.agent_count + 1):
            table = strategy.tables.get((t, k))
            if table is None:
                raise DomainMismatch(f"missing table for (t={t}, agent={k})")
            sizes = instance.schema_sizes(instance.info.memory(t, k))
            if len(table) != realization_count(sizes):
                raise DomainMismatch(
                    f"table (t={t}, agent={k}) has {len(table)} entries, "
                    f"expected {realization_count(sizes)}"
                )
            for real, act in table.items():
                if tuple(int(v) for v in real) != real or any(
                    not (0 <= v < s) for v, s in zip(real, sizes)
                ):
                    raise DomainMismatch(
                        f"table (t={t}, agent={k}) has out-of-range key {real}"
                    )
                if not (0 <= act < sys.control_sizes[k - 1]):
                    raise DomainMismatch(
                        f"table (t={t}, agent={k}) maps {real} to invalid action {act}"
                    )
    return strategy


def joint_primitives(instance: Instance):
    """Yield (prob, x0, w_seq, v_seq) over the support of the primitive variables."""
    sys = instance.system
    T, K = sys.horizon, sys.agent_count
    total = sys.state_size * sys.disturbance_size**T
    for k in range(K):
        total *= sys.noise_sizes[k] ** (T + 1)
    if total > SWEEP_CAP:
        raise CapExceeded(total, SWEEP_CAP, "joint primitive enumeration")
    w_space = list(itertools.product(range(sys.disturbance_size), repeat=T))
    v_spaces = [
        list(itertools.product(range(sys.noise_sizes[k]), repeat=T + 1))
        for k in range(K)
    ]
    for x0 in range(sys.state_size):
        p0 = float(sys.initial_probs[x0])
        if p0 == 0.0:
            continue
        for w_seq in w_space:
            pw = p0
            for t, w in enumerate(w_seq):
                pw *= float(sys.disturbance_probs[t, w])
            if pw == 0.0:
                continue
            for v_combo in itertools.product(*v_spaces):
                p = pw
                for k in range(K):
                    for t in range(T + 1):
                        p *= float(sys.noise_probs[k][t, v_combo[k][t]])
                if p == 0.0:
                    continue
                yield p, x0, w_seq, v_combo


def exact_strategy_cost(instance: Instance, strategy: ControlStrategy) -> CostReport:
    """Expected total cost by exhaustive enumeration of the primitive variables."""
    action = _strategy_action_fn(instance, strategy)
    T = instance.horizon
    stage_terms: list[list[float]] = [[] for _ in range(T + 1)]
    for p, x0, w_seq, v_seq in joint_primitives(instance):
        costs = _rollout(instance, action, x0, w_seq, v_seq)
        for t in range(T + 1):
            stage_terms[t].append(p * costs[t])
    per_stage = tuple(math.fsum(terms) for terms in stage_terms)
    return CostReport(
        expected_cost=math.fsum(per_stage), per_stage_costs=per_stage, method="exact"
    )


def monte_carlo_cost(
    instance: Instance, strategy: ControlStrategy, samples: int, seed: int = 0
) -> CostReport:
    """Seeded sample mean of the total cost over independent rollouts."""
    if samples < 1:
        raise ShapeMismatch("samples must be >= 1")
    sys = instance.system
    T, K = sys.horizon, sys.agent_count
    action = _strategy_action_fn(instance, strategy)
    rng = np.random.default_rng(seed)
    x0s = rng.choice(sys.state_size, size=samples, p=sys.initial_probs)
    ws = np.stack(
        [
            rng.choice(sys.disturbance_size, size=samples, p=sys.disturbance_probs[t])
            for t in range(T)
        ],
        axis=1,
    ) if T else np.zeros((samples, 0), dtype=int)
    vs = [
        np.stack(
            [
                rng.choice(sys.noise_sizes[k], size=samples, p=sys.noise_probs[k][t])
                for t in range(T + 1)
            ],
            axis=1,
        )
        for k in range(K)
    ]
    totals = np.empty(samples)
    stage_sums = np.zeros(T + 1)
    for n in range(samples):
        costs = _rollout(
            instance, action, int(x0s[n]), tuple(ws[n]), [vs[k][n] for k in range(K)]
        )
        totals[n] = sum(costs)
        stage_sums += costs
    stderr = float(totals.std(ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0
    return CostReport(
        expected_cost=float(totals.mean()),
        per_stage_costs=tuple(stage_sums / samples),
        method="monte_carlo",
        stderr=stderr,
        sample_count=samples,
        seed=seed,
    )


# -- feasible realizations ----------------------------------------------------


def _trajectory_sweep(instance: Instance):
    """All (y, u) trajectory maps reachable over primitive support x free controls."""
    sys = instance.system
    T, K = sys.horizon, sys.agent_count
    control_space = list(
        itertools.product(
            *[range(sys.control_sizes[k]) for _ in range(T) for k in range(K)]
        )
    )
    prim = list(joint_primitives(instance))
    if len(prim) * max(1, len(control_space)) > SWEEP_CAP:
        raise CapExceeded(
            len(prim) * len(control_space), SWEEP_CAP, "feasible-realization sweep"
        )
    out = []
    for _, x0, w_seq, v_seq in prim:
        for flat in control_space:
            y, u = {}, {}
            x = x0
            pos = 0
            for t in range(T + 1):
                for k in range(1, K + 1):
                    y[(t, k)] = int(sys.observation[k - 1][t, x, v_seq[k - 1][t]])
                if t < T:
                    controls = flat[pos : pos + K]
                    pos += K
                    for k in range(1, K + 1):
                        u[(t, k)] = controls[k - 1]
                    x = int(sys.transition[t, x, instance.joint_control_index(controls), w_seq[t]])
            out.append((y, u))
    return out


def feasible_schema_realizations(instance: Instance, schema: InfoSchema):
    """Sorted realizations of `schema` reachable under free controls.

    Controls are treated as free exogenous choices, so the result is the union
    of supports over all strategies.
    """
    key = ("feas", schema)
    if key in instance._cache:
        return instance._cache[key]
    if "sweep" not in instance._cache:
        instance._cache["sweep"] = _trajectory_sweep(instance)
    found = set()
    for y, u in instance._cache["sweep"]:
        vals = []
        ok = True
        for var in schema:
            src = y if var.kind == KIND_OBSERVATION else u
            if (var.time, var.agent) not in src:
                ok = False
                break
            vals.append(src[(var.time, var.agent)])
        if ok:
            found.add(tuple(vals))
    result = tuple(sorted(found))
    instance._cache[key] = result
    return result


def feasible_memory_realizations(instance: Instance, t: int, k: int):
    return feasible_schema_realizations(instance, instance.info.memory(t, k))


# -- instance JSON ------------------------------------------------------------


def instance_to_dict(instance: Instance) -> dict:
    sys = instance.system
    net: dict = {"agents": instance.agent_count}
    if instance.network is not None:
        net["links"] = [
            {"from": f, "to": t, "delay": d} for f, t, d in instance.network.links
        ]
    else:
        net["delay_matrix"] = [list(r) for r in instance.delays.rows]
    return {
        "network": net,
        "system": {
            "horizon": sys.horizon,
            "state_size": sys.state_size,
            "control_sizes": list(sys.control_sizes),
            "observation_sizes": list(sys.observation_sizes),
            "disturbance": {
                "size": sys.disturbance_size,
                "probs_per_t": sys.disturbance_probs.tolist(),
            },
            "noises": [
                {"size": sys.noise_sizes[k], "probs_per_t": sys.noise_probs[k].tolist()}
                for k in range(sys.agent_count)
            ],
            "initial_probs": sys.initial_probs.tolist(),
            "transition": sys.transition.tolist(),
            "observation": [h.tolist() for h in sys.observation],
            "cost": sys.cost.tolist(),
        },
    }


def instance_from_dict(data: dict) -> Instance:
    try:
        net = data["network"]
        raw = data["system"]
        K = len(raw["control_sizes"])
        T = int(raw["horizon"])
        state_size = int(raw["state_size"])
        control_sizes = tuple(int(v) for v in raw["control_sizes"])
        observation_sizes = tuple(int(v) for v in raw["observation_sizes"])
        dist = raw.get("disturbance", {"size": 1, "probs_per_t": [1.0]})
        w_size = int(dist["size"])
        noises = raw["noises"]
        noise_sizes = tuple(int(n["size"]) for n in noises)
        nu = 1
        for s in control_sizes:
            nu *= s
        transition = raw.get("transition")
        if transition is None:
            if T != 0:
                raise ShapeMismatch("transition table required when horizon > 0")
            transition = np.zeros((0, state_size, nu, w_size), dtype=int)
        system = SystemSpec(
            horizon=T,
            state_size=state_size,
            control_sizes=control_sizes,
            observation_sizes=observation_sizes,
            disturbance_size=w_size,
            disturbance_probs=_per_t_probs(dist["probs_per_t"], T, w_size, "disturbance"),
            noise_sizes=noise_sizes,
            noise_probs=tuple(
                _per_t_probs(
                    noises[k]["probs_per_t"], T + 1, noise_sizes[k], f"noise[{k + 1}]"
                )
                for k in range(K)
            ),
            initial_probs=np.asarray(raw["initial_probs"], dtype=float),
            transition=np.asarray(transition, dtype=int),
            observation=tuple(
                np.asarray(raw["observation"][k], dtype=int) for k in range(K)
            ),
            cost=np.asarray(raw["cost"], dtype=float),
        )
    except (KeyError, IndexError, TypeError, ValueError) as exc:
        raise ShapeMismatch(f"malformed instance document: {exc}") from exc
    if "links" in net:
        network = netgraph.NetworkSpec(
            agent_count=int(net["agents"]),
            links=tuple(
                (int(l["from"]), int(l["to"]), int(l["delay"])) for l in net["links"]
            ),
        )
        return validate_instance(system, network)
    if "delay_matrix" in net:
        matrix = netgraph.DelayMatrix(tuple(tuple(r) for r in net["delay_matrix"]))
        if "agents" in net and int(net["agents"]) != matrix.agent_count:
            raise AgentCountMismatch(
                f"network.agents is {net['agents']} but the delay matrix has "
                f"{matrix.agent_count} rows"
            )
        return validate_instance(system, matrix)
    raise ShapeMismatch("network must carry either links or delay_matrix")


def load_instance(path: str) -> Instance:
    with open(path, "r", encoding="utf-8") as fh:
        return instance_from_dict(json.load(fh))


def instance_digest(instance: Instance) -> str:
    canon = json.dumps(instance_to_dict(instance), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


# -- agent relabeling ---------------------------------------------------------


def permute_instance(instance: Instance, perm: tuple[int, ...]) -> Instance:
    """Relabel agents; perm[new_index-1] is the old index taking that position."""
    sys = instance.system
    K = sys.agent_count
    if sorted(perm) != list(range(1, K + 1)):
        raise ShapeMismatch(f"{perm} is not a permutation of 1..{K}")
    old_of_new = [p - 1 for p in perm]
    new_of_old = [0] * K
    for new, old in enumerate(old_of_new):
        new_of_old[old] = new

    control_sizes = tuple(sys.control_sizes[o] for o in old_of_new)
    new_nu = sys.joint_control_count
    joint_map = np.empty(new_nu, dtype=int)
    for idx, combo in enumerate(enumerate_realizations(control_sizes)):
        old_combo = tuple(combo[new_of_old[o]] for o in range(K))
        joint_map[idx] = realization_index(sys.control_sizes, old_combo)

    transition = sys.transition[:, :, joint_map, :] if sys.horizon else sys.transition
    cost = sys.cost[:, :, joint_map]
    system = SystemSpec(
        horizon=sys.horizon,
        state_size=sys.state_size,
        control_sizes=control_sizes,
        observation_sizes=tuple(sys.observation_sizes[o] for o in old_of_new),
        disturbance_size=sys.disturbance_size,
        disturbance_probs=sys.disturbance_probs,
        noise_sizes=tuple(sys.noise_sizes[o] for o in old_of_new),
        noise_probs=tuple(sys.noise_probs[o] for o in old_of_new),
        initial_probs=sys.initial_probs,
        transition=transition,
        observation=tuple(sys.observation[o] for o in old_of_new),
        cost=cost,
    )
    rows = tuple(
        tuple(instance.delays.rows[old_of_new[j]][old_of_new[k]] for k in range(K))
        for j in range(K)
    )
    if instance.network is not None:
        links = tuple(
            sorted(
                (new_of_old[f - 1] + 1, new_of_old[t - 1] + 1, d)
                for f, t, d in instance.network.links
            )
        )
        return validate_instance(
            system, netgraph.NetworkSpec(agent_count=K, links=links)
        )
    return validate_instance(system, netgraph.DelayMatrix(rows))
