"""Shared builders for the tests: random strategies, fuzzed instances, walkers."""

from __future__ import annotations

import random

from womctl.belief import belief_step, initial_information_state
from womctl.prescription import (
    PrescriptionStrategy,
    complete_prescription_at,
    make_prescription,
)
from womctl.sysmodel import (
    ControlStrategy,
    Instance,
    enumerate_realizations,
    instance_from_dict,
    realization_count,
)


def random_prescription_strategy(instance: Instance, k: int, rng: random.Random):
    laws = {}
    for t in range(instance.horizon + 1):
        for target in range(1, instance.agent_count + 1):
            cond = instance.info.conditioning_schema(t, k, target)
            dom = instance.info.prescription_domain(t, k, target)
            entries = realization_count(instance.schema_sizes(dom))
            csize = instance.system.control_sizes[target - 1]
            law = {}
            for real in enumerate_realizations(instance.schema_sizes(cond)):
                law[real] = make_prescription(
                    instance, t, k, target, [rng.randrange(csize) for _ in range(entries)]
                )
            laws[(t, target)] = law
    return PrescriptionStrategy(owner=k, laws=laws)


def random_control_strategy(instance: Instance, rng: random.Random) -> ControlStrategy:
    tables = {}
    for t in range(instance.horizon + 1):
        for k in range(1, instance.agent_count + 1):
            sizes = instance.schema_sizes(instance.info.memory(t, k))
            csize = instance.system.control_sizes[k - 1]
            tables[(t, k)] = {
                real: rng.randrange(csize) for real in enumerate_realizations(sizes)
            }
    return ControlStrategy(tables=tables)


def copy_observation_strategy(instance: Instance) -> ControlStrategy:
    """Each agent plays her newest own observation (requires |U^k| >= |Y^k|)."""
    tables = {}
    for t in range(instance.horizon + 1):
        for k in range(1, instance.agent_count + 1):
            schema = instance.info.memory(t, k)
            own = max(
                (i for i, v in enumerate(schema) if v.agent == k and v.kind == "Y"),
                key=lambda i: schema[i].time,
            )
            sizes = instance.schema_sizes(schema)
            tables[(t, k)] = {
                real: real[own] for real in enumerate_realizations(sizes)
            }
    return ControlStrategy(tables=tables)


def reachable_branches(instance: Instance, psi: PrescriptionStrategy, k: int):
    """Every positive-probability branch of agent k's filter under psi.

    Yields (t, accessible-variable map, belief, branch probability).
    """
    from womctl.belief import accessible_support

    init = initial_information_state(instance, k)
    acc0 = instance.info.accessible(0, k)
    mass0 = accessible_support(instance, k)
    out = []

    def rec(t, amap, pi, prob):
        out.append((t, dict(amap), pi, prob))
        if t == instance.horizon:
            return
        a_real = tuple(amap[v] for v in instance.info.accessible(t, k))
        theta = complete_prescription_at(instance, psi, t, a_real)
        for z, (pz, nxt) in belief_step(instance, pi, theta).items():
            child = dict(amap)
            for var, val in zip(instance.info.new_info(t + 1, k), z):
                child[var] = val
            rec(t + 1, child, nxt, prob * pz)

    for a0, pi in init.items():
        rec(0, dict(zip(acc0, a0)), pi, mass0[a0])
    return out


def _norm(rng, n):
    vec = [rng.uniform(0.1, 1.0) for _ in range(n)]
    s = sum(vec)
    return [v / s for v in vec]


def _rand_cost(rng, x_size, nu):
    return [[round(rng.uniform(0.0, 2.0), 3) for _ in range(nu)] for _ in range(x_size)]


def _rand_transition(rng, x_size, nu, w_size):
    return [
        [[rng.randrange(x_size) for _ in range(w_size)] for _ in range(nu)]
        for _ in range(x_size)
    ]


def fuzz_instance(seed: int) -> Instance:
    """Deterministic family of small instances within the brute-force cap.

    Rotates through static nested three-agent systems, static two-agent
    systems, one-stage two-agent dynamics (shared noise-free observation or
    noisy observations with a passive second agent), single-agent problems,
    a three-stage shape with one active controller, and one-stage three-agent
    dynamics over fully connected or relay topologies.
    """
    rng = random.Random(909 + seed)
    kind = seed % 8

    if kind == 0:  # static, three agents, nested visibility
        x_size = rng.choice([2, 3])
        flip = [[x % 2, 1 - (x % 2)] for x in range(x_size)]
        doc = {
            "network": {"agents": 3, "delay_matrix": [[0, 1, 1], [0, 0, 1], [0, 0, 0]]},
            "system": {
                "horizon": 0,
                "state_size": x_size,
                "control_sizes": [2, 2, 2],
                "observation_sizes": [2, 2, 2],
                "noises": [
                    {"size": 2, "probs_per_t": _norm(rng, 2)} for _ in range(3)
                ],
                "initial_probs": _norm(rng, x_size),
                "observation": [[flip]] * 3,
                "cost": [_rand_cost(rng, x_size, 8)],
            },
        }
    elif kind == 1:  # static, two agents, agent 1 sees both observations
        x_size = rng.choice([2, 3])
        flip = [[x % 2, 1 - (x % 2)] for x in range(x_size)]
        doc = {
            "network": {"agents": 2, "delay_matrix": [[0, 1], [0, 0]]},
            "system": {
                "horizon": 0,
                "state_size": x_size,
                "control_sizes": [2, 2],
                "observation_sizes": [2, 2],
                "noises": [{"size": 2, "probs_per_t": _norm(rng, 2)} for _ in range(2)],
                "initial_probs": _norm(rng, x_size),
                "observation": [[flip]] * 2,
                "cost": [_rand_cost(rng, x_size, 4)],
            },
        }
    elif kind == 2:  # one stage, both agents act, shared noise-free observation
        x_size = rng.choice([2, 3])
        obs = [[x % 2] for x in range(x_size)]
        doc = {
            "network": {
                "agents": 2,
                "links": [
                    {"from": 1, "to": 2, "delay": 1},
                    {"from": 2, "to": 1, "delay": 1},
                ],
            },
            "system": {
                "horizon": 1,
                "state_size": x_size,
                "control_sizes": [2, 2],
                "observation_sizes": [2, 2],
                "disturbance": {"size": 2, "probs_per_t": _norm(rng, 2)},
                "noises": [{"size": 1, "probs_per_t": [1.0]} for _ in range(2)],
                "initial_probs": _norm(rng, x_size),
                "transition": [_rand_transition(rng, x_size, 4, 2)],
                "observation": [[obs, obs]] * 2,
                "cost": [_rand_cost(rng, x_size, 4), _rand_cost(rng, x_size, 4)],
            },
        }
    elif kind == 3:  # one stage, noisy observations, passive second agent
        x_size = 2
        flip = [[x, 1 - x] for x in range(x_size)]
        delay = rng.choice([1, 2])
        doc = {
            "network": {
                "agents": 2,
                "links": [
                    {"from": 1, "to": 2, "delay": delay},
                    {"from": 2, "to": 1, "delay": delay},
                ],
            },
            "system": {
                "horizon": 1,
                "state_size": x_size,
                "control_sizes": [2, 1],
                "observation_sizes": [2, 2],
                "disturbance": {"size": 2, "probs_per_t": _norm(rng, 2)},
                "noises": [{"size": 2, "probs_per_t": _norm(rng, 2)} for _ in range(2)],
                "initial_probs": _norm(rng, x_size),
                "transition": [_rand_transition(rng, x_size, 2, 2)],
                "observation": [[flip, flip]] * 2,
                "cost": [_rand_cost(rng, x_size, 2), _rand_cost(rng, x_size, 2)],
            },
        }
    elif kind == 4:  # single agent, one stage, noisy
        x_size = rng.choice([2, 3])
        flip = [[x % 2, 1 - (x % 2)] for x in range(x_size)]
        doc = {
            "network": {"agents": 1, "links": []},
            "system": {
                "horizon": 1,
                "state_size": x_size,
                "control_sizes": [2],
                "observation_sizes": [2],
                "disturbance": {"size": 2, "probs_per_t": _norm(rng, 2)},
                "noises": [{"size": 2, "probs_per_t": _norm(rng, 2)}],
                "initial_probs": _norm(rng, x_size),
                "transition": [_rand_transition(rng, x_size, 2, 2)],
                "observation": [[flip, flip]],
                "cost": [_rand_cost(rng, x_size, 2), _rand_cost(rng, x_size, 2)],
            },
        }
    elif kind == 5:  # three stages, one active controller, observer second agent
        x_size = 2
        ident = [[x] for x in range(x_size)]
        blind = [[0] for _ in range(x_size)]
        doc = {
            "network": {
                "agents": 2,
                "links": [
                    {"from": 1, "to": 2, "delay": 1},
                    {"from": 2, "to": 1, "delay": 1},
                ],
            },
            "system": {
                "horizon": 2,
                "state_size": x_size,
                "control_sizes": [2, 1],
                "observation_sizes": [2, 2],
                "disturbance": {"size": 2, "probs_per_t": _norm(rng, 2)},
                "noises": [{"size": 1, "probs_per_t": [1.0]} for _ in range(2)],
                "initial_probs": _norm(rng, x_size),
                "transition": [
                    _rand_transition(rng, x_size, 2, 2),
                    _rand_transition(rng, x_size, 2, 2),
                ],
                "observation": [[ident, blind, blind], [ident, ident, ident]],
                "cost": [_rand_cost(rng, x_size, 2) for _ in range(3)],
            },
        }
    elif kind == 6:  # one stage, three fully linked agents, one active controller
        x_size = rng.choice([2, 3])
        obs = [[x % 2] for x in range(x_size)]
        links = [
            {"from": f, "to": t, "delay": 1}
            for f in (1, 2, 3)
            for t in (1, 2, 3)
            if f != t
        ]
        doc = {
            "network": {"agents": 3, "links": links},
            "system": {
                "horizon": 1,
                "state_size": x_size,
                "control_sizes": [2, 1, 1],
                "observation_sizes": [2, 2, 2],
                "disturbance": {"size": 2, "probs_per_t": _norm(rng, 2)},
                "noises": [{"size": 1, "probs_per_t": [1.0]} for _ in range(3)],
                "initial_probs": _norm(rng, x_size),
                "transition": [_rand_transition(rng, x_size, 2, 2)],
                "observation": [[obs, obs]] * 3,
                "cost": [_rand_cost(rng, x_size, 2), _rand_cost(rng, x_size, 2)],
            },
        }
    else:  # one stage, three fully linked agents, two active controllers
        x_size = 2
        obs = [[x % 2] for x in range(x_size)]
        links = [
            {"from": f, "to": t, "delay": 1}
            for f in (1, 2, 3)
            for t in (1, 2, 3)
            if f != t
        ]
        doc = {
            "network": {"agents": 3, "links": links},
            "system": {
                "horizon": 1,
                "state_size": x_size,
                "control_sizes": [2, 2, 1],
                "observation_sizes": [2, 2, 2],
                "disturbance": {"size": 2, "probs_per_t": _norm(rng, 2)},
                "noises": [{"size": 1, "probs_per_t": [1.0]} for _ in range(3)],
                "initial_probs": _norm(rng, x_size),
                "transition": [_rand_transition(rng, x_size, 4, 2)],
                "observation": [[obs, obs]] * 3,
                "cost": [_rand_cost(rng, x_size, 4), _rand_cost(rng, x_size, 4)],
            },
        }
    return instance_from_dict(doc)
