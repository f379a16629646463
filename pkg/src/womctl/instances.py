"""Bundled demonstration instances.

All instances are built as plain JSON-shaped dicts and loaded through the
standard parser, so they double as format references.

- static3: three agents, single stage, nested visibility (agent 1 sees every
  observation, agent 3 only her own), noisy binary channels over a binary state.
- static3_reindexed: the same system with the agent order reversed.
- d2: two agents, two stages, delay-1 links both ways, noise-free shared
  observation of a binary state, binary disturbance, mismatch costs.
- d2ext: a three-stage variant of d2 in which only agent 1 acts and only
  agent 2 keeps observing after t=0.
- wom3: three agents with per-agent binary subsystems relaying through agent 1
  (direct links delay 1, the far pair at delay 2), noise-free local
  observations, three stages.
"""

from __future__ import annotations

from .sysmodel import Instance, instance_from_dict, permute_instance


def _mismatch(u, x):
    return 1.0 if u != x else 0.0


def static3_dict() -> dict:
    cost = [
        [
            _mismatch(u1, x) + 1.3 * _mismatch(u2, x) + 0.7 * _mismatch(u3, x)
            + 0.5 * _mismatch(u1, u2)
            for u1 in range(2)
            for u2 in range(2)
            for u3 in range(2)
        ]
        for x in range(2)
    ]
    flip = [[x, 1 - x] for x in range(2)]  # observation correct unless the noise fires
    return {
        "network": {"agents": 3, "delay_matrix": [[0, 1, 1], [0, 0, 1], [0, 0, 0]]},
        "system": {
            "horizon": 0,
            "state_size": 2,
            "control_sizes": [2, 2, 2],
            "observation_sizes": [2, 2, 2],
            "disturbance": {"size": 1, "probs_per_t": [1.0]},
            "noises": [
                {"size": 2, "probs_per_t": [0.8, 0.2]},
                {"size": 2, "probs_per_t": [0.8, 0.2]},
                {"size": 2, "probs_per_t": [0.8, 0.2]},
            ],
            "initial_probs": [0.5, 0.5],
            "observation": [[flip], [flip], [flip]],
            "cost": [cost],
        },
    }


def d2_dict() -> dict:
    transition = [
        [
            [[(x + u1 + u2 + w) % 2 for w in range(2)] for u1 in range(2) for u2 in range(2)]
            for x in range(2)
        ]
    ]
    # Mismatch terms plus a low-state penalty: steering the state up via a
    # single-agent deviation beats copying, so the optimum is asymmetric.
    cost_t = [
        [
            _mismatch(u1, x) + _mismatch(u2, x) + (3.0 if x == 0 else 0.0)
            for u1 in range(2)
            for u2 in range(2)
        ]
        for x in range(2)
    ]
    ident = [[x] for x in range(2)]
    return {
        "network": {
            "agents": 2,
            "links": [
                {"from": 1, "to": 2, "delay": 1},
                {"from": 2, "to": 1, "delay": 1},
            ],
        },
        "system": {
            "horizon": 1,
            "state_size": 2,
            "control_sizes": [2, 2],
            "observation_sizes": [2, 2],
            "disturbance": {"size": 2, "probs_per_t": [0.7, 0.3]},
            "noises": [
                {"size": 1, "probs_per_t": [1.0]},
                {"size": 1, "probs_per_t": [1.0]},
            ],
            "initial_probs": [0.6, 0.4],
            "transition": transition,
            "observation": [[ident, ident], [ident, ident]],
            "cost": [cost_t, cost_t],
        },
    }


def d2ext_dict() -> dict:
    transition_t = [
        [[(x + u1 + w) % 2 for w in range(2)] for u1 in range(2) for _u2 in range(1)]
        for x in range(2)
    ]
    cost_t = [
        [_mismatch(u1, x) + 0.25 * u1 for u1 in range(2) for _u2 in range(1)]
        for x in range(2)
    ]
    ident = [[x] for x in range(2)]
    blind = [[0] for _x in range(2)]
    return {
        "network": {
            "agents": 2,
            "links": [
                {"from": 1, "to": 2, "delay": 1},
                {"from": 2, "to": 1, "delay": 1},
            ],
        },
        "system": {
            "horizon": 2,
            "state_size": 2,
            "control_sizes": [2, 1],
            "observation_sizes": [2, 2],
            "disturbance": {"size": 2, "probs_per_t": [0.7, 0.3]},
            "noises": [
                {"size": 1, "probs_per_t": [1.0]},
                {"size": 1, "probs_per_t": [1.0]},
            ],
            "initial_probs": [0.6, 0.4],
            "transition": [transition_t, transition_t],
            "observation": [[ident, blind, blind], [ident, ident, ident]],
            "cost": [cost_t, cost_t, cost_t],
        },
    }


def wom3_dict() -> dict:
    def bits(x):
        return (x >> 2) & 1, (x >> 1) & 1, x & 1

    def pack(b1, b2, b3):
        return (b1 << 2) | (b2 << 1) | b3

    transition_t = []
    for x in range(8):
        x1, x2, x3 = bits(x)
        row = []
        for u1 in range(2):
            for u2 in range(2):
                for u3 in range(2):
                    row.append(
                        [
                            pack(x1 ^ u1 ^ w, x2 ^ u2 ^ x1, x3 ^ u3 ^ x2)
                            for w in range(2)
                        ]
                    )
        transition_t.append(row)
    cost_t = []
    for x in range(8):
        x1, x2, x3 = bits(x)
        cost_t.append(
            [
                _mismatch(u1, x2) + _mismatch(u2, x3) + _mismatch(u3, x1)
                + 0.2 * (u1 + u2 + u3)
                for u1 in range(2)
                for u2 in range(2)
                for u3 in range(2)
            ]
        )
    obs = [
        [[(x >> shift) & 1] for x in range(8)] for shift in (2, 1, 0)
    ]  # per-agent local subsystem readout
    return {
        "network": {
            "agents": 3,
            "links": [
                {"from": 1, "to": 2, "delay": 1},
                {"from": 2, "to": 1, "delay": 1},
                {"from": 1, "to": 3, "delay": 1},
                {"from": 3, "to": 1, "delay": 1},
            ],
        },
        "system": {
            "horizon": 2,
            "state_size": 8,
            "control_sizes": [2, 2, 2],
            "observation_sizes": [2, 2, 2],
            "disturbance": {"size": 2, "probs_per_t": [0.6, 0.4]},
            "noises": [
                {"size": 1, "probs_per_t": [1.0]},
                {"size": 1, "probs_per_t": [1.0]},
                {"size": 1, "probs_per_t": [1.0]},
            ],
            "initial_probs": [0.2, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.2],
            "transition": [transition_t, transition_t],
            "observation": [[obs[0]] * 3, [obs[1]] * 3, [obs[2]] * 3],
            "cost": [cost_t, cost_t, cost_t],
        },
    }


def load_static3() -> Instance:
    return instance_from_dict(static3_dict())


def load_static3_reindexed() -> Instance:
    return permute_instance(load_static3(), (3, 2, 1))


def load_d2() -> Instance:
    return instance_from_dict(d2_dict())


def load_d2ext() -> Instance:
    return instance_from_dict(d2ext_dict())


def load_wom3() -> Instance:
    return instance_from_dict(wom3_dict())


BUNDLED = {
    "static3": static3_dict,
    "d2": d2_dict,
    "d2ext": d2ext_dict,
    "wom3": wom3_dict,
}
