"""Equivalent-state dynamics, information-state filtering, and belief factorization.

An information state is the conditional distribution of one agent's sufficient
state (system state plus the inaccessible-information coordinates) given her
accessible information and past complete prescriptions. Supports are indexed
row-major with the system state as the slowest coordinate.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import ImpossibleObservation, SchemaMismatch
from .infostruct import KIND_CONTROL, KIND_OBSERVATION, InfoSchema
from .prescription import CompletePrescription, apply_prescription
from .sysmodel import (
    Instance,
    realization_count,
    realization_index,
    restrict_realization,
)

NORM_TOL = 1e-9
ZERO_TOL = 1e-12
KEY_DECIMALS = 12


@dataclass(frozen=True)
class InformationState:
    agent: int
    time: int
    support: InfoSchema  # variables after the implicit leading system-state coordinate
    probs: np.ndarray

    def key(self) -> tuple:
        return tuple(round(float(p), KEY_DECIMALS) for p in self.probs)


@dataclass(frozen=True)
class ConnectionTerm:
    low_agent: int
    high_agent: int
    time: int
    support: InfoSchema
    probs: np.ndarray


def _support_sizes(instance: Instance, support: InfoSchema) -> tuple[int, ...]:
    return (instance.system.state_size,) + instance.schema_sizes(support)


def make_information_state(instance, agent, time, probs) -> InformationState:
    support = instance.info.equivalent_state(time, agent)
    vec = np.asarray(probs, dtype=float)
    expected = realization_count(_support_sizes(instance, support))
    if vec.shape != (expected,):
        raise SchemaMismatch(
            f"belief vector for agent {agent} at t={time} must have length {expected}"
        )
    if np.any(vec < -NORM_TOL) or abs(float(vec.sum()) - 1.0) > NORM_TOL:
        raise SchemaMismatch("belief vector must be a probability distribution")
    return InformationState(agent=agent, time=time, support=support, probs=vec)


def _controls_from_state(instance, theta: CompletePrescription, support, values):
    """Apply every prescription of theta to its coordinates inside the state."""
    var_vals = dict(zip(support, values))
    controls = []
    for target in range(1, instance.agent_count + 1):
        part = theta.parts[target - 1]
        try:
            inputs = tuple(var_vals[v] for v in part.domain)
        except KeyError as exc:
            raise SchemaMismatch(
                f"prescription domain variable {exc.args[0]} is not a state coordinate"
            ) from exc
        controls.append(apply_prescription(part, inputs))
    return tuple(controls)


def _check_theta(instance, k, t, theta: CompletePrescription):
    if theta.owner != k or theta.time != t:
        raise SchemaMismatch(
            f"complete prescription is for owner {theta.owner} at t={theta.time}, "
            f"expected owner {k} at t={t}"
        )
    for target in range(1, instance.agent_count + 1):
        want = instance.info.prescription_domain(t, k, target)
        if theta.parts[target - 1].domain != want:
            raise SchemaMismatch(f"prescription domain for target {target} is wrong")


def trace_step(instance, k, t, state_values, theta, w, v_vector):
    """One equivalent-state step: returns (next state values, new-information values).

    `state_values` is (x, *support values) at stage t; w is the stage-t
    disturbance and v_vector the stage-t+1 noises. The new-information values
    are keyed to the agent's t+1 new-information schema.
    """
    sys = instance.system
    if t >= sys.horizon:
        raise SchemaMismatch("no stage follows the horizon")
    _check_theta(instance, k, t, theta)
    support = instance.info.equivalent_state(t, k)
    x = state_values[0]
    values = tuple(state_values[1:])
    controls = _controls_from_state(instance, theta, support, values)
    uj = instance.joint_control_index(controls)
    x_next = int(sys.transition[t, x, uj, w])

    known = dict(zip(support, values))
    for j in range(1, sys.agent_count + 1):
        known[(t + 1, j, KIND_OBSERVATION)] = int(
            sys.observation[j - 1][t + 1, x_next, v_vector[j - 1]]
        )
        known[(t, j, KIND_CONTROL)] = controls[j - 1]

    def read(schema):
        out = []
        for var in schema:
            if var not in known:
                raise SchemaMismatch(f"variable {var} not derivable from the state")
            out.append(known[var])
        return tuple(out)

    next_state = (x_next,) + read(instance.info.equivalent_state(t + 1, k))
    new_info = read(instance.info.new_info(t + 1, k))
    return next_state, new_info


def hat_dynamics(instance, k, t, state_values, w, v_vector, theta):
    """Next equivalent-state realization."""
    return trace_step(instance, k, t, state_values, theta, w, v_vector)[0]


def hat_observation(instance, k, t, state_values, theta, w, v_vector):
    """New-information realization at t+1. Needs w because fresh observations
    can depend on the advanced system state."""
    return trace_step(instance, k, t, state_values, theta, w, v_vector)[1]


def hat_cost(instance, k, t, state_values, theta) -> float:
    """Stage cost decoded from the equivalent state and the complete prescription."""
    _check_theta(instance, k, t, theta)
    support = instance.info.equivalent_state(t, k)
    controls = _controls_from_state(instance, theta, support, tuple(state_values[1:]))
    return float(instance.system.cost[t, state_values[0], instance.joint_control_index(controls)])


def accessible_support(instance, k) -> dict:
    """Probability of each realization of the agent's t=0 accessible info."""
    sys = instance.system
    acc = instance.info.accessible(0, k)
    out: dict[tuple, float] = {}
    noise_axes = [range(sys.noise_sizes[j]) for j in range(sys.agent_count)]
    for x0 in range(sys.state_size):
        p0 = float(sys.initial_probs[x0])
        if p0 == 0.0:
            continue
        for v in itertools.product(*noise_axes):
            p = p0
            for j in range(sys.agent_count):
                p *= float(sys.noise_probs[j][0, v[j]])
            if p == 0.0:
                continue
            y = {
                (0, j, KIND_OBSERVATION): int(sys.observation[j - 1][0, x0, v[j - 1]])
                for j in range(1, sys.agent_count + 1)
            }
            real = tuple(y[var] for var in acc)
            out[real] = out.get(real, 0.0) + p
    return dict(sorted(out.items()))


def initial_information_state(instance, k) -> dict:
    """Initial beliefs keyed by the realization of the agent's t=0 accessible info."""
    cache_key = ("initial_beliefs", k)
    if cache_key in instance._cache:
        return instance._cache[cache_key]
    sys = instance.system
    acc = instance.info.accessible(0, k)
    support = instance.info.equivalent_state(0, k)
    sizes = _support_sizes(instance, support)
    total = realization_count(sizes)
    masses: dict[tuple, np.ndarray] = {}
    noise_axes = [range(sys.noise_sizes[j]) for j in range(sys.agent_count)]
    for x0 in range(sys.state_size):
        p0 = float(sys.initial_probs[x0])
        if p0 == 0.0:
            continue
        for v in itertools.product(*noise_axes):
            p = p0
            for j in range(sys.agent_count):
                p *= float(sys.noise_probs[j][0, v[j]])
            if p == 0.0:
                continue
            y = {
                (0, j, KIND_OBSERVATION): int(sys.observation[j - 1][0, x0, v[j - 1]])
                for j in range(1, sys.agent_count + 1)
            }
            try:
                a_real = tuple(y[var] for var in acc)
                s_real = (x0,) + tuple(y[var] for var in support)
            except KeyError as exc:
                raise SchemaMismatch(
                    f"initial schema variable {exc.args[0]} is not a t=0 observation"
                ) from exc
            if a_real not in masses:
                masses[a_real] = np.zeros(total)
            masses[a_real][realization_index(sizes, s_real)] += p
    out = {}
    for a_real in sorted(masses):
        vec = masses[a_real]
        out[a_real] = InformationState(
            agent=k, time=0, support=support, probs=vec / vec.sum()
        )
    instance._cache[cache_key] = out
    return out


def initial_state_at(instance, k, a_real) -> InformationState:
    """Initial belief for one realized accessible value; rejects impossible ones."""
    from .errors import ZeroProbabilityCondition

    states = initial_information_state(instance, k)
    key = tuple(a_real)
    if key not in states:
        raise ZeroProbabilityCondition(
            f"agent {k} initial accessible realization {key} has probability 0"
        )
    return states[key]


def belief_step(instance, pi: InformationState, theta: CompletePrescription) -> dict:
    """Joint one-step distribution: {new-info realization: (probability, next belief)}.

    The conditioning on the new information and the push-forward through the
    state map share one sum over the stage noises, so the result is the exact
    posterior even when fresh observations depend on the same disturbance that
    drives the state.
    """
    sys = instance.system
    k, t = pi.agent, pi.time
    if t >= sys.horizon:
        raise SchemaMismatch("no stage follows the horizon")
    next_support = instance.info.equivalent_state(t + 1, k)
    next_sizes = _support_sizes(instance, next_support)
    next_total = realization_count(next_sizes)
    sizes = _support_sizes(instance, pi.support)
    noise_axes = [range(sys.noise_sizes[j]) for j in range(sys.agent_count)]
    acc: dict[tuple, np.ndarray] = {}
    for s_idx in np.nonzero(pi.probs > 0.0)[0]:
        ps = float(pi.probs[s_idx])
        s_vals = _index_to_values(sizes, int(s_idx))
        for w in range(sys.disturbance_size):
            pw = ps * float(sys.disturbance_probs[t, w])
            if pw == 0.0:
                continue
            for v in itertools.product(*noise_axes):
                p = pw
                for j in range(sys.agent_count):
                    p *= float(sys.noise_probs[j][t + 1, v[j]])
                if p == 0.0:
                    continue
                s_next, z = trace_step(instance, k, t, s_vals, theta, w, v)
                if z not in acc:
                    acc[z] = np.zeros(next_total)
                acc[z][realization_index(next_sizes, s_next)] += p
    out = {}
    for z in sorted(acc):
        vec = acc[z]
        mass = float(vec.sum())
        if mass <= ZERO_TOL:
            continue
        out[z] = (
            mass,
            InformationState(agent=k, time=t + 1, support=next_support, probs=vec / mass),
        )
    return out


def update_information_state(instance, pi, theta, z) -> InformationState:
    """Filter update: condition on the realized new information and advance."""
    steps = belief_step(instance, pi, theta)
    z = tuple(z)
    if z not in steps:
        raise ImpossibleObservation(
            f"new information {z} has probability 0 under the current belief"
        )
    return steps[z][1]


def observation_probabilities(instance, pi, theta) -> dict:
    return {z: mass for z, (mass, _) in belief_step(instance, pi, theta).items()}


def expected_stage_cost(instance, pi: InformationState, theta) -> float:
    """Belief-weighted stage cost."""
    _check_theta(instance, pi.agent, pi.time, theta)
    sizes = _support_sizes(instance, pi.support)
    total = 0.0
    for s_idx in np.nonzero(pi.probs > 0.0)[0]:
        s_vals = _index_to_values(sizes, int(s_idx))
        total += float(pi.probs[s_idx]) * hat_cost(
            instance, pi.agent, pi.time, s_vals, theta
        )
    return total


def connection_term(instance, pi_i: InformationState, k: int) -> ConnectionTerm:
    """Marginal of agent i's belief onto the coordinates agent k lacks (k < i)."""
    i = pi_i.agent
    diff = instance.info.tail_difference(pi_i.time, k, i)
    diff_sizes = instance.schema_sizes(diff)
    sizes = _support_sizes(instance, pi_i.support)
    vec = np.zeros(realization_count(diff_sizes))
    for s_idx in np.nonzero(pi_i.probs > 0.0)[0]:
        s_vals = _index_to_values(sizes, int(s_idx))
        ext = restrict_realization(pi_i.support, s_vals[1:], diff)
        vec[realization_index(diff_sizes, ext)] += float(pi_i.probs[s_idx])
    return ConnectionTerm(low_agent=k, high_agent=i, time=pi_i.time, support=diff, probs=vec)


def factorization_check(instance, pi_k_by_extension: dict, pi_i, lam: ConnectionTerm) -> float:
    """Max residual of belief(i) = belief(k under the matching extension) x connection.

    `pi_k_by_extension` maps each realization of the connection support to the
    agent-k belief conditioned on agent i's information extended by it.
    """
    from .errors import MissingConditional

    k, i = lam.low_agent, pi_i.agent
    if lam.high_agent != i or pi_i.time != lam.time:
        raise SchemaMismatch("connection term does not match the belief")
    support_k = instance.info.equivalent_state(pi_i.time, k)
    sizes_i = _support_sizes(instance, pi_i.support)
    sizes_k = _support_sizes(instance, support_k)
    diff_sizes = instance.schema_sizes(lam.support)
    worst = 0.0
    for s_idx in np.nonzero(pi_i.probs > 0.0)[0]:
        s_vals = _index_to_values(sizes_i, int(s_idx))
        ext = restrict_realization(pi_i.support, s_vals[1:], lam.support)
        pk = pi_k_by_extension.get(ext)
        if pk is None:
            raise MissingConditional(f"no agent-{k} belief supplied for extension {ext}")
        sk_vals = (s_vals[0],) + restrict_realization(pi_i.support, s_vals[1:], support_k)
        lhs = float(pi_i.probs[s_idx])
        rhs = float(pk.probs[realization_index(sizes_k, sk_vals)]) * float(
            lam.probs[realization_index(diff_sizes, ext)]
        )
        worst = max(worst, abs(lhs - rhs))
    return worst


def _index_to_values(sizes, index: int) -> tuple[int, ...]:
    out = []
    for size in reversed(sizes):
        out.append(index % size)
        index //= size
    return tuple(reversed(out))


def belief_tuple_key(pis) -> tuple:
    return tuple(pi.key() for pi in pis)
