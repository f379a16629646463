"""Prescription tables, prescription strategies, and strategy translation.

A prescription is a finite lookup table an owner agent forms for a target
agent: it maps the part of the target's memory the owner cannot condition on
to a control. A prescription strategy fixes, per stage and target, one such
table for every realization of the owner's conditioning information.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .errors import CapExceeded, DomainMismatch, OutOfRange, SchemaMismatch
from .infostruct import InfoSchema
from .sysmodel import (
    ControlStrategy,
    Instance,
    enumerate_realizations,
    feasible_schema_realizations,
    realization_count,
    realization_index,
    restrict_realization,
)

DEFAULT_TABLE_CAP = 2**20


@dataclass(frozen=True)
class Prescription:
    owner: int
    target: int
    time: int
    domain: InfoSchema
    domain_sizes: tuple[int, ...]
    control_size: int
    table: tuple[int, ...]  # indexed by row-major domain realization


@dataclass(frozen=True)
class CompletePrescription:
    """One owner's prescriptions for every agent at one stage."""

    owner: int
    time: int
    parts: tuple[Prescription, ...]  # targets 1..K in order


@dataclass(frozen=True)
class PrescriptionStrategy:
    """Per (stage, target) law tables keyed by conditioning realizations."""

    owner: int
    laws: dict = field(default_factory=dict)  # (t, target) -> {cond real: Prescription}


def make_prescription(
    instance: Instance, t: int, owner: int, target: int, table
) -> Prescription:
    domain = instance.info.prescription_domain(t, owner, target)
    sizes = instance.schema_sizes(domain)
    table = tuple(int(v) for v in table)
    control_size = instance.system.control_sizes[target - 1]
    if len(table) != realization_count(sizes):
        raise DomainMismatch(
            f"prescription ({owner}->{target}, t={t}) needs "
            f"{realization_count(sizes)} entries, got {len(table)}"
        )
    if any(not (0 <= v < control_size) for v in table):
        raise OutOfRange(f"prescription ({owner}->{target}, t={t}) action out of range")
    return Prescription(owner, target, t, domain, sizes, control_size, table)


def apply_prescription(p: Prescription, realization) -> int:
    if len(realization) != len(p.domain_sizes) or any(
        not (0 <= v < s) for v, s in zip(realization, p.domain_sizes)
    ):
        raise OutOfRange(
            f"realization {tuple(realization)} outside domain sizes {p.domain_sizes}"
        )
    return p.table[realization_index(p.domain_sizes, realization)]


def prescription_space_size(domain_sizes, control_size: int) -> int:
    return control_size ** realization_count(domain_sizes)


def enumerate_prescription_tables(domain_sizes, control_size: int, cap: int = DEFAULT_TABLE_CAP):
    """All tables over the domain in lexicographic order."""
    required = prescription_space_size(domain_sizes, control_size)
    if required > cap:
        raise CapExceeded(required, cap, "prescription enumeration")
    entries = realization_count(domain_sizes)
    return itertools.product(range(control_size), repeat=entries)


def enumerate_prescriptions(
    instance: Instance, t: int, owner: int, target: int, cap: int = DEFAULT_TABLE_CAP
):
    """Stream of all prescriptions the owner could form for the target at stage t."""
    domain = instance.info.prescription_domain(t, owner, target)
    sizes = instance.schema_sizes(domain)
    control_size = instance.system.control_sizes[target - 1]
    for table in enumerate_prescription_tables(sizes, control_size, cap):
        yield Prescription(owner, target, t, domain, sizes, control_size, table)


def count_strategies(instance: Instance, mode) -> int:
    """Size of the search space: mode 'brute' or an agent index.

    Brute force counts one table per feasible memory realization per stage and
    agent. For agent k the count sums, per stage and per feasible conditioning
    realization, the product of the prescription-table counts searched jointly.
    """
    sys = instance.system
    if mode == "brute":
        total = 1
        for t in range(instance.horizon + 1):
            for k in range(1, sys.agent_count + 1):
                feas = feasible_schema_realizations(instance, instance.info.memory(t, k))
                total *= sys.control_sizes[k - 1] ** len(feas)
        return total
    k = int(mode)
    if not 1 <= k <= sys.agent_count:
        raise OutOfRange(f"agent {k} out of range")
    total = 0
    for t in range(instance.horizon + 1):
        feas = feasible_schema_realizations(instance, instance.info.accessible(t, k))
        per = 1
        for target in range(1, sys.agent_count + 1):
            domain = instance.info.prescription_domain(t, k, target)
            per *= prescription_space_size(
                instance.schema_sizes(domain), sys.control_sizes[target - 1]
            )
        total += len(feas) * per
    return total


# -- conversions between prescriptions and control laws ------------------------


def _target_action(instance: Instance, psi: PrescriptionStrategy, t, target, memory_real):
    """Action of `target` at stage t under psi, given the target's memory realization."""
    info = instance.info
    k = psi.owner
    mem = info.memory(t, target)
    cond = info.conditioning_schema(t, k, target)
    domain = info.prescription_domain(t, k, target)
    try:
        law = psi.laws[(t, target)]
    except KeyError:
        raise DomainMismatch(f"strategy has no law for (t={t}, target={target})") from None
    cond_real = restrict_realization(mem, memory_real, cond)
    dom_real = restrict_realization(mem, memory_real, domain)
    try:
        presc = law[cond_real]
    except KeyError:
        raise DomainMismatch(
            f"law (t={t}, target={target}) missing conditioning realization {cond_real}"
        ) from None
    return apply_prescription(presc, dom_real)


def induced_control_tables(instance: Instance, psi: PrescriptionStrategy, agent: int):
    """Full memory-realization tables for one agent's actions under psi."""
    tables = {}
    for t in range(instance.horizon + 1):
        mem = instance.info.memory(t, agent)
        sizes = instance.schema_sizes(mem)
        tables[t] = {
            real: _target_action(instance, psi, t, agent, real)
            for real in enumerate_realizations(sizes)
        }
    return tables


def strategy_to_control_law(instance: Instance, psi: PrescriptionStrategy) -> ControlStrategy:
    """The owner's own control-law component induced by psi."""
    k = psi.owner
    return ControlStrategy(
        tables={(t, k): tab for t, tab in induced_control_tables(instance, psi, k).items()}
    )


def joint_control_strategy(instance: Instance, psi: PrescriptionStrategy) -> ControlStrategy:
    """The full-system control strategy induced by one agent's prescription strategy."""
    tables = {}
    for agent in range(1, instance.agent_count + 1):
        for t, tab in induced_control_tables(instance, psi, agent).items():
            tables[(t, agent)] = tab
    return ControlStrategy(tables=tables)


def control_law_to_strategy(
    instance: Instance, strategy: ControlStrategy, k: int
) -> PrescriptionStrategy:
    """Rebuild agent k's prescription strategy from a full control strategy.

    The diagonal component splits the owner's memory into conditioning and
    table input; components for other targets apply the same construction to
    each target's own law through the matching memory partition.
    """
    info = instance.info
    laws = {}
    for t in range(instance.horizon + 1):
        for target in range(1, instance.agent_count + 1):
            cond = info.conditioning_schema(t, k, target)
            domain = info.prescription_domain(t, k, target)
            mem = info.memory(t, target)
            if set(cond) | set(domain) != set(mem) or set(cond) & set(domain):
                raise SchemaMismatch(
                    f"conditioning and domain do not partition memory "
                    f"(t={t}, owner={k}, target={target})"
                )
            mem_pos = {v: i for i, v in enumerate(mem)}
            g_table = strategy.tables.get((t, target))
            if g_table is None:
                raise DomainMismatch(f"control strategy missing (t={t}, agent={target})")
            law = {}
            dom_sizes = instance.schema_sizes(domain)
            for cond_real in enumerate_realizations(instance.schema_sizes(cond)):
                table = []
                for dom_real in enumerate_realizations(dom_sizes):
                    values = [0] * len(mem)
                    for v, val in zip(cond, cond_real):
                        values[mem_pos[v]] = val
                    for v, val in zip(domain, dom_real):
                        values[mem_pos[v]] = val
                    table.append(g_table[tuple(values)])
                law[cond_real] = make_prescription(instance, t, k, target, table)
            laws[(t, target)] = law
    return PrescriptionStrategy(owner=k, laws=laws)


def translate_strategy(
    instance: Instance, src: PrescriptionStrategy, i: int
) -> PrescriptionStrategy:
    """Agent i's prescription strategy producing the same actions as src everywhere."""
    if i == src.owner:
        return src
    return control_law_to_strategy(instance, joint_control_strategy(instance, src), i)


def derive_complete(
    instance: Instance, theta: CompletePrescription, i: int
) -> CompletePrescription:
    """Re-key a complete prescription to a higher-indexed owner by projection.

    Valid only for i >= owner: every target domain of the new owner contains
    the corresponding source domain, so tables re-key by dropping coordinates.
    """
    if i < theta.owner:
        raise SchemaMismatch("complete prescriptions only project to higher owners")
    if i == theta.owner:
        return theta
    t = theta.time
    parts = []
    for target in range(1, instance.agent_count + 1):
        src = theta.parts[target - 1]
        dst_domain = instance.info.prescription_domain(t, i, target)
        if not set(src.domain) <= set(dst_domain):
            raise SchemaMismatch(
                f"cannot project prescription for target {target}: "
                f"source domain is not contained in the new domain"
            )
        dst_sizes = instance.schema_sizes(dst_domain)
        table = [
            apply_prescription(src, restrict_realization(dst_domain, real, src.domain))
            for real in enumerate_realizations(dst_sizes)
        ]
        parts.append(Prescription(i, target, t, dst_domain, dst_sizes, src.control_size, tuple(table)))
    return CompletePrescription(owner=i, time=t, parts=tuple(parts))


def complete_prescription_at(
    instance: Instance, psi: PrescriptionStrategy, t: int, accessible_real
) -> CompletePrescription:
    """The owner's complete prescription realized at one accessible-information value."""
    k = psi.owner
    own = instance.info.accessible(t, k)
    parts = []
    for target in range(1, instance.agent_count + 1):
        cond = instance.info.conditioning_schema(t, k, target)
        cond_real = restrict_realization(own, accessible_real, cond)
        parts.append(psi.laws[(t, target)][cond_real])
    return CompletePrescription(owner=k, time=t, parts=tuple(parts))
