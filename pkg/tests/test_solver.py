import copy
import itertools
import math
import random

import pytest

from helpers import fuzz_instance, random_prescription_strategy
from womctl.errors import CapExceeded, WomError
from womctl.instances import d2_dict
from womctl.prescription import (
    control_law_to_strategy,
    joint_control_strategy,
)
from womctl.solver import (
    compare_agents,
    evaluate_prescription_strategy,
    solve_brute_force,
    solve_common_info_dp,
    solve_prescription_dp,
    solve_prescription_static,
)
from womctl.sysmodel import (
    exact_strategy_cost,
    instance_from_dict,
    permute_instance,
    validate_strategy,
)

# frozen after the first verified runs of the exhaustive oracle
D2_OPTIMAL_COST = 3.3
D2EXT_OPTIMAL_COST = 0.775
TOL = 1e-9


def test_brute_force_static_counts(static3):
    res = solve_brute_force(static3)
    assert res.search_size == 16384
    assert abs(res.optimal_cost - exact_strategy_cost(static3, res.control_strategy).expected_cost) <= 1e-12
    validate_strategy(static3, res.control_strategy)


def test_brute_force_zero_cost_picks_first_strategy():
    doc = d2_dict()
    doc["system"]["cost"] = [[[0.0] * 4] * 2] * 2
    inst = instance_from_dict(doc)
    res = solve_brute_force(inst)
    assert res.optimal_cost == 0.0
    for table in res.control_strategy.tables.values():
        assert set(table.values()) == {0}


def test_brute_force_d2_oracle_fixture(d2):
    res = solve_brute_force(d2)
    assert abs(res.optimal_cost - D2_OPTIMAL_COST) <= TOL
    assert res.search_size == 2**20


def test_brute_force_cap(d2):
    with pytest.raises(CapExceeded):
        solve_brute_force(d2, cap=1000)


def test_common_info_single_agent_pomdp_matches_brute():
    # two-state repair-style toy: noisy observation, act to match the state
    flip = [[x, 1 - x] for x in range(2)]
    stage = [[[(x + u + w) % 2 for w in range(2)] for u in range(2)] for x in range(2)]
    doc = {
        "network": {"agents": 1, "links": []},
        "system": {
            "horizon": 1,
            "state_size": 2,
            "control_sizes": [2],
            "observation_sizes": [2],
            "disturbance": {"size": 2, "probs_per_t": [0.8, 0.2]},
            "noises": [{"size": 2, "probs_per_t": [0.75, 0.25]}],
            "initial_probs": [0.35, 0.65],
            "transition": [stage],
            "observation": [[flip, flip]],
            "cost": [
                [[2.0 * float(x != u) for u in range(2)] for x in range(2)],
                [[1.0 * float(x != u) + 0.2 * u for u in range(2)] for x in range(2)],
            ],
        },
    }
    inst = instance_from_dict(doc)
    brute = solve_brute_force(inst)
    dp = solve_common_info_dp(inst)
    assert abs(brute.optimal_cost - dp.optimal_cost) <= TOL


def test_common_info_deterministic_instance():
    doc = d2_dict()
    doc["system"]["initial_probs"] = [1.0, 0.0]
    doc["system"]["disturbance"]["probs_per_t"] = [1.0, 0.0]
    inst = instance_from_dict(doc)
    dp = solve_common_info_dp(inst)
    # exhaustive search over the four joint-action pairs along the single path
    best = math.inf
    for u0 in itertools.product(range(2), range(2)):
        x0 = 0
        c0 = float(inst.system.cost[0, x0, inst.joint_control_index(u0)])
        x1 = int(inst.system.transition[0, x0, inst.joint_control_index(u0), 0])
        c1 = min(
            float(inst.system.cost[1, x1, inst.joint_control_index(u1)])
            for u1 in itertools.product(range(2), range(2))
        )
        best = min(best, c0 + c1)
    assert abs(dp.optimal_cost - best) <= TOL


def test_common_info_matches_brute_on_d2(d2):
    dp = solve_common_info_dp(d2)
    assert abs(dp.optimal_cost - D2_OPTIMAL_COST) <= TOL
    assert abs(dp.dp_value - dp.optimal_cost) <= TOL


def test_static_solver_counts_and_costs(static3):
    brute = solve_brute_force(static3)
    for k, size in ((3, 256), (2, 64), (1, 64)):
        res = solve_prescription_static(static3, k)
        assert res.search_size == size
        assert abs(res.optimal_cost - brute.optimal_cost) <= TOL
        assert abs(res.dp_value - res.optimal_cost) <= TOL


def test_static_solver_reindexed_counts(static3_reindexed):
    brute = solve_brute_force(static3_reindexed)
    for k in (1, 2, 3):
        res = solve_prescription_static(static3_reindexed, k)
        assert res.search_size == 256
        assert abs(res.optimal_cost - brute.optimal_cost) <= TOL


def test_static_relaxed_value_is_surfaced(static3):
    res = solve_prescription_static(static3, 1)
    assert "relaxed_value" in res.extras
    assert res.extras["relaxed_value"] <= res.optimal_cost + TOL


def test_prescription_dp_highest_agent_equals_common_info(d2):
    a = solve_common_info_dp(d2)
    b = solve_prescription_dp(d2, 2)
    assert abs(a.optimal_cost - b.optimal_cost) <= TOL
    assert a.control_strategy.tables == b.control_strategy.tables


def test_prescription_dp_two_stage_matches_oracle(d2):
    res = solve_prescription_dp(d2, 1)
    assert abs(res.optimal_cost - D2_OPTIMAL_COST) <= TOL
    assert abs(res.dp_value - res.optimal_cost) <= TOL


def test_prescription_dp_three_stage_matches_oracle(d2ext):
    brute = solve_brute_force(d2ext)
    assert abs(brute.optimal_cost - D2EXT_OPTIMAL_COST) <= TOL
    for k in (1, 2):
        res = solve_prescription_dp(d2ext, k)
        assert abs(res.optimal_cost - D2EXT_OPTIMAL_COST) <= TOL


def test_evaluate_round_trip(d2):
    rng = random.Random(30)
    from helpers import random_control_strategy

    g = random_control_strategy(d2, rng)
    psi = control_law_to_strategy(d2, g, 1)
    assert (
        evaluate_prescription_strategy(d2, psi).expected_cost
        == exact_strategy_cost(d2, g).expected_cost
    )


def test_evaluate_static_optimum_matches_brute(static3):
    res = solve_prescription_static(static3, 3)
    report = evaluate_prescription_strategy(static3, res.prescription_strategy)
    assert abs(report.expected_cost - solve_brute_force(static3).optimal_cost) <= TOL


def test_paired_evaluators_agree(d2):
    rng = random.Random(31)
    for _ in range(5):
        psi = random_prescription_strategy(d2, rng.choice([1, 2]), rng)
        a = evaluate_prescription_strategy(d2, psi).expected_cost
        b = exact_strategy_cost(d2, joint_control_strategy(d2, psi)).expected_cost
        assert abs(a - b) <= 1e-12


def test_compare_agents_static(static3):
    rep = compare_agents(static3)
    by_label = {(r["method"], r["agent"]): r for r in rep.rows}
    assert by_label[("brute", None)]["search_size"] == 16384
    assert by_label[("prescription-static", 3)]["search_size"] == 256
    assert by_label[("prescription-static", 2)]["search_size"] == 64
    assert by_label[("prescription-static", 1)]["search_size"] == 64
    assert rep.max_spread <= TOL


def test_compare_agents_d2(d2):
    rep = compare_agents(d2)
    assert rep.max_spread <= TOL
    assert all(r["status"] == "ok" for r in rep.rows)


def test_compare_agents_reports_skips(wom3):
    rep = compare_agents(wom3)
    assert all(r["status"] == "skipped" for r in rep.rows)


def test_structural_measurability_of_emitted_strategy(d2):
    """Conditioning realizations with equal tail beliefs select equal tables."""
    res = solve_prescription_dp(d2, 1)
    tree = res.extras["belief_tree"]
    psi = res.prescription_strategy
    by_key = {}
    for row in tree:
        t = row["t"]
        beliefs = row["beliefs"]
        tail_key = tuple(round(p, 12) for p in beliefs["agent_2"])
        acc2 = d2.info.accessible(t, 2)
        amap = row["accessible"]
        cond2 = tuple(amap[v.label()] for v in acc2)
        table = psi.laws[(t, 2)][cond2].table
        by_key.setdefault((t, tail_key), set()).add(table)
    assert by_key, "no reachable branches recorded"
    for tables in by_key.values():
        assert len(tables) == 1


def test_index_permutation_invariance(static3, d2):
    base3 = solve_brute_force(static3).optimal_cost
    for perm in itertools.permutations((1, 2, 3)):
        flipped = permute_instance(static3, perm)
        assert abs(solve_brute_force(flipped).optimal_cost - base3) <= TOL
    base2 = solve_brute_force(d2).optimal_cost
    for perm in ((1, 2), (2, 1)):
        flipped = permute_instance(d2, perm)
        assert abs(solve_brute_force(flipped).optimal_cost - base2) <= TOL
        assert abs(solve_common_info_dp(flipped).optimal_cost - base2) <= TOL


def test_solver_determinism(d2):
    a = solve_prescription_dp(d2, 1)
    b = solve_prescription_dp(d2, 1)
    assert a.optimal_cost == b.optimal_cost
    assert a.control_strategy.tables == b.control_strategy.tables
    assert a.search_size == b.search_size


def test_dp_cap(d2):
    with pytest.raises(CapExceeded):
        solve_prescription_dp(d2, 1, cap=2)


def test_compare_agents_detects_disagreement(d2, monkeypatch):
    import womctl.solver as solver_mod

    real = solver_mod.solve_brute_force

    def skewed(instance, cap=None):
        res = real(instance, cap)
        res.optimal_cost += 0.5
        return res

    monkeypatch.setattr(solver_mod, "solve_brute_force", skewed)
    with pytest.raises(WomError):
        compare_agents(d2)


def test_single_agent_static_all_solvers():
    flip = [[x, 1 - x] for x in range(2)]
    doc = {
        "network": {"agents": 1, "links": []},
        "system": {
            "horizon": 0,
            "state_size": 2,
            "control_sizes": [2],
            "observation_sizes": [2],
            "noises": [{"size": 2, "probs_per_t": [0.9, 0.1]}],
            "initial_probs": [0.3, 0.7],
            "observation": [[flip]],
            "cost": [[[0.0, 1.0], [2.0, 0.5]]],
        },
    }
    inst = instance_from_dict(doc)
    brute = solve_brute_force(inst)
    static = solve_prescription_static(inst, 1)
    common = solve_common_info_dp(inst)
    assert abs(brute.optimal_cost - static.optimal_cost) <= TOL
    assert abs(brute.optimal_cost - common.optimal_cost) <= TOL
    # best action per observation from the explicit posterior masses
    exp = 0.0
    for y in range(2):
        masses = {
            x: (0.3 if x == 0 else 0.7) * (0.9 if x == y else 0.1) for x in range(2)
        }
        exp += min(
            sum(m * doc["system"]["cost"][0][x][u] for x, m in masses.items())
            for u in range(2)
        )
    assert abs(brute.optimal_cost - exp) <= TOL


def test_static_count_monotonicity_on_fuzz():
    for seed in (0, 6, 12, 1, 7):
        inst = fuzz_instance(seed)
        if inst.horizon != 0:
            continue
        from womctl.prescription import count_strategies

        sizes = [count_strategies(inst, k) for k in range(1, inst.agent_count + 1)]
        assert sizes == sorted(sizes)
        assert sizes[-1] <= count_strategies(inst, "brute")


def test_degenerate_distributions_all_solvers_agree():
    """Point-mass initial state and zero-probability outcomes stay consistent."""
    base = d2_dict()
    variants = [
        {"initial_probs": [1.0, 0.0]},
        {"initial_probs": [0.0, 1.0], "disturbance": {"size": 2, "probs_per_t": [1.0, 0.0]}},
        {"disturbance": {"size": 3, "probs_per_t": [0.5, 0.0, 0.5]}},
    ]
    for overrides in variants:
        doc = copy.deepcopy(base)
        doc["system"].update(overrides)
        if doc["system"]["disturbance"]["size"] == 3:
            stage = [
                [[(x + u1 + u2 + w) % 2 for w in range(3)]
                 for u1 in range(2) for u2 in range(2)]
                for x in range(2)
            ]
            doc["system"]["transition"] = [stage]
        inst = instance_from_dict(doc)
        brute = solve_brute_force(inst).optimal_cost
        rep = compare_agents(inst)
        for row in rep.rows:
            assert row["status"] == "ok"
            assert abs(row["cost"] - brute) <= TOL


def test_zero_probability_initial_lookup_raises(d2):
    from womctl.belief import initial_state_at
    from womctl.errors import ZeroProbabilityCondition

    doc = d2_dict()
    doc["system"]["initial_probs"] = [1.0, 0.0]
    inst = instance_from_dict(doc)
    assert initial_state_at(inst, 1, (0,)).probs is not None
    with pytest.raises(ZeroProbabilityCondition):
        initial_state_at(inst, 1, (1,))


def test_evaluate_rejects_partial_strategy(d2):
    from womctl.errors import DomainMismatch
    from womctl.prescription import PrescriptionStrategy

    rng = random.Random(32)
    psi = random_prescription_strategy(d2, 1, rng)
    partial = PrescriptionStrategy(
        owner=1, laws={k: v for k, v in psi.laws.items() if k[0] == 0}
    )
    with pytest.raises(DomainMismatch):
        evaluate_prescription_strategy(d2, partial)


def test_fuzz_small_sample_agreement():
    # a quick slice; the acceptance suite runs the full sweep
    for seed in range(6):
        inst = fuzz_instance(seed)
        brute = solve_brute_force(inst).optimal_cost
        rep = compare_agents(inst)
        assert rep.max_spread <= TOL
        ok_costs = [r["cost"] for r in rep.rows if r["status"] == "ok"]
        assert any(abs(c - brute) <= TOL for c in ok_costs)
