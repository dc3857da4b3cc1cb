import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gridplan.benders import (
    CONVERGED,
    PLAN_INFEASIBLE,
    RESILIENCE,
    BendersError,
    Cut,
    MasterState,
    compute_upper_bound,
    evaluate_contingency_shed,
    gap_of,
    resilience_view,
    run_planning,
    solve_dsp,
    solve_master,
    solve_mdsp,
)
from gridplan.clustering import RepresentativeSet
from gridplan.formulation import apply_failure_scenario, build_model, partition_compact
from gridplan.synthetic import fragile_tie_system, random_toy_system
from gridplan.system import Bus, Generator, Line, PlanningConfig, PowerSystem
from oracles import enumerate_plans, highs, random_failures


def tie_system(flow_max=40.0, candidate=True, gamma=0.0):
    buses = [Bus(1), Bus(2, peak_load=100.0)]
    lines = [Line(1, 1, 2, susceptance_pu=5.0, flow_max=flow_max, length=10.0, in_hurricane_zone=True)]
    if candidate:
        lines.append(Line(2, 1, 2, "candidate_ac", susceptance_pu=20.0, flow_max=100.0, length=10.0,
                          invest_cost=0.1, substation_cost=1.0))  # fmt: skip
    gens = [Generator(1, 1, 0.0, 300.0, (20.0,), 300.0, 300.0)]
    cfg = PlanningConfig(stages=1, load_growth=(0.0,), rps_alpha=0.0, unit_commitment=False, bes_binary=False,
                         hourly_shed_gamma=gamma, annual_shed_phi=gamma, reserve_load_share=0.0)  # fmt: skip
    return PowerSystem(tuple(buses), tuple(lines), tuple(gens), cfg)


REPS = RepresentativeSet([1.0, 0.8], [0.5, 0.5], [4000.0, 4760.0])


def blocks_of(system, reps=REPS, failed=()):
    model = build_model(system, reps)
    if failed:
        model = apply_failure_scenario(model, frozenset(failed))
    return partition_compact(model)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 400))
def test_dsp_matches_primal(seed):
    system, reps = random_toy_system(seed)
    model = build_model(system, reps)
    blocks = partition_compact(model)
    y = np.ones(model.binary_columns().size)
    status, obj, _ = highs(model.to_lp(y))
    d = solve_dsp(blocks, y)
    if status == "infeasible":
        assert not d.bounded
    else:
        assert d.bounded
        invest = model.cost[model.binary_columns()] @ y
        assert d.objective + invest == pytest.approx(obj, rel=1e-6, abs=1e-8)
        assert model.objective_value(d.primal) == pytest.approx(obj, rel=1e-6, abs=1e-8)


def test_undersized_tie_is_infeasible_then_resilient_shed():
    system = tie_system(candidate=False)
    blocks = blocks_of(system)
    d = solve_dsp(blocks, np.zeros(0))
    assert not d.bounded
    r = solve_dsp(blocks, np.zeros(0), RESILIENCE)
    assert r.bounded
    deficit = (100.0 - 40.0) * 4000.0 + (80.0 - 40.0) * 4760.0
    assert r.shed == pytest.approx(deficit, rel=1e-9)


def test_mdsp_cut_excludes_current_plan():
    system = tie_system()
    blocks = blocks_of(system)
    y = np.zeros(1)
    m = solve_mdsp(blocks, y)
    cut = Cut("feas", m.constant, m.pi, "intact", 1)
    assert not cut.holds(y, 0.0)
    assert cut.holds(np.ones(1), 0.0)


def test_mdsp_misuse_raises():
    system = tie_system(flow_max=200.0)
    with pytest.raises(BendersError):
        solve_mdsp(blocks_of(system), np.zeros(1))


def test_ray_scaling_keeps_cut():
    system = tie_system()
    m = solve_mdsp(blocks_of(system), np.zeros(1))
    a = Cut("feas", m.constant, m.pi, "x", 1)
    b = Cut("feas", 7.5 * m.constant, 7.5 * m.pi, "x", 1)
    for y in (np.zeros(1), np.ones(1)):
        assert a.holds(y, 0.0) == b.holds(y, 0.0)


def test_upper_bound_is_investment_plus_operation():
    system = tie_system(flow_max=200.0)
    model = build_model(system, REPS)
    blocks = partition_compact(model)
    y = np.ones(1)
    d = solve_dsp(blocks, y)
    invest = model.cost[model.binary_columns()]
    ub = compute_upper_bound([d], y, invest, model.constant)
    status, obj, _ = highs(model.to_lp(y))
    assert ub == pytest.approx(model.constant + obj)
    with pytest.raises(BendersError):
        compute_upper_bound([solve_dsp(blocks_of(tie_system()), np.zeros(1))], np.zeros(1), invest)


def test_master_respects_cuts_and_monotonicity():
    state = MasterState(np.array([1.0, 1.0]), 0.0, [(1, 0)], np.zeros(2))
    y, lb = solve_master(state)
    assert lb == 0.0 and y.tolist() == [0.0, 0.0]
    state.cuts.append(Cut("feas", 1.0, np.array([-1.0, 0.0]), "x", 1))  # needs y0 >= 1
    y, lb = solve_master(state)
    assert y.tolist() == [1.0, 1.0] and lb == pytest.approx(2.0)
    state.cuts.append(Cut("opt", 5.0, np.array([0.0, -1.0]), "x", 2))
    y, lb = solve_master(state)
    assert lb == pytest.approx(6.0)
    state.cuts.append(Cut("feas", 1.0, np.array([0.0, 0.0]), "x", 3))
    assert solve_master(state) is None


def test_gap():
    assert gap_of(99.0, 100.0) == pytest.approx(0.01)
    assert gap_of(0.0, 0.0) == 0.0
    assert gap_of(0.0, np.inf) == np.inf


def test_zero_candidates_one_iteration():
    plan = run_planning(tie_system(flow_max=200.0, candidate=False), REPS, eps=1e-6)
    assert plan.status == CONVERGED
    assert len(plan.iterations) == 1 and plan.gap == 0.0


def test_lower_bound_nondecreasing_and_cuts_valid():
    system, reps = random_toy_system(3)
    failures = random_failures(system, 3)
    plan = run_planning(system, reps, failures, eps=1e-6)
    lbs = [r.lb for r in plan.iterations]
    assert all(b >= a - 1e-9 * max(1.0, abs(a)) for a, b in zip(lbs, lbs[1:]))
    if plan.converged:
        assert plan.gap <= 1e-6
        eta = plan.ub - plan.model.constant - plan.model.cost[plan.model.binary_columns()] @ plan.y
        for cut in plan.cuts:
            assert cut.holds(plan.y, eta)


def test_feasibility_cuts_build_the_tie():
    plan = run_planning(tie_system(), REPS, eps=1e-6)
    assert plan.status == CONVERGED
    assert plan.built_lines() == {2}
    assert any(c.kind == "feas" for c in plan.cuts)
    cost, y = enumerate_plans(tie_system(), REPS)
    assert plan.tpc == pytest.approx(cost, rel=1e-6)


def test_no_feasible_plan():
    system = tie_system(flow_max=10.0)
    # both lines together carry at most 30 MW against a 100 MW peak
    lines = (system.lines[0], Line(2, 1, 2, "candidate_ac", susceptance_pu=5.0, flow_max=20.0, length=10.0,
                                   invest_cost=0.1))  # fmt: skip
    system = PowerSystem(system.buses, lines, system.generators, system.config)
    plan = run_planning(system, REPS, eps=1e-6)
    assert plan.status == PLAN_INFEASIBLE


def test_resilience_shed_dominates_standard():
    system = tie_system(flow_max=60.0, candidate=False, gamma=1.0)
    blocks = blocks_of(system)
    std = solve_dsp(blocks, np.zeros(0))
    res = solve_dsp(partition_compact(resilience_view(blocks.model)), np.zeros(0), RESILIENCE)
    assert std.bounded and res.bounded
    assert res.objective <= std.objective + 1e-9
    out = evaluate_contingency_shed(system, REPS, np.zeros(0), {1})
    assert out == pytest.approx(100.0 * 4000.0 + 80.0 * 4760.0)


def test_single_cut_mode_agrees():
    system, reps = random_toy_system(5)
    failures = random_failures(system, 5)
    a = run_planning(system, reps, failures, eps=1e-6, multi_cut=True)
    b = run_planning(system, reps, failures, eps=1e-6, multi_cut=False)
    assert a.status == b.status
    if a.converged:
        assert a.tpc == pytest.approx(b.tpc, rel=2e-6)


def test_threads_do_not_change_result():
    system, reps = fragile_tie_system()
    a = run_planning(system, reps, [{1}], eps=1e-6, threads=1)
    b = run_planning(system, reps, [{1}], eps=1e-6, threads=4)
    assert a.y.tolist() == b.y.tolist()
    assert a.ub == b.ub and [r.lb for r in a.iterations] == [r.lb for r in b.iterations]


def test_eps_must_be_positive():
    with pytest.raises(ValueError):
        run_planning(tie_system(), REPS, eps=0.0)
