import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from mms_copies.core import (
    CopyAllocation,
    Instance,
    InternalInvariantError,
    PreconditionError,
    verify_guarantee,
)
from mms_copies.instances import (
    appendix_e_order,
    fixture_appendix_e,
    gen_cube,
    gen_random_additive,
)
from mms_copies.mms import SizeCap, mms_values, one_out_of_d_alloc
from mms_copies.ordered import to_ordered
from mms_copies.reduce import r_reduce, s_reduce, start_trace
from mms_copies.solve import (
    INV_E_LOW,
    bagfill_round_robin,
    bagfill_with_copies,
    match_n_fill,
    mms_via_one_out_of_d,
    one_out_of_d_copy_bound,
    per_good_threshold,
    pipeline_four_fifths,
    pipeline_six_sevenths,
    randomized_monotone,
    run_bagfill_with_copies,
    run_match_n_fill,
    total_copy_threshold,
)

CAP8 = SizeCap(16, 8)


def no_big_goods(inst, mus):
    return all(max(inst.valuations[i].values) < mus[i] for i in range(inst.n))


# --- bag filling with copies -------------------------------------------------


def test_bagfill_unit_goods():
    inst = Instance.additive([[1] * 6] * 3)
    run = run_bagfill_with_copies(inst, [2, 2, 2])
    assert [c.agent for c in run.closures] == [0, 1, 2]
    # the closing good of each bag seeds the next
    assert run.duplicated == (1, 2)
    assert run.allocation.stats().total_extra <= 2


def test_bagfill_worked_example_order():
    inst = fixture_appendix_e()
    order = appendix_e_order()
    run = run_bagfill_with_copies(inst, [1] * 4, order=order)
    report = verify_guarantee(inst, run.allocation, [1] * 4)
    assert report.all_pass and report.covered
    # three seeds plus the good the printed order already lists twice
    assert len(run.duplicated) == 3
    assert run.allocation.stats().total_extra == 3 + len(order) - len(set(order))


def test_bagfill_single_agent():
    inst = Instance.additive([[1, 2, 3]])
    alloc = bagfill_with_copies(inst, [Fraction(7, 2)])
    assert alloc.bundles[0] == frozenset({0, 1, 2})


def test_bagfill_rejects_big_good():
    inst = Instance.additive([[5, 1, 1], [1, 1, 1]])
    with pytest.raises(PreconditionError):
        bagfill_with_copies(inst, [3, 1])


def test_bagfill_rejects_kdemand():
    with pytest.raises(PreconditionError):
        bagfill_with_copies(Instance.kdemand(1, [[1, 1]]), [1])


def test_bagfill_unchecked_reports_unsatisfied():
    inst = Instance.additive([[1, 1, 1], [1, 1, 1]])
    run = run_bagfill_with_copies(inst, [2, 3], check=False)
    assert run.unsatisfied == (1,)
    assert run.allocation.bundles[1] == frozenset({2})


@pytest.mark.parametrize("seed", range(40))
def test_bagfill_invariant_each_round(seed):
    # scale targets so no good is worth a full share
    inst = gen_random_additive(4, 12, seed)
    mus = mms_values(inst)
    if not no_big_goods(inst, mus):
        pytest.skip("an agent has a good worth its whole share")
    run = run_bagfill_with_copies(inst, mus)
    assert run.unsatisfied == ()
    for c in run.closures:
        for i in c.remaining_agents:
            assert inst.value(i, c.remaining_goods) >= len(c.remaining_agents) * mus[i]
    report = verify_guarantee(inst, run.allocation, mus)
    assert report.all_pass and report.covered
    s = run.allocation.stats()
    assert s.total_extra <= inst.n - 1 and s.max_per_good <= 1


# --- Match-n-Fill -------------------------------------------------------------


def test_match_n_fill_small():
    inst = Instance.additive([[1, 1, 1, 1], [1, 1, 1, 1]])
    alloc = match_n_fill(inst)
    assert verify_guarantee(inst, alloc, [2, 2]).all_pass
    assert alloc.stats().total_extra == 0


def test_match_n_fill_singletons():
    inst = Instance.additive([[5, 1, 1, 1], [1, 1, 1, 1]])
    run = run_match_n_fill(inst)
    assert run.singletons == {0: 0}


@pytest.mark.parametrize("seed", range(40))
def test_match_n_fill_bounds(seed):
    n = 2 + seed % 4
    inst = gen_random_additive(n, 2 * n + 2, seed)
    mus = mms_values(inst)
    run = run_match_n_fill(inst, mus)
    report = verify_guarantee(inst, run.allocation, mus)
    assert report.all_pass and report.covered
    s = run.allocation.stats()
    assert s.total_extra <= max(n - 2, 0)
    assert s.max_per_good <= 1


def test_match_n_fill_rejects_kdemand():
    with pytest.raises(PreconditionError):
        match_n_fill(Instance.kdemand(1, [[1, 1]]))


# --- BagFill-RoundRobin -------------------------------------------------------


def reference_awards(trace):
    table = trace.ordered.base.table()
    values = [table[i] for i in trace.agents]
    targets = [trace.threshold(i) for i in trace.agents]
    awards, dup = oracles.round_robin_bagfill_reference(values, targets)
    return {trace.agents[k]: frozenset(g - 1 for g in b) for k, b in awards.items()}, [g - 1 for g in dup]


@given(st.integers(0, 10_000), st.integers(1, 5), st.integers(0, 6))
@settings(max_examples=80)
def test_round_robin_matches_reference(seed, n, extra):
    m = n + extra
    inst = gen_random_additive(n, m, seed, value_range=(1, 9), denominator=1)
    tr = start_trace(to_ordered(inst), Fraction(6, 7), mms_values(inst, cap=CAP8))
    run = bagfill_round_robin(tr, check=False)
    awards, dup = reference_awards(tr)
    assert run.awards == awards
    assert list(run.duplicated) == dup


@pytest.mark.parametrize("seed", range(30))
def test_round_robin_after_s_reduce(seed):
    inst = gen_random_additive(4, 10, seed)
    mus = mms_values(inst)
    tr = s_reduce(start_trace(to_ordered(inst), Fraction(6, 7), mus))
    run = bagfill_round_robin(tr)
    assert list(run.closed_bags) == list(range(len(run.closed_bags)))
    for agent, bundle in run.awards.items():
        assert tr.ordered.ordered_value(agent, bundle) >= tr.threshold(agent)
    # bags of three or more goods are never worth more than 4/3 of a survivor's threshold
    for bag_agent, bundle in run.awards.items():
        if bag_agent in run.survivors or len(bundle) < 3:
            continue
        for i in run.survivors:
            assert tr.ordered.ordered_value(i, bundle) * 3 <= tr.threshold(i) * 4


def test_round_robin_rejects_reducible():
    inst = Instance.additive([[5, 1, 1, 1], [5, 1, 1, 1]])
    tr = start_trace(to_ordered(inst), 1, mms_values(inst))
    with pytest.raises(PreconditionError):
        bagfill_round_robin(tr)


def test_round_robin_copies_top_goods():
    inst = Instance.additive([[3, 3, 3, 2, 2, 2, 1, 1, 1]] * 3)
    tr = r_reduce(start_trace(to_ordered(inst), Fraction(6, 7), mms_values(inst)))
    run = bagfill_round_robin(tr)
    assert set(run.duplicated) <= set(tr.goods[: len(run.duplicated)])


# --- pipelines ----------------------------------------------------------------


@pytest.mark.parametrize("seed", range(40))
def test_six_sevenths_pipeline(seed):
    n = 2 + seed % 4
    inst = gen_random_additive(n, 2 * n + 1 + seed % 3, seed)
    res = pipeline_six_sevenths(inst)
    report = verify_guarantee(inst, res.allocation, res.targets())
    assert report.all_pass and report.covered
    s = res.allocation.stats()
    assert s.total_extra <= n // 2 and s.max_per_good <= 1
    assert res.witness.t == s.total_extra


def test_six_sevenths_hand_example_copies_top_good():
    inst = Instance.additive([[9, 8, 6, 5, 4, 4, 3]] * 3)
    res = pipeline_six_sevenths(inst)
    assert res.trace.steps[0].rule == "S"
    assert res.allocation.stats().total_extra == 1


def test_six_sevenths_alpha_cap():
    inst = gen_random_additive(2, 5, 0)
    with pytest.raises(PreconditionError):
        pipeline_six_sevenths(inst, alpha=Fraction(7, 8))
    res = pipeline_six_sevenths(inst, alpha=Fraction(1, 2))
    assert res.alpha == Fraction(1, 2)


def test_four_fifths_rejects_small():
    for n in (2, 5):
        inst = gen_random_additive(n, n + 4, 0)
        with pytest.raises(PreconditionError, match="unsupported size"):
            pipeline_four_fifths(inst)


def test_four_fifths_alpha_cap():
    inst = gen_random_additive(6, 12, 0)
    with pytest.raises(PreconditionError):
        pipeline_four_fifths(inst, alpha=Fraction(5, 6))


@pytest.mark.parametrize("seed", range(6))
def test_four_fifths_pipeline(seed):
    inst = gen_random_additive(6, 10, seed, value_range=(1, 6), denominator=1)
    res = pipeline_four_fifths(inst, cap=CAP8)
    report = verify_guarantee(inst, res.allocation, res.targets())
    assert report.all_pass and report.covered
    s = res.allocation.stats()
    assert s.total_extra <= 2 and s.max_per_good <= 1


def test_four_fifths_with_t_rule():
    # two copies of the T hand example: six identical agents
    inst = Instance.additive([[10, 9, 5, 4, 4, 3, 3, 1] * 2] * 6)
    res = pipeline_four_fifths(inst, cap=SizeCap(16, 8))
    assert verify_guarantee(inst, res.allocation, res.targets()).all_pass
    assert [s.rule for s in res.trace.steps] == ["T", "T"]
    assert res.allocation.stats().total_extra == 2


def test_zero_share_agents_skip_reductions():
    inst = Instance.additive([[1, 1, 1, 1], [0, 0, 0, 0]])
    res = pipeline_six_sevenths(inst)
    assert res.mus[1] == 0
    assert verify_guarantee(inst, res.allocation, res.targets()).all_pass


# --- one-out-of-d -------------------------------------------------------------


def test_copy_bound_formula():
    # floor(m/2) + ceil((9/4) m / (n - 3/2))
    assert one_out_of_d_copy_bound(5, 10, Fraction(1, 2)) == 5 + math.ceil(Fraction(225, 35))


@pytest.mark.parametrize("seed", range(10))
def test_one_out_of_d_reduction(seed):
    inst = gen_random_additive(5, 10, seed)
    mus = mms_values(inst)
    run = mms_via_one_out_of_d(inst, Fraction(1, 2))
    report = verify_guarantee(inst, run.allocation, mus)
    assert report.all_pass
    s = run.allocation.stats()
    assert s.max_per_good <= 1
    assert s.total_extra <= run.bound
    assert s.total_extra <= (len(run.kept) * inst.m) // (inst.n - len(run.kept))


def test_one_out_of_d_custom_allocator_failure():
    inst = gen_random_additive(4, 8, 0)
    with pytest.raises(RuntimeError):
        mms_via_one_out_of_d(inst, Fraction(1, 2), allocator=lambda *_: None)


def test_one_out_of_d_rejects_bad_alpha():
    inst = gen_random_additive(3, 6, 0)
    with pytest.raises(PreconditionError):
        mms_via_one_out_of_d(inst, Fraction(-1))
    with pytest.raises(PreconditionError):
        mms_via_one_out_of_d(inst, Fraction(3))


def test_one_out_of_d_bound_uses_kept_goods():
    inst = gen_random_additive(4, 8, 2)
    run = mms_via_one_out_of_d(inst, Fraction(1, 2))
    first = one_out_of_d_alloc(inst, run.d, agents=[0, 1])
    assert first is not None
    extra = run.allocation.stats().total_extra
    assert extra <= sum(len(run.allocation.bundles[i]) for i in run.kept)


def test_copy_bound_below_m_on_grid():
    # alpha = 1/3 + 4/n keeps the total below m once n is large enough
    for n in range(20, 200, 7):
        for m in (n, 2 * n, 5 * n):
            alpha = Fraction(1, 3) + Fraction(4, n)
            assert one_out_of_d_copy_bound(n, m, alpha) < m * Fraction(4, 5) + 4 * m // n + 2


# --- randomized allocator -----------------------------------------------------


def test_thresholds():
    assert INV_E_LOW < Fraction(1) / Fraction(math.e) < INV_E_LOW + Fraction(1, 10**6)
    assert total_copy_threshold(3) == 1
    assert total_copy_threshold(27) == 9
    assert per_good_threshold(27, 3) == math.floor(3 * math.log(27) / math.log(math.log(27)))
    assert per_good_threshold(2, 4) == 3
    assert per_good_threshold(1, 1) == 0


def test_randomized_cube_three():
    inst = gen_cube(3)
    res = randomized_monotone(inst, beta=3, seed=0)
    assert res.success
    s = res.allocation.stats()
    assert s.total_extra <= total_copy_threshold(27)
    assert s.max_per_good <= per_good_threshold(27, 3)
    assert verify_guarantee(inst, res.allocation, [1] * 3).all_pass


def test_randomized_deterministic_with_seed():
    inst = gen_cube(2)
    assert randomized_monotone(inst, 1, seed=4) == randomized_monotone(inst, 1, seed=4)


def test_randomized_failure_result():
    # every draw gives all three agents both goods: four copies, threshold zero
    from mms_copies.core import MonotoneOracle

    v = MonotoneOracle(2, lambda s: Fraction(len(s) == 2), (frozenset({0, 1}),))
    res = randomized_monotone(Instance((v, v, v)), beta=1, seed=0)
    assert not res.success
    assert res.allocation is None
    assert res.iterations == res.max_iterations == 6


def test_randomized_needs_partitions():
    with pytest.raises(PreconditionError):
        randomized_monotone(Instance.additive([[1, 1]]), 1)
    with pytest.raises(PreconditionError):
        randomized_monotone(gen_cube(2), 0)
