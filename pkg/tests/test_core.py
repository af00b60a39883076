import json
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mms_copies.core import (
    Additive,
    CopyAllocation,
    Instance,
    KDemand,
    MonotoneOracle,
    complete_allocation,
    copy_stats,
    evaluate,
    format_rational,
    instance_from_json,
    instance_to_json,
    load_instance,
    parse_rational,
    save_instance,
    verify_guarantee,
)
from mms_copies.instances import appendix_e_allocation, fixture_appendix_e, gen_cube

fractions = st.fractions(min_value=0, max_value=20, max_denominator=12)


def test_evaluate_additive():
    assert evaluate(Additive((2, 3, 5)), {0, 2}) == 7


def test_evaluate_kdemand_top_two():
    assert evaluate(KDemand(2, (5, 4, 1)), {0, 1, 2}) == 9
    assert evaluate(KDemand(2, (5, 4, 1)), {2}) == 1


def test_evaluate_worked_example_bag():
    inst = fixture_appendix_e()
    # g7, g5, g3, g8 for the third agent
    assert inst.value(2, {6, 4, 2, 7}) == Fraction(3, 2)


def test_evaluate_rejects_unknown_good():
    with pytest.raises(IndexError):
        evaluate(Additive((1, 2)), {2})
    with pytest.raises(IndexError):
        evaluate(Additive((1, 2)), {-1})


def test_negative_values_rejected():
    with pytest.raises(ValueError):
        Additive((1, -1))


def test_floats_rejected():
    with pytest.raises(TypeError):
        parse_rational(0.3)


def test_parse_forms():
    assert parse_rational("3/6") == Fraction(1, 2)
    assert parse_rational("0.7") == Fraction(7, 10)
    assert parse_rational(" 4 ") == 4


@given(st.fractions(max_denominator=10_000))
def test_rational_round_trip(r):
    assert parse_rational(format_rational(r)) == r


@given(st.lists(fractions, min_size=1, max_size=8), st.data())
def test_additive_monotone_on_chains(values, data):
    order = data.draw(st.permutations(range(len(values))))
    v = Additive(tuple(values))
    prev = Fraction(0)
    for size in range(len(order) + 1):
        cur = evaluate(v, order[:size])
        assert cur >= prev
        prev = cur


@given(st.integers(1, 4), st.lists(fractions, min_size=1, max_size=8), st.data())
def test_kdemand_monotone_on_chains(k, values, data):
    order = data.draw(st.permutations(range(len(values))))
    v = KDemand(k, tuple(values))
    prev = Fraction(0)
    for size in range(len(order) + 1):
        cur = evaluate(v, order[:size])
        assert cur >= prev
        prev = cur


def test_cube_valuation_monotone_on_random_chains():
    import random

    inst = gen_cube(3)
    rng = random.Random(1)
    for _ in range(20):
        order = list(range(inst.m))
        rng.shuffle(order)
        prev = Fraction(0)
        for size in range(inst.m + 1):
            cur = inst.value(0, order[:size])
            assert cur >= prev
            prev = cur
    assert inst.value(1, ()) == 0 and inst.value(1, range(inst.m)) == 1


def test_copy_stats_partition_has_no_copies():
    s = copy_stats(CopyAllocation(({0, 1}, {2}, {3}), 4))
    assert (s.total_extra, s.max_per_good, s.duplicated) == (0, 0, frozenset())


def test_copy_stats_single_holder():
    s = copy_stats(CopyAllocation(({0, 1, 2},), 3))
    assert (s.total_extra, s.max_per_good) == (0, 0)


def test_copy_stats_worked_example_bundles():
    # g7 held three times, g9 and g2 twice each
    s = appendix_e_allocation().stats()
    assert s.total_extra == 4
    assert s.max_per_good == 2
    assert s.duplicated == frozenset({6, 8, 1})


@given(st.lists(st.sets(st.integers(0, 7), max_size=8), min_size=1, max_size=5))
def test_copy_stats_consistent(bundles):
    alloc = CopyAllocation(tuple(bundles), 8)
    s = alloc.stats()
    mult = alloc.multiplicity()
    assert s.total_extra == sum(c - 1 for c in mult.values())
    assert s.total_extra == sum(len(b) for b in bundles) - len(set().union(*bundles))
    assert s.total_extra >= s.max_per_good >= 0


def test_verify_guarantee_mms_partition_passes():
    inst = Instance.additive([[1, 1, 1, 1], [2, 0, 0, 2]])
    report = verify_guarantee(inst, CopyAllocation(({0, 1}, {2, 3}), 4), [2, 2])
    assert report.all_pass and report.covered
    assert report.min_ratio == 1


def test_verify_guarantee_empty_bundle_zero_target():
    inst = Instance.additive([[1, 1], [1, 1]])
    report = verify_guarantee(inst, CopyAllocation(({0, 1}, set()), 2), [2, 0])
    assert report.all_pass
    assert report.min_ratio == 1


def test_verify_guarantee_worked_example_allocation():
    report = verify_guarantee(fixture_appendix_e(), appendix_e_allocation(), [1] * 4)
    assert report.all_pass
    assert [c.value for c in report.agents] == [Fraction(6, 5), Fraction(11, 10), Fraction(3, 2), 1]


def test_verify_guarantee_dimension_mismatch():
    inst = Instance.additive([[1, 1], [1, 1]])
    with pytest.raises(ValueError):
        verify_guarantee(inst, CopyAllocation(({0, 1},), 2), [1, 1])
    with pytest.raises(ValueError):
        verify_guarantee(inst, CopyAllocation(({0}, {1}), 2), [1])


def test_verify_guarantee_reports_failure():
    inst = Instance.additive([[1, 1], [1, 1]])
    report = verify_guarantee(inst, CopyAllocation(({0, 1}, set()), 2), [1, 1])
    assert not report.all_pass
    assert [c.ok for c in report.agents] == [True, False]


def test_complete_allocation_gives_leftovers_to_last():
    bundles = [{0}, {1}, set()]
    complete_allocation(bundles, 5, 1)
    assert bundles == [{0}, {1, 2, 3, 4}, set()]


def test_instance_validation():
    with pytest.raises(ValueError):
        Instance.additive([[1, 2], [1]])
    with pytest.raises(ValueError):
        Instance(())
    assert Instance.additive([[1, 2]]).kind == "additive"
    assert Instance.kdemand(2, [[1, 2]]).kind == "kdemand"


def test_monotone_oracle_partition_must_cover():
    with pytest.raises(ValueError):
        MonotoneOracle(3, lambda s: Fraction(0), (frozenset({0}), frozenset({1})))
    with pytest.raises(ValueError):
        MonotoneOracle(2, lambda s: Fraction(0), (frozenset({0, 1}), frozenset({1})))


def test_json_round_trip(tmp_path):
    inst = fixture_appendix_e()
    path = tmp_path / "e.json"
    save_instance(inst, path)
    back = load_instance(path)
    assert back.table() == inst.table()
    data = json.loads(path.read_text())
    assert data["kind"] == "additive" and data["n"] == 4 and data["m"] == 12


def test_json_kdemand_and_cube():
    inst = Instance.kdemand(2, [["1/2", "1"], ["1", "0"]])
    back = instance_from_json(instance_to_json(inst))
    assert back.kind == "kdemand" and back.valuations[0].k == 2
    cube = instance_from_json({"kind": "monotone-cube", "n": 2, "m": 4})
    assert cube.m == 4 and cube.n == 2


def test_json_rejects_bad_shapes():
    with pytest.raises(ValueError):
        instance_from_json({"kind": "additive", "n": 2, "m": 2, "values": [["1", "1"]]})
    with pytest.raises(ValueError):
        instance_from_json({"kind": "weird", "n": 1, "m": 1, "values": [["1"]]})


def test_allocation_json_round_trip():
    alloc = CopyAllocation(({0, 2}, {1, 2}), 3)
    assert CopyAllocation.from_json(json.loads(json.dumps(alloc.to_json())), 3) == alloc
