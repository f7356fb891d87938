from fractions import Fraction

import pytest

from cantordyn.builder import (
    BuildFailure,
    HitsTop,
    TowerSequence,
    apply,
    build_saturated,
    enumerate_pairs,
    load_sequence,
    serialize_sequence,
    validate_sequence,
)
from cantordyn.clopen import EMPTY, FULL, ClopenSet
from cantordyn.measure import MeasureFamily, TreeMeasure
from cantordyn.tower import KRPartition, trivial_partition

F = Fraction
UNI = MeasureFamily([TreeMeasure()])
C = lambda *ws: ClopenSet(ws)

# the first refinement of the trivial tower under the uniform measure,
# one column read bottom to top
STAGE1 = (
    "0000 0001 0011 0100 0101 0110 0111 1000"
    " 1001 1010 1011 1100 1101 1110 1111 0010"
).split()


def test_enumerate_pairs_prefix():
    got = enumerate_pairs(UNI, 6, 3)
    assert got == (
        (EMPTY, EMPTY),
        (FULL, FULL),
        (C("1"), C("1")),
        (C("1"), C("0")),
        (C("1"), C("01", "11")),
        (C("1"), C("01", "10")),
    )


def test_enumerate_pairs_shortfall():
    # depth cap 1 gives only the two halves besides the trivial sets
    assert len(enumerate_pairs(UNI, 6, 1)) == 6
    with pytest.raises(ValueError):
        enumerate_pairs(UNI, 7, 1)


def test_build_two_stages():
    g = build_saturated(UNI, 2, depth_cap=3, max_depth=12)
    assert len(g.stages) == 3
    assert g.stages[0] == trivial_partition()
    assert g.budgets == (F(1), F(1, 2), F(1, 4))
    assert g.pairs == enumerate_pairs(UNI, 2, 3)
    cols = g.stages[1].columns
    assert len(cols) == 1
    assert [a.leaves for a in cols[0]] == [(w,) for w in STAGE1]
    # base and top already fit the tighter budget, so stage 2 is stage 1
    assert g.stages[2] == g.stages[1]
    assert validate_sequence(g) == ()


def test_build_rejects_bad_inputs():
    with pytest.raises(ValueError):
        build_saturated(UNI, 0)
    dup = MeasureFamily([TreeMeasure(), TreeMeasure()])
    with pytest.raises(ValueError, match="degenerate"):
        build_saturated(dup, 1)
    with pytest.raises(ValueError):
        build_saturated(UNI, 2, eps_schedule=[F(1, 2)])
    with pytest.raises(ValueError):
        build_saturated(UNI, 1, eps_schedule=[F(0)])


def test_build_fails_on_proportional_generators():
    # inside [0] every subset carries exactly half as much of the second
    # generator as of the first, so the equal-share targets the
    # refinement asks of the base are unreachable
    bad = MeasureFamily([TreeMeasure(), TreeMeasure({"": F(1, 4)})])
    with pytest.raises(BuildFailure) as info:
        build_saturated(bad, 1)
    err = info.value
    assert err.stage == 1
    assert err.phase == "refine"
    assert "GoodnessFailure" in str(err)


def test_partials_cover_all_but_tops():
    g = build_saturated(UNI, 2)
    maps = g.partials
    assert len(maps) == 3
    assert len(maps[1].atom_map) == 15
    assert maps[0].atom_map == {}


def test_apply_walks_the_last_stage():
    g = build_saturated(UNI, 2)
    assert apply(g, "0000", 0) == "0000"
    assert apply(g, "0000", 1) == "0001"
    assert apply(g, "0001", 2) == "0100"
    assert apply(g, "00000", 3) == "0100"
    assert apply(g, "0000", 15) == "0010"


def test_apply_errors():
    g = build_saturated(UNI, 2)
    with pytest.raises(HitsTop):
        apply(g, "0010", 1)
    with pytest.raises(HitsTop):
        apply(g, "0000", 16)
    with pytest.raises(ValueError):
        apply(g, "0", 1)  # spans several atoms
    with pytest.raises(ValueError):
        apply(g, "0000", -1)


def test_validate_reports_tampering():
    g = build_saturated(UNI, 2)
    col = list(g.stages[1].columns[0])
    col[1], col[2] = col[2], col[1]
    swapped = KRPartition((tuple(col),))
    bad = TowerSequence(g.family, (g.stages[0], g.stages[1], swapped), g.pairs, g.budgets)
    msgs = validate_sequence(bad)
    assert msgs and any("does not refine" in m for m in msgs)

    holed = KRPartition((tuple(col[:-1]),))
    msgs = validate_sequence(
        TowerSequence(g.family, (g.stages[0], holed, holed), g.pairs, g.budgets)
    )
    assert any("not a tower partition" in m for m in msgs)

    tight = TowerSequence(g.family, g.stages, g.pairs, (F(1), F(1, 64), F(1, 4)))
    assert any("exceeds budget" in m for m in validate_sequence(tight))

    orphan = TowerSequence(g.family, g.stages[:2], g.pairs, g.budgets[:2])
    assert any("has no stage" in m for m in validate_sequence(orphan))


def test_serialize_round_trip():
    g = build_saturated(UNI, 2)
    text = serialize_sequence(g)
    back = load_sequence(text)
    assert back == g
    assert serialize_sequence(back) == text


def test_serialize_round_trip_two_generators():
    two = MeasureFamily([TreeMeasure(), TreeMeasure({"": F(1, 3)}, name="third")])
    base = KRPartition(((C("00"), C("10")), (C("01"), C("11"))))
    g = TowerSequence(two, (trivial_partition(), base), ((C("1"), C("0")),), (F(1), F(1)))
    text = serialize_sequence(g)
    lines = text.splitlines()
    assert lines[0] == "cantordyn tower v1"
    assert lines[1] == "generators 2"
    assert lines[2] == "measure mu0"
    assert "weight e 1/3" in lines
    assert "pair 1 0" in lines
    assert load_sequence(text) == g


def test_load_rejects_malformed_text():
    g = build_saturated(UNI, 1)
    text = serialize_sequence(g)
    with pytest.raises(ValueError, match="truncated"):
        load_sequence("\n".join(text.splitlines()[:-3]))
    with pytest.raises(ValueError, match="not a tower file"):
        load_sequence("something else\n" + text)
    with pytest.raises(ValueError):
        load_sequence(text.replace("stage 1 ", "stage 7 "))
    with pytest.raises(ValueError):
        load_sequence(text.replace("budget 1/2", "budget 1/0"))
    with pytest.raises(ValueError):
        load_sequence(text.replace("generators 1", "generators x"))


def test_load_defers_semantic_checks():
    g = build_saturated(UNI, 1)
    lines = serialize_sequence(g).splitlines()
    lines[lines.index("0011")] = "0000"
    # the damaged file still loads; validation catches it afterwards
    broken = load_sequence("\n".join(lines) + "\n")
    assert broken != g
    assert any("not a tower partition" in m for m in validate_sequence(broken))
