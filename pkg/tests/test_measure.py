import unittest
from fractions import Fraction

from hypothesis import given
from hypothesis import strategies as st

from cantordyn.clopen import EMPTY, FULL, ClopenSet
from cantordyn.measure import (
    FamilyParseError,
    InvalidWeights,
    MeasureFamily,
    TreeMeasure,
    dominated,
    format_family,
    frac_text,
    parse_family,
    sim_k,
    validate_family,
)

UNIFORM = MeasureFamily([TreeMeasure()])
THIRD = MeasureFamily([TreeMeasure({"": Fraction(1, 3)})])


class TreeMeasureTest(unittest.TestCase):
    def test_uniform_cylinders(self):
        m = TreeMeasure()
        self.assertEqual(m.cyl(""), 1)
        self.assertEqual(m.cyl("01"), Fraction(1, 4))
        self.assertEqual(m.eval(ClopenSet(["0"])), Fraction(1, 2))
        self.assertEqual(m.eval(FULL), 1)
        self.assertEqual(m.eval(EMPTY), 0)

    def test_weighted_cylinders(self):
        m = TreeMeasure({"": Fraction(1, 3), "1": Fraction(1, 4)})
        self.assertEqual(m.cyl("0"), Fraction(1, 3))
        self.assertEqual(m.cyl("10"), Fraction(1, 6))
        self.assertEqual(m.cyl("11"), Fraction(1, 2))
        self.assertEqual(m.cyl("00"), Fraction(1, 6))

    def test_half_weights_pruned(self):
        m = TreeMeasure({"0": Fraction(1, 2), "": Fraction(1, 3)})
        self.assertEqual(m.weights, {"": Fraction(1, 3)})
        self.assertEqual(m, TreeMeasure({"": Fraction(1, 3)}))

    def test_identity_ignores_name_and_bound(self):
        a = TreeMeasure({"": Fraction(1, 3)}, depth_bound=5, name="a")
        b = TreeMeasure({"": Fraction(1, 3)}, name="b")
        self.assertEqual(a, b)
        self.assertEqual(hash(a), hash(b))

    def test_depth_bound_floor(self):
        m = TreeMeasure({"01": Fraction(1, 3)}, depth_bound=1)
        self.assertEqual(m.depth_bound, 3)
        self.assertEqual(TreeMeasure({}, depth_bound=4).depth_bound, 4)

    def test_constructor_accepts_out_of_range(self):
        # range checking is validate_family's job
        m = TreeMeasure({"": Fraction(3, 2)})
        self.assertEqual(m.cyl("0"), Fraction(3, 2))

    def test_bad_word_rejected(self):
        with self.assertRaises(ValueError):
            TreeMeasure({"2": Fraction(1, 3)})


class FamilyTest(unittest.TestCase):
    def test_vec_and_sim(self):
        k = MeasureFamily([TreeMeasure(), TreeMeasure({"": Fraction(1, 3)})])
        a = ClopenSet(["0"])
        self.assertEqual(k.vec(a), (Fraction(1, 2), Fraction(1, 3)))
        self.assertEqual(k.vec_word("0"), (Fraction(1, 2), Fraction(1, 3)))
        self.assertTrue(sim_k(k, a, a))
        self.assertFalse(sim_k(k, a, ClopenSet(["1"])))
        # equal under uniform but not under the weighted one
        self.assertTrue(k.generators[0].eval(ClopenSet(["1"])) == Fraction(1, 2))
        self.assertFalse(k.sim(ClopenSet(["0"]), ClopenSet(["1"])))

    def test_dominated(self):
        self.assertTrue(dominated(UNIFORM, ClopenSet(["00"]), ClopenSet(["0"])))
        self.assertTrue(dominated(UNIFORM, ClopenSet(["00"]), ClopenSet(["1"])))
        self.assertFalse(dominated(UNIFORM, FULL, ClopenSet(["1"])))

    def test_empty_family_rejected(self):
        with self.assertRaises(ValueError):
            MeasureFamily([])


class ValidateTest(unittest.TestCase):
    def test_uniform_delta_table(self):
        rep = validate_family(UNIFORM)
        self.assertTrue(rep.ok)
        self.assertTrue(rep)
        for j, (eps, delta) in enumerate(rep.delta_table, start=1):
            self.assertEqual(eps, Fraction(1, 2 ** j))
            self.assertEqual(delta, 2 * eps)

    def test_third_delta_table(self):
        # root weight 1/3, everything deeper halves: max cyl = (2/3)*2^(1-d)
        rep = validate_family(THIRD)
        table = dict(rep.delta_table)
        self.assertEqual(table[Fraction(1, 2)], Fraction(1, 2))
        self.assertEqual(table[Fraction(1, 4)], Fraction(1, 4))
        self.assertEqual(table[Fraction(1, 8)], Fraction(1, 8))

    def test_delta_is_sound(self):
        # any set of diameter < delta must have mass <= eps
        k = MeasureFamily([TreeMeasure({"": Fraction(1, 3), "1": Fraction(1, 4)})])
        rep = validate_family(k)
        for eps, delta in rep.delta_table[:4]:
            depth = (delta / 2).denominator.bit_length() - 1
            for w in FULL.refine_to_depth(depth):
                self.assertLessEqual(k.generators[0].cyl(w), eps)

    def test_invalid_weight_raises(self):
        k = MeasureFamily([TreeMeasure({"": Fraction(3, 2)})])
        with self.assertRaises(InvalidWeights):
            validate_family(k)
        k = MeasureFamily([TreeMeasure({"0": Fraction(0, 1)})])
        with self.assertRaises(InvalidWeights):
            validate_family(k)

    def test_duplicates_flagged(self):
        k = MeasureFamily([TreeMeasure(), TreeMeasure({})])
        rep = validate_family(k)
        self.assertFalse(rep.ok)
        self.assertTrue(any("duplicate" in line for line in rep.lines))


FAMILY_TEXT = """\
# two generators
measure uniform
depth_bound 2

measure skew
weight e 1/3
weight 1 1/4
"""


class ParseTest(unittest.TestCase):
    def test_parse_basic(self):
        k = parse_family(FAMILY_TEXT)
        self.assertEqual(len(k), 2)
        self.assertEqual(k.generators[0], TreeMeasure())
        self.assertEqual(k.generators[0].depth_bound, 2)
        self.assertEqual(k.generators[1].weights, {"": Fraction(1, 3), "1": Fraction(1, 4)})
        self.assertEqual(k.generators[1].name, "skew")

    def test_round_trip(self):
        k = parse_family(FAMILY_TEXT)
        self.assertEqual(parse_family(format_family(k)), k)

    def assert_error(self, text, line, fragment):
        with self.assertRaises(FamilyParseError) as cm:
            parse_family(text)
        self.assertEqual(cm.exception.line, line)
        self.assertIn(fragment, str(cm.exception))

    def test_errors(self):
        self.assert_error("", 1, "no measures")
        self.assert_error("weight e 1/3\n", 1, "outside a measure")
        self.assert_error("measure a\nweight e 3/2\n", 2, "not in (0,1)")
        self.assert_error("measure a\nweight e 0/7\n", 2, "not in (0,1)")
        self.assert_error("measure a\nweight e 1/0\n", 2, "zero denominator")
        self.assert_error("measure a\nweight e 0.5\n", 2, "expected num/den")
        self.assert_error("measure a\nweight 2 1/3\n", 2, "bad branching word")
        self.assert_error("measure a\nweight e 1/3\nweight e 1/4\n", 3, "duplicate weight")
        self.assert_error("measure a\nmeasure a\n", 2, "duplicate measure name")
        self.assert_error("measure a\nfrobnicate 3\n", 2, "unknown keyword")
        self.assert_error("measure a\ndepth_bound 1\nweight 01 1/3\n", 1, "depth_bound 1 below")
        self.assert_error("measure a\ndepth_bound -1\n", 2, "nonnegative")

    def test_frac_text(self):
        self.assertEqual(frac_text(Fraction(0)), "0/1")
        self.assertEqual(frac_text(Fraction(1)), "1/1")
        self.assertEqual(frac_text(Fraction(5, 16)), "5/16")


weights_st = st.dictionaries(
    st.text(alphabet="01", max_size=3),
    st.fractions(min_value=Fraction(1, 100), max_value=Fraction(99, 100)),
    max_size=4,
)
sets_st = st.lists(st.text(alphabet="01", max_size=5), max_size=6).map(ClopenSet)


@given(weights_st, sets_st, sets_st)
def test_measure_is_additive(weights, a, b):
    m = TreeMeasure(weights)
    assert m.eval(a | b) + m.eval(a & b) == m.eval(a) + m.eval(b)
    assert m.eval(FULL) == 1
    assert m.eval(a.complement()) == 1 - m.eval(a)


@given(weights_st, st.text(alphabet="01", max_size=5))
def test_cylinder_splits(weights, w):
    m = TreeMeasure(weights)
    assert m.cyl(w) == m.cyl(w + "0") + m.cyl(w + "1")


if __name__ == "__main__":
    unittest.main()
