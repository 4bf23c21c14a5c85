from fractions import Fraction

from riskstop import make_counterexamples, subadditivity_report, tower_report


def test_pmfs_match_tables():
    tower, subadd = make_counterexamples()
    assert tower.pmf == {(-80, 100): Fraction(3, 100), (0, 100): Fraction(2, 100),
                         (0, 0): Fraction(95, 100)}
    assert subadd.pmf == {(100, 0): Fraction(5, 100), (0, 100): Fraction(5, 100),
                          (0, 0): Fraction(90, 100)}
    assert tower.total_mass() == 1 and subadd.total_mass() == 1
    assert tower.alpha == subadd.alpha == Fraction(1, 20)


def test_tower_values_exact():
    rep = tower_report()
    assert rep.joint == 52
    assert rep.nested == Fraction(4000, 97)
    assert rep.conditional == {-80: 100, 0: Fraction(4000, 97)}
    assert rep.tower_fails


def test_subadditivity_values_exact():
    rep = subadditivity_report()
    assert (rep.first, rep.second, rep.total) == (100, 100, 100)
    assert rep.strict
