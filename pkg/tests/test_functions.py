import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from edgestep.functions import (
    EdgeStepFunction,
    Verdict,
    build_normalizers,
    check_conditions,
    estimate_c1_c2,
    evaluate,
    expected_vertex_count,
    karamata_ratio,
    phi_direct,
    slow_variation_ratio,
)

from oracles import phi_exact

POWER = EdgeStepFunction.power(0.5)
LOG2 = EdgeStepFunction.log_power(2.0)


def test_eval_examples():
    assert evaluate(EdgeStepFunction.constant(0.5), 10) == 0.5
    assert POWER(4) == 0.5
    assert LOG2(math.e**2 - math.e) == pytest.approx(0.25, rel=1e-15)


@pytest.mark.parametrize("bad", [0, 0.5, -3])
def test_eval_domain(bad):
    with pytest.raises(ValueError):
        POWER(bad)


@pytest.mark.parametrize(
    "make",
    [
        lambda: EdgeStepFunction.power(1.5),
        lambda: EdgeStepFunction.power(-0.1),
        lambda: EdgeStepFunction.constant(1.2),
        lambda: EdgeStepFunction.log_power(0.0),
        lambda: EdgeStepFunction.tabulated([0.5, 0.6]),
        lambda: EdgeStepFunction.tabulated([1.5]),
    ],
)
def test_construction_errors(make):
    with pytest.raises(ValueError):
        make()


def test_tabulated_eval_and_horizon():
    f = EdgeStepFunction.tabulated([1.0, 0.5, 0.5, 0.25])
    assert f(2) == 0.5 and f(4) == 0.25
    with pytest.raises(ValueError):
        f(5)


def test_phi_degenerate_zero():
    tab = build_normalizers(EdgeStepFunction.constant(0.0), 5)
    assert tab.phi.tolist() == [1.0, 2.0, 3.0, 4.0, 5.0]
    assert np.all(tab.xi == 1.0)


def test_phi_constant_one_matches_exact_rationals():
    tab = build_normalizers(EdgeStepFunction.constant(1.0), 10)
    ones = {s: 1 for s in range(1, 12)}
    assert phi_exact(ones, 2) == Fraction(3, 2)
    assert phi_exact(ones, 3) == Fraction(15, 8)
    assert tab.phi_at(2) == 1.5 and tab.xi_at(2) == 0.75
    assert tab.phi_at(3) == 1.875
    for t in range(1, 11):
        assert tab.phi_at(t) == pytest.approx(float(phi_exact(ones, t)), rel=1e-14)


def test_phi_matches_exact_for_rational_table():
    vals = [1, Fraction(1, 2), Fraction(1, 2), Fraction(1, 4), Fraction(1, 4), Fraction(1, 8), 0, 0]
    f = EdgeStepFunction.tabulated([float(v) for v in vals])
    fv = {s + 1: v for s, v in enumerate(vals)}
    tab = build_normalizers(f, 8)
    for t in range(1, 9):
        assert tab.phi_at(t) == pytest.approx(float(phi_exact(fv, t)), rel=1e-14)


@pytest.mark.parametrize("f", [POWER, LOG2, EdgeStepFunction.constant(0.3), EdgeStepFunction.power(0.9)])
def test_two_xi_forms_agree(f):
    T = 200_000
    tab = build_normalizers(f, T)
    t = np.arange(1, T + 1)
    direct = phi_direct(f, T)
    assert np.max(np.abs(tab.xi - direct / t) / tab.xi) <= 1e-10
    assert np.max(np.abs(tab.xi - tab.phi / t) / tab.xi) <= 1e-12
    # xi non-increasing, phi strictly increasing (f < 2 everywhere)
    assert np.all(np.diff(tab.xi) <= 0)
    assert np.all(np.diff(tab.phi) > 0)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0.0, 1.0), min_size=2, max_size=60))
def test_xi_invariants_tabulated(values):
    f = EdgeStepFunction.tabulated(sorted(values, reverse=True))
    tab = build_normalizers(f, len(values))
    assert tab.phi_at(1) == 1.0
    assert np.all(np.diff(tab.xi) <= 0)
    direct = phi_direct(f, len(values)) / np.arange(1, len(values) + 1)
    np.testing.assert_allclose(tab.xi, direct, rtol=1e-12)


def test_xi_converges_on_nested_horizons():
    tab = build_normalizers(POWER, 2_000_000)
    gaps = [abs(tab.xi_at(2 * T) - tab.xi_at(T)) for T in (10**3, 10**4, 10**5, 10**6)]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))


def test_overflow_names_index(monkeypatch):
    import edgestep.functions as fn

    def bad(f, T):
        x = np.ones(T - 1)
        x[2] = np.inf
        return x

    monkeypatch.setattr(fn, "_xi_factors", bad)
    with pytest.raises(OverflowError, match="t=4"):
        fn.build_normalizers(POWER, 10)


def test_normalizer_csv(tmp_path):
    tab = build_normalizers(EdgeStepFunction.constant(0.0), 3)
    p = tmp_path / "phi.csv"
    tab.to_csv(p)
    assert p.read_text().splitlines() == ["t,phi", "1,1.0", "2,2.0", "3,3.0"]


def test_conditions_power_holds():
    rep = check_conditions(POWER, [10, 100, 1000], 10**5)
    assert rep.holds_S is Verdict.HOLDS
    assert 0 <= rep.s_tail_estimate < math.inf
    assert rep.holds_Vinf is Verdict.HOLDS
    assert rep.holds_D0 and rep.monotone_on_grid
    # regular variation with index -1/2 is exact for a pure power
    assert max(abs(x) for x in rep.ratio_residuals[2.0]) < 1e-12


def test_conditions_log1_fails():
    rep = check_conditions(EdgeStepFunction.log_power(1.0), [10, 100], 10**4)
    assert rep.holds_S is Verdict.FAILS


def test_conditions_log2_holds_and_f_log_t_decreases():
    grid = [10**k for k in range(1, 7)]
    rep = check_conditions(LOG2, grid, 10**6)
    assert rep.holds_S is Verdict.HOLDS
    vals = [v for _, v in rep.f_log_t]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    # the closed-form tail bound covers the true remainder: compare with a longer partial sum
    longer = check_conditions(LOG2, grid, 10**7)
    assert longer.s_partial_sum - rep.s_partial_sum <= rep.s_tail_estimate


def test_conditions_tail_bound_power_covers_remainder():
    rep = check_conditions(POWER, [10], 10**4)
    longer = check_conditions(POWER, [10], 10**6)
    assert 0 < longer.s_partial_sum - rep.s_partial_sum <= rep.s_tail_estimate


def test_conditions_constant_and_tabulated():
    c = check_conditions(EdgeStepFunction.constant(0.4), [2, 4], 1000)
    assert c.holds_S is Verdict.FAILS and c.holds_Vinf is Verdict.HOLDS and not c.holds_D0
    z = check_conditions(EdgeStepFunction.constant(0.0), [2, 4], 1000)
    assert z.holds_S is Verdict.HOLDS and z.s_tail_estimate == 0.0 and z.holds_Vinf is Verdict.FAILS
    tab = check_conditions(EdgeStepFunction.tabulated([1, 0.5, 0.2]), [1, 2], 100)
    assert tab.holds_S is Verdict.INCONCLUSIVE and tab.s_tail_estimate is None
    assert tab.tail_horizon == 3


def test_conditions_grid_must_increase():
    with pytest.raises(ValueError):
        check_conditions(POWER, [10, 5], 100)


def test_slow_variation_examples():
    z = slow_variation_ratio(EdgeStepFunction.constant(0.0), 3.7, [1, 10, 1000])
    assert all(r == 1.0 for _, r in z.ratios)
    p = slow_variation_ratio(POWER, 2.0, [10**5])
    assert 0.999 <= p.ratios[0][1] <= 1.001
    one = slow_variation_ratio(EdgeStepFunction.constant(1.0), 2.0, [4])
    exact = math.prod(1 - 1 / (2 * (r + 1)) for r in range(4, 8))
    assert one.ratios[0][1] == pytest.approx(exact, rel=1e-14)


def test_slow_variation_trend_and_horizon():
    rep = slow_variation_ratio(LOG2, 2.0, [10, 100, 1000, 10**4])
    assert rep.trending_to_one
    tab = build_normalizers(LOG2, 100)
    with pytest.raises(IndexError):
        slow_variation_ratio(LOG2, 2.0, [60], tab)


def test_c1_c2():
    assert tuple(estimate_c1_c2(build_normalizers(EdgeStepFunction.constant(0.0), 50)))[:2] == (1.0, 1.0)
    tab = build_normalizers(POWER, 10**6)
    C1, C2, H = estimate_c1_c2(tab)
    assert C2 == 1.0 and H == 10**6
    assert 0 < C1 <= C2
    assert C1 == tab.xi_at(10**6)
    assert abs(tab.xi_at(10**6) - tab.xi_at(10**5)) < 1e-3


def test_expected_vertex_count():
    assert expected_vertex_count(EdgeStepFunction.constant(1.0), 4) == 4.0
    assert expected_vertex_count(EdgeStepFunction.constant(0.0), 10) == 1.0
    f = EdgeStepFunction.tabulated([1.0, 0.5, 0.25])
    assert expected_vertex_count(f, 3) == 1.75
    assert expected_vertex_count(f, 3, convention="current") == 2.5


def test_karamata_ratio_tends_to_one():
    ell = lambda x: 1.0 / math.log(math.e + x) ** 2  # noqa: E731
    far = [abs(karamata_ratio(ell, -0.5, x) - 1.0) for x in (1e3, 1e6, 1e12)]
    assert far[-1] < far[0]
    assert karamata_ratio(lambda x: 1.0, -0.5, 1e8) == pytest.approx(1.0, abs=1e-3)
    # alpha < -1 tail version, pure power is exact
    assert karamata_ratio(lambda x: 1.0, -1.5, 100.0) == pytest.approx(1.0, rel=1e-8)
