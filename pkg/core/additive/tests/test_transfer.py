import math
from dataclasses import replace
from fractions import Fraction

import numpy as np
import pytest
from sympy import isprime

from additive.counting import EquationForm
from additive.cyclic import CyclicFunction, dft, mod_norm
from additive.errors import InvalidArgumentError, PlanRejectedError, StageError, is_input_error
from additive.generators import random_density, trigonometric_density
from additive.spectrum import sort_spectrum
from additive.transfer import (
    Overrides,
    TransferPlan,
    build_g,
    check_tuple_form,
    choose_m1,
    choose_m2,
    compute_X,
    cross_differences,
    dilate,
    ell_ratio,
    in_Xc,
    interval_window,
    log_size,
    m1_interval,
    run_chain,
    separation_fraction,
    separation_search,
    verify_correspondence,
    xc_bound,
)

AP = EquationForm((1, 1, -2))
SMALL_OVERRIDES = Overrides(i_scale=0.05, band_scale=0.3, sep_scale=0.1)


@pytest.fixture(scope="module")
def small_chain():
    return run_chain(CyclicFunction.constant(1009, 0.5), AP, 0.1, 3, SMALL_OVERRIDES)


def test_choose_m2():
    assert choose_m2(2, 0.5) == 11
    assert choose_m2(10, 0.1) == 163
    for k in range(2, 12):
        m2 = choose_m2(k, 0.2)
        assert isprime(m2)
        assert k ** 2.4 <= m2 <= 2 * k ** 2.4


@pytest.mark.parametrize("k,eps", [(1, 0.1), (3, 0.0), (3, 1.0)])
def test_choose_m2_domain(k, eps):
    with pytest.raises(InvalidArgumentError):
        choose_m2(k, eps)


def test_log_size_uses_natural_log():
    assert log_size(1009) == 7
    assert log_size(4999) == 9


def test_m1_interval():
    assert m1_interval(1009, 3, 0.1) == (101, 200)


def test_separation_search_single_zero_frequency():
    s = sort_spectrum(CyclicFunction.constant(101, 0.5))
    assert separation_search(s, AP, 1, 0.1, 11) == 1


def test_separation_fraction_counts_bad_m1():
    # differences are +-1..+-6; m1 = 167..170 and 200 come within tau N of a multiple of N
    assert cross_differences((0, 1, 2), AP, 1009).size == 12
    fraction = separation_fraction((0, 1, 2), AP, 1009, 3, 0.1, 13, sep_scale=0.1)
    assert fraction == pytest.approx(0.05)


def test_dilate():
    f = CyclicFunction.indicator(5, [1])
    assert dilate(f, 1).values.tolist() == f.values.tolist()
    assert dilate(f, 2).values.tolist() == [0, 0, 0, 1, 0]
    with pytest.raises(InvalidArgumentError):
        dilate(CyclicFunction.constant(6, 0.5), 2)


def test_dilate_preserves_spectrum_magnitudes(rng):
    f = CyclicFunction(53, rng.random(53), density=True)
    before = np.sort(np.abs(dft(f).values))
    after = np.sort(np.abs(dft(dilate(f, 7)).values))
    np.testing.assert_allclose(after, before, atol=1e-9)


def test_compute_X_single_band():
    X, Xc = compute_X(35, 7, [0], 1.0)
    assert Xc.tolist() == [0, 1, 34]
    assert X.size + Xc.size == 35
    _, Xc = compute_X(35, 7, [0], 2.5)
    assert Xc.size == 5


def test_compute_X_matches_exact_rational(rng):
    M, N, b_set, band = 143, 101, (3, 50, 77), 1.7
    _, Xc = compute_X(M, N, b_set, band)
    members = set(Xc.tolist())
    for a in rng.integers(0, M, size=60).tolist():
        exact = any(mod_norm(Fraction(a, M) - Fraction(b, N)) <= Fraction(17, 10 * M) for b in b_set)
        assert (a in members) == exact == in_Xc(a, M, N, b_set, band)
    assert Xc.size <= xc_bound(len(b_set), band)


def test_verify_correspondence_trivial_sets():
    assert verify_correspondence(15, 3, 5, [0], AP)
    empty = verify_correspondence(15, 3, 5, [], AP)
    assert empty and empty.pairs_checked == 0


def test_verify_correspondence_reports_witness():
    result = verify_correspondence(15, 3, 5, [0, 5], AP)
    assert not result
    assert not result.holds
    assert result.witness is not None
    with pytest.raises(InvalidArgumentError):
        verify_correspondence(16, 3, 5, [0], AP)


def test_choose_m1_small_instance():
    m1, Xc = choose_m1(1009, 3, 0.1, AP, (0, 1, 2), 13, SMALL_OVERRIDES)
    assert m1 == 101
    assert Xc.tolist() == [0, 1, 3]
    M = m1 * 13
    assert M % 2 == 1
    assert verify_correspondence(M, m1, 13, Xc, AP)


def test_interval_window_mass():
    for half, L in [(2, 1), (2, 3), (7, 4)]:
        w = interval_window(half, L)
        assert w.size == 2 * L * half + 1
        assert w.sum() == pytest.approx(2 * half + 1, rel=1e-12)
        assert w.max() <= 1.0 and w.min() >= 0.0


def test_ell_ratio_is_one_at_zero():
    assert ell_ratio(np.array([0, 1000]), 5, 1000).tolist() == [1.0, 1.0]


def test_small_chain_plan(small_chain):
    plan = small_chain.plan
    assert (plan.q, plan.m2, plan.m1, plan.M) == (1, 13, 101, 1313)
    assert plan.b_set == (0, 1, 2)
    assert plan.Xc == (0, 1, 3)
    assert (plan.L, plan.I_half) == (7, 45)
    assert plan.u_g == 0
    assert plan.overrides == SMALL_OVERRIDES


def test_small_chain_checks(small_chain):
    assert small_chain.passed, [k for k, ok in small_chain.checks.items() if not ok]
    for name in ("correspondence", "unique", "the_form", "g_support", "g_ell_formula",
                 "h_off_v", "h_formula", "h_w_invariant", "sigma_identity", "fg", "h_floor",
                 "h_count_brute"):
        assert small_chain.checks[name], name
    assert small_chain.count_f == pytest.approx(0.125 * 1009 ** 2)
    assert small_chain.count_f >= small_chain.count_g
    assert small_chain.h_floor <= small_chain.count_h * (1 + 1e-6) + 1e-6
    assert small_chain.count_h_brute == pytest.approx(small_chain.count_h, rel=1e-6)
    assert small_chain.g_mass == pytest.approx(0.5 * 91)
    assert any("overrides" in w for w in small_chain.warnings)
    assert set(small_chain.timings_ms) == {"hypothesis", "separation-search", "m1-search",
                                           "g-build", "h-build", "counting"}


def test_small_chain_report_dict(small_chain):
    plan = small_chain.plan
    report = small_chain.to_dict()
    assert report["passed"] is True
    assert report["plan"]["M"] == plan.M


def test_tuple_form_on_small_plan(small_chain):
    holds, examined = check_tuple_form(small_chain.plan.split, small_chain.plan.Xc, AP)
    assert holds
    assert examined >= 1


def test_build_g_constant_one(small_chain):
    built = build_g(CyclicFunction.constant(1009, 1.0), small_chain.plan)
    assert built.g.values.sum() == pytest.approx(91, rel=1e-9)
    assert all(built.checks.values())


def test_build_g_rejects_without_overrides(small_chain):
    plan = replace(small_chain.plan, overrides=Overrides())
    with pytest.raises(PlanRejectedError):
        build_g(CyclicFunction.constant(1009, 0.5), plan)


def test_build_g_rejects_wide_window(small_chain):
    plan = replace(small_chain.plan, I_half=200)
    with pytest.raises(PlanRejectedError):
        build_g(CyclicFunction.constant(1009, 0.5), plan)


def test_plan_round_trip_reruns(small_chain):
    plan = TransferPlan.from_dict(small_chain.plan.to_dict())
    assert plan == small_chain.plan
    again = run_chain(CyclicFunction.constant(1009, 0.5), AP, 0.1, 3, plan=plan)
    assert again.count_h == pytest.approx(small_chain.count_h, rel=1e-12)
    assert again.passed


def test_tampered_plan_is_rejected(small_chain):
    plan = replace(small_chain.plan, Xc=(0, 1))
    with pytest.raises(StageError) as info:
        run_chain(CyclicFunction.constant(1009, 0.5), AP, 0.1, 3, plan=plan)
    assert info.value.stage == "separation-search"
    assert isinstance(info.value.cause, PlanRejectedError)


def test_malformed_plan_dict():
    with pytest.raises(InvalidArgumentError):
        TransferPlan.from_dict({"N": 5})


def test_chain_needs_prime_modulus():
    with pytest.raises(StageError) as info:
        run_chain(CyclicFunction.constant(1000, 0.5), AP, 0.1, 3, SMALL_OVERRIDES)
    assert info.value.stage == "hypothesis"
    assert is_input_error(info.value)


def test_chain_rejects_failed_hypothesis():
    f = CyclicFunction.indicator(1009, range(500))
    with pytest.raises(StageError) as info:
        run_chain(f, AP, 0.1, 3, SMALL_OVERRIDES)
    assert isinstance(info.value.cause, PlanRejectedError)
    assert not is_input_error(info.value)


def test_overrides_parse():
    assert Overrides.parse("i_scale=0.03, band_scale=0.3") == Overrides(i_scale=0.03, band_scale=0.3)
    assert not Overrides.parse(None).active
    for text in ("size=2", "i_scale", "i_scale=abc", "i_scale=-1"):
        with pytest.raises(InvalidArgumentError):
            Overrides.parse(text)


@pytest.mark.slow
def test_trigonometric_demo_chain():
    f = trigonometric_density(4999, pairs=1, amplitude=0.05, theta=0.5, seed=0)
    overrides = Overrides(i_scale=0.03, band_scale=0.3, sep_scale=0.25)
    report = run_chain(f, AP, 0.1, 3, overrides)
    plan = report.plan
    assert plan.m2 == 13
    assert 498 <= plan.m1 <= 995
    assert plan.I_half == 134 and plan.L == 9
    assert report.passed, [k for k, ok in report.checks.items() if not ok]
    assert report.checks["fg"] and report.checks["h_floor"]
    assert report.metrics["xc_size"] == len(plan.Xc)


def exact_bad_fraction(b_set, coeffs, N, k, epsilon, m2, sep_scale):
    """Fraction of m1 in J with some ||m1 (a_u b_i - a_v b_j) / N|| <= k^{4 eps}/m2, in rationals."""
    lo, hi = m1_interval(N, k, epsilon)
    tau = Fraction(k ** (4 * epsilon) / m2 * sep_scale)
    diffs = {au * bi - av * bj for au in coeffs for av in coeffs for bi in b_set for bj in b_set}
    diffs = [x for x in diffs if x % N]
    bad = sum(1 for m1 in range(lo, hi + 1)
              if any(mod_norm(Fraction(m1 * x, N)) <= tau for x in diffs))
    return Fraction(bad, hi - lo + 1)


@pytest.mark.parametrize("seed", range(3))
def test_separation_search_exact_recheck(seed):
    N, k, epsilon, sep_scale = 4999, 3, 0.1, 0.1
    s = sort_spectrum(random_density(N, seed))
    m2 = choose_m2(k, epsilon)
    q = separation_search(s, AP, k, epsilon, m2, sep_scale)
    b_set = [(q * b) % N for b in s.frequencies[:k].tolist()]
    exact = exact_bad_fraction(b_set, AP.coeffs, N, k, epsilon, m2, sep_scale)
    assert exact <= Fraction(1, k * k)
    assert float(exact) == pytest.approx(separation_fraction(b_set, AP, N, k, epsilon, m2, sep_scale))
    for earlier in range(1, q):
        if math.gcd(earlier, N) == 1:
            dilated = [(earlier * b) % N for b in s.frequencies[:k].tolist()]
            assert separation_fraction(dilated, AP, N, k, epsilon, m2, sep_scale) > k ** -2
