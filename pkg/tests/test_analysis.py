import itertools
import math

import mpmath
import pytest

from pirbreak.analysis import (
    ComplexityEstimate,
    cvp_count_avg,
    cvp_count_exact,
    cvp_count_worst,
    l_max_bound,
    l_max_bound_mp,
    log_sphere_point_estimate,
    simulate_cvp_counts,
    sphere_point_estimate,
    sphere_point_estimate_mp,
    success_probability,
    success_probability_mp,
    theorem_bound_check,
)

BIG_P = 2**60 + 325


def lattice_points_in_ball(R, d):
    r = int(math.floor(R))
    return sum(
        1 for v in itertools.product(range(-r, r + 1), repeat=d) if sum(x * x for x in v) <= R * R
    )


def test_sphere_estimate_unit_ball():
    assert sphere_point_estimate(1, 4) == pytest.approx(math.pi**2 / 2, rel=1e-14)
    # exact count is 9: the origin plus the 8 unit vectors
    assert lattice_points_in_ball(1, 4) == 9


def test_sphere_estimate_radius_ten_against_enumeration():
    est = sphere_point_estimate(10, 4)
    assert est == pytest.approx(49348.022, rel=1e-6)
    exact = lattice_points_in_ball(10, 4)
    assert abs(est - exact) / exact < 0.02


def test_sphere_estimate_limits():
    assert sphere_point_estimate(0, 6) == 0.0
    assert sphere_point_estimate(1e-9, 6) < 1e-50
    with pytest.raises(ValueError):
        sphere_point_estimate(1, 3)
    with pytest.raises(ValueError):
        sphere_point_estimate(-1, 5)


@pytest.mark.parametrize("R, d", [(1.5, 4), (3.0, 10), (17.2, 30), (400.0, 150)])
def test_log_sphere_against_mpmath(R, d):
    ref = mpmath.log(sphere_point_estimate_mp(R, d))
    assert log_sphere_point_estimate(R, d) == pytest.approx(float(ref), rel=1e-10)


def test_l_max_reference_value():
    b = l_max_bound(BIG_P, 50)
    assert b.simple_form == pytest.approx(2.12e10, rel=0.05)
    assert b.exact_form == pytest.approx(2.12e10, rel=0.05)


@pytest.mark.parametrize("p, N", [(BIG_P, 50), (5, 2), (2**37 + 9, 10), (1009, 500)])
def test_l_max_against_mpmath(p, N):
    a, b = l_max_bound(p, N), l_max_bound_mp(p, N)
    assert a.exact_form == pytest.approx(b.exact_form, rel=1e-10)
    assert a.simple_form == pytest.approx(b.simple_form, rel=1e-10)


def test_l_max_forms_converge():
    b = l_max_bound(BIG_P, 500)
    assert b.exact_form / b.simple_form < 1.1
    assert b.exact_form > b.simple_form


def test_l_max_desk_scale():
    b = l_max_bound(68719476767, 50)
    assert math.isfinite(b.exact_form) and b.exact_form > 1e4


def test_success_probability_reference_value():
    log_bound, failure = success_probability(BIG_P, 50)
    assert failure == pytest.approx(7.52e-37, rel=0.01)
    assert log_bound == pytest.approx(-failure, rel=1e-12)


@pytest.mark.parametrize("p, N", [(5, 2), (7, 3), (BIG_P, 50), (101, 2)])
def test_success_probability_against_mpmath(p, N):
    a = success_probability(p, N)
    b = success_probability_mp(p, N)
    assert a[0] == pytest.approx(b[0], rel=1e-14)
    assert a[1] == pytest.approx(b[1], rel=1e-14)


@pytest.mark.parametrize("p, N", [(5, 2), (1009, 3), (BIG_P, 50)])
def test_failure_close_to_inverse_square(p, N):
    _, failure = success_probability(p, N)
    # 1 - exp(-x) lies in (x - x^2/2, x] for x = p^-2 / (1 - p^-3N)
    x = p**-2.0 / (1 - p ** (-3.0 * N))
    assert x - x * x / 2 - 1e-300 <= failure <= x * (1 + 1e-15)


def test_argument_checks():
    with pytest.raises(ValueError):
        l_max_bound(2, 10)
    with pytest.raises(ValueError):
        success_probability(5, 1)
    with pytest.raises(ValueError):
        theorem_bound_check(5, 4, 0)


def test_theorem_bound_examples():
    assert theorem_bound_check(BIG_P, 50, 1667)
    assert theorem_bound_check(2**37 + 9, 10, 10)
    lmax = l_max_bound(BIG_P, 50).exact_form
    assert theorem_bound_check(BIG_P, 50, int(lmax * 0.99))
    assert not theorem_bound_check(BIG_P, 50, int(lmax * 1.01))


def test_theorem_bound_monotone():
    p, N = 2**31 - 1, 8
    lmax = l_max_bound(p, N).exact_form
    grid = sorted({max(1, int(lmax * f / 100)) for f in range(1, 300, 3)})
    results = [theorem_bound_check(p, N, l) for l in grid]
    first_false = results.index(False)
    assert all(results[:first_false]) and not any(results[first_false:])


def test_cvp_formulas():
    assert cvp_count_worst(100, 6) == pytest.approx(15.17, abs=0.05)
    assert cvp_count_avg(100, 6) == pytest.approx(9.40, abs=0.05)
    assert cvp_count_worst(10000, 6) == pytest.approx(35.1, abs=0.05)
    assert cvp_count_worst(6, 6) == cvp_count_avg(6, 6) == 3.0
    with pytest.raises(ValueError):
        cvp_count_worst(5, 6)
    with pytest.raises(ValueError):
        cvp_count_avg(10, 2)


def test_cvp_formulas_monotone():
    for t in (3, 6, 10):
        w = [cvp_count_worst(n, t) for n in range(t, 3000)]
        a = [cvp_count_avg(n, t) for n in range(t, 3000)]
        assert all(x <= y for x, y in zip(w, w[1:]))
        assert all(x <= y for x, y in zip(a, a[1:]))


def test_simulated_reference_points():
    assert simulate_cvp_counts(100, 6).worst_exact == 16
    assert simulate_cvp_counts(1000, 6, "average").avg_exact == pytest.approx(14.512, abs=1e-9)
    assert simulate_cvp_counts(10050, 6).worst_exact == 36
    est = simulate_cvp_counts(100, 6, "average")
    assert est.exact == est.avg_exact == pytest.approx(9.58, abs=1e-9)


def test_simulated_no_preprocessing_at_threshold():
    for i0 in range(1, 7):
        assert cvp_count_exact(6, 6, i0, final_charge="none") == 0


def test_average_is_mean_over_planted_indices():
    for n in (7, 50, 137, 400):
        for charge in ("full", "half", "position"):
            mean = sum(cvp_count_exact(n, 6, i, charge) for i in range(1, n + 1)) / n
            est = simulate_cvp_counts(n, 6, "average", final_charge=charge)
            assert est.avg_exact == pytest.approx(mean, rel=1e-12)


def test_worst_is_planted_last():
    assert simulate_cvp_counts(100, 6).worst_exact == cvp_count_exact(100, 6, 100)
    # hand trace at n = 100: 100 -> 49 -> 22 -> 10 -> 4, three probes each, then 4
    assert cvp_count_exact(100, 6, 100) == 16


def test_average_never_exceeds_worst():
    for t in (3, 6):
        for n in range(1, 800, 3):
            est = simulate_cvp_counts(n, t)
            assert est.avg_exact <= est.worst_exact + 1e-12


def test_simulate_small_n_has_no_formula():
    est = simulate_cvp_counts(4, 6)
    assert est.worst_approx is None and est.worst_exact == 4
    assert isinstance(est, ComplexityEstimate)
    with pytest.raises(ValueError):
        simulate_cvp_counts(0, 6)
    with pytest.raises(ValueError):
        simulate_cvp_counts(10, 6, "best")
    with pytest.raises(ValueError):
        cvp_count_exact(10, 6, 11)
    with pytest.raises(ValueError):
        cvp_count_exact(10, 6, 1, final_charge="free")
