"""Closed-form bounds and CVP-count models for the two-stage attack.

Everything that involves ``p**(3N)`` or a large Gamma value is evaluated in
natural-log space.  The ``*_mp`` variants repeat the computation with
mpmath at high precision and serve as a cross-check.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from functools import lru_cache

FINAL_CHARGES = ("full", "half", "position", "none")


def _check_sphere_args(R: float, d: int):
    if d < 4:
        raise ValueError(f"the volume approximation needs d >= 4, got {d}")
    if R < 0:
        raise ValueError(f"radius must be non-negative, got {R}")


def log_sphere_point_estimate(R: float, d: int) -> float:
    """``ln`` of the volume of the ``d``-ball of radius ``R``."""
    _check_sphere_args(R, d)
    if R == 0:
        return -math.inf
    return 0.5 * d * math.log(math.pi) - math.lgamma(0.5 * d + 1) + d * math.log(R)


def sphere_point_estimate(R: float, d: int) -> float:
    """Approximate count of integer points in the closed ``d``-ball of radius
    ``R``: ``pi^(d/2) / Gamma(d/2 + 1) * R^d``.

    The error is of order ``R^(d-2)`` and large for small radii (the unit
    ball in Z^4 holds 9 points against an estimate of 4.93).
    """
    return math.exp(log_sphere_point_estimate(R, d))


@dataclass(frozen=True)
class LmaxBound:
    exact_form: float
    simple_form: float


def _check_pn(p: int, N: int):
    if p < 3:
        raise ValueError(f"p must be at least 3, got {p}")
    if N < 2:
        raise ValueError(f"N must be at least 2, got {N}")


def l_max_bound(p: int, N: int) -> LmaxBound:
    """Largest summand count ``l`` for which the ball of radius
    ``sqrt(3 l N)`` in dimension ``3N`` stays below ``p^(N-2)`` points.

    ``exact_form`` keeps the Gamma factor; ``simple_form`` replaces
    ``Gamma(x+1)^(1/x) / x`` by its limit ``1/e``.
    """
    _check_pn(p, N)
    x = 1.5 * N
    log_pow = (2.0 / 3.0) * (1 - 2.0 / N) * math.log(p)
    log_exact = math.lgamma(x + 1) / x - math.log(3 * N * math.pi) + log_pow
    log_simple = -math.log(2 * math.pi * math.e) + log_pow
    return LmaxBound(math.exp(log_exact), math.exp(log_simple))


def success_probability(p: int, N: int) -> tuple[float, float]:
    """Lower bound ``exp(-p^-2 * p^3N / (p^3N - 1))`` on the chance that the
    spike column is the unique closest vector.

    Returns ``(log of the bound, 1 - bound)``; the complement is computed
    with ``expm1`` since ``1 - bound`` cancels completely in floats.
    """
    _check_pn(p, N)
    inv_p3n = math.exp(-3 * N * math.log(p))
    log_bound = -(p ** -2.0) / (1 - inv_p3n)
    return log_bound, -math.expm1(log_bound)


def theorem_bound_check(p: int, N: int, l: int) -> bool:
    """Is the point count of the ``sqrt(3 l N)`` ball in dimension ``3N``
    at most ``p^(N-2)``?"""
    if l < 1:
        raise ValueError(f"l must be positive, got {l}")
    _check_pn(p, N)
    return log_sphere_point_estimate(math.sqrt(3 * l * N), 3 * N) <= (N - 2) * math.log(p)


# -- high-precision reference path ------------------------------------------

def sphere_point_estimate_mp(R, d: int, dps: int = 50):
    import mpmath

    _check_sphere_args(float(R), d)
    with mpmath.workdps(dps):
        return mpmath.pi ** (mpmath.mpf(d) / 2) / mpmath.gamma(mpmath.mpf(d) / 2 + 1) * mpmath.mpf(R) ** d


def l_max_bound_mp(p: int, N: int, dps: int = 50) -> LmaxBound:
    import mpmath

    _check_pn(p, N)
    with mpmath.workdps(dps):
        x = mpmath.mpf(3 * N) / 2
        power = mpmath.power(p, mpmath.mpf(2) / 3 * (1 - mpmath.mpf(2) / N))
        exact = mpmath.gamma(x + 1) ** (1 / x) / (3 * N * mpmath.pi) * power
        simple = power / (2 * mpmath.pi * mpmath.e)
        return LmaxBound(float(exact), float(simple))


def success_probability_mp(p: int, N: int, dps: int = 80) -> tuple[float, float]:
    import mpmath

    _check_pn(p, N)
    with mpmath.workdps(dps):
        p3n = mpmath.power(p, 3 * N)
        log_bound = -mpmath.power(p, -2) * p3n / (p3n - 1)
        return float(log_bound), float(1 - mpmath.exp(log_bound))


# -- CVP counts ---------------------------------------------------------------

def _check_nt(n: int, t: int):
    if t < 3:
        raise ValueError(f"threshold must be at least 3, got {t}")
    if n < t:
        raise ValueError(f"n must be at least t ({t}), got {n}")


def cvp_count_worst(n: int, t: int = 6) -> float:
    _check_nt(n, t)
    return 3 * (math.log(n) - math.log(t)) / math.log(2) + 0.5 * t


def cvp_count_avg(n: int, t: int = 6) -> float:
    _check_nt(n, t)
    return 2.5 * (math.log(n) - math.log(t)) / math.log(3) + 0.5 * t


def _split_sizes(m: int) -> tuple[int, int]:
    # Mirrors attack_fast.split_blocks: (l, |part2|).
    l = -(-m // 6)
    if 3 * l > m:
        l = m // 3
    return l, m - 3 * l


def _final_cost(m: int, pos: int, charge: str) -> float:
    if charge == "full":
        return m
    if charge == "half":
        return m / 2
    if charge == "none":
        return 0
    return pos


def cvp_count_exact(n: int, t: int, i0: int, final_charge: str = "full") -> float:
    """Probe count of the two-stage attack for a planted index ``i0``,
    assuming every CVP answers exactly.

    A matched sub-block ``a`` costs ``a`` probes, an unmatched iteration
    three.  The windowed stage on ``m`` survivors is charged ``m``
    (``"full"``), ``m/2`` (``"half"``) or the survivor's position
    (``"position"``, one CVP per window until the match); ``"none"``
    counts the elimination probes alone.
    """
    if final_charge not in FINAL_CHARGES:
        raise ValueError(f"unknown final charge {final_charge!r}")
    if not 1 <= i0 <= n:
        raise ValueError(f"i0 must lie in 1..{n}")
    m, pos, cost = n, i0, 0.0
    while m > t:
        l, r = _split_sizes(m)
        if pos <= 3 * l:
            a = (pos - 1) % 3 + 1
            cost += a
            m, pos = l, (pos - 1) // 3 + 1
        elif r:
            cost += 3
            m, pos = r, pos - 3 * l
        else:  # pragma: no cover - part2 is never empty for m >= 4
            cost += 3
            break
    return cost + _final_cost(m, pos, final_charge)


def _average_exact(n: int, t: int, final_charge: str) -> float:
    @lru_cache(maxsize=None)
    def f(m: int) -> float:
        if m <= t:
            return sum(_final_cost(m, pos, final_charge) for pos in range(1, m + 1)) / m
        l, r = _split_sizes(m)
        total = sum(l * (a + f(l)) for a in (1, 2, 3))
        if r:
            total += r * (3 + f(r))
        return total / m

    return f(n)


@dataclass(frozen=True)
class ComplexityEstimate:
    n: int
    t: int
    worst_approx: float | None
    avg_approx: float | None
    worst_exact: int
    avg_exact: float
    mode: str = "worst"

    @property
    def exact(self) -> float:
        return self.worst_exact if self.mode == "worst" else self.avg_exact

    def to_dict(self) -> dict:
        return asdict(self)


def simulate_cvp_counts(n: int, t: int = 6, mode: str = "worst", final_charge: str = "full") -> ComplexityEstimate:
    """Exact CVP counts from the attack's control flow, next to the
    closed-form approximations.

    The worst case plants the requested file last (it always lands in
    ``part2``); the average is taken over every planted index.
    """
    if mode not in ("worst", "average"):
        raise ValueError(f"mode must be 'worst' or 'average', got {mode!r}")
    if n < 1:
        raise ValueError("n must be positive")
    if t < 3:
        raise ValueError(f"threshold must be at least 3, got {t}")
    worst = cvp_count_exact(n, t, n, final_charge)
    avg = _average_exact(n, t, final_charge)
    approx_ok = n >= t
    return ComplexityEstimate(
        n=n,
        t=t,
        worst_approx=cvp_count_worst(n, t) if approx_ok else None,
        avg_approx=cvp_count_avg(n, t) if approx_ok else None,
        worst_exact=int(math.ceil(worst)),
        avg_exact=avg,
        mode=mode,
    )
