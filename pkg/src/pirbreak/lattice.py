"""Integer lattices: q-ary bases, LLL reduction, Kannan embedding, CVP.

Basis vectors are kept as tuples of Python ints, so entries of any size are
exact.  LLL runs in layers:

* a compiled int64 kernel with float64 Gram-Schmidt for entries below
  2**62 (see ``_lll_kernel`` for how it copes with wider intermediates);
* a numpy variant over Python-int vectors (float64 or long double
  Gram-Schmidt) for wider entries or when the kernel bails out;
* an exact check of the result (integral Gram-Schmidt, no floats), falling
  back to the fully integral LLL when the check fails.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import _lll_kernel as _kernel
from .errors import InstanceTooLarge, NoEmbeddingVector, PrecisionFailure
from .zpmat import ZpMatrix, rref

DEFAULT_DELTA = 0.99
# Size-reduction slack accepted by the exact certificate.
MU_SLACK = Fraction(1, 1 << 30)


@dataclass(frozen=True)
class LatticeBasis:
    """Square basis; ``vectors[i]`` is the i-th basis vector (a column of B)."""

    vectors: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        vecs = tuple(tuple(int(x) for x in v) for v in self.vectors)
        object.__setattr__(self, "vectors", vecs)
        if any(len(v) != len(vecs) for v in vecs):
            raise ValueError("basis must be square")

    @classmethod
    def from_columns(cls, matrix: Sequence[Sequence[int]]) -> "LatticeBasis":
        return cls(tuple(zip(*matrix)))

    @property
    def dim(self) -> int:
        return len(self.vectors)

    def columns(self) -> list[list[int]]:
        """The basis as a matrix whose columns are the basis vectors."""
        return [list(row) for row in zip(*self.vectors)]

    def determinant(self) -> int:
        return det_exact([list(v) for v in self.vectors])

    def norms_squared(self) -> list[int]:
        return [sum(x * x for x in v) for v in self.vectors]

    def contains(self, v: Sequence[int]) -> bool:
        return lattice_coordinates(self, v) is not None

    def to_json(self) -> dict:
        d = self.dim
        return {
            "rows": d,
            "cols": d,
            "modulus": None,
            "data": [str(x) for row in self.columns() for x in row],
        }


@dataclass(frozen=True)
class TargetVector:
    coords: tuple[int, ...]
    spike_pos: int  # 1-based
    spike_val: int

    @property
    def dim(self) -> int:
        return len(self.coords)


@dataclass(frozen=True)
class CvpCandidate:
    closest: tuple[int, ...]
    offset: tuple[int, ...]
    embed_last: int

    def distance_squared(self) -> int:
        return sum(x * x for x in self.offset)


def det_exact(rows: list[list[int]]) -> int:
    """Determinant by fraction-free (Bareiss) elimination."""
    m = [list(r) for r in rows]
    n = len(m)
    if n == 0:
        return 1
    sign, prev = 1, 1
    for k in range(n - 1):
        if m[k][k] == 0:
            for i in range(k + 1, n):
                if m[i][k] != 0:
                    m[k], m[i] = m[i], m[k]
                    sign = -sign
                    break
            else:
                return 0
        akk = m[k][k]
        for i in range(k + 1, n):
            aik = m[i][k]
            row_i, row_k = m[i], m[k]
            for j in range(k + 1, n):
                row_i[j] = (row_i[j] * akk - aik * row_k[j]) // prev
        prev = akk
    return sign * m[n - 1][n - 1]


def lattice_coordinates(basis: LatticeBasis, v: Sequence[int]) -> list[int] | None:
    """Integer x with sum x_i b_i = v, or None if v is not in the lattice."""
    d = basis.dim
    if len(v) != d:
        raise ValueError("vector dimension does not match the basis")
    # Solve columns() x = v over Q.
    aug = [[Fraction(c) for c in row] + [Fraction(int(t))] for row, t in zip(basis.columns(), v)]
    for c in range(d):
        piv = next((r for r in range(c, d) if aug[r][c] != 0), None)
        if piv is None:
            raise ValueError("basis is singular")
        aug[c], aug[piv] = aug[piv], aug[c]
        inv = 1 / aug[c][c]
        aug[c] = [x * inv for x in aug[c]]
        for r in range(d):
            if r != c and aug[r][c] != 0:
                f = aug[r][c]
                aug[r] = [a - f * b for a, b in zip(aug[r], aug[c])]
    x = [aug[r][d] for r in range(d)]
    if any(xi.denominator != 1 for xi in x):
        return None
    return [int(xi) for xi in x]


# -- q-ary bases -----------------------------------------------------------

def qary_square_basis(G: ZpMatrix, p: int | None = None) -> LatticeBasis:
    """Square basis of ``{y in Z^d : y = G x mod p}``.

    The column space of ``G`` mod p is put in reduced echelon form; its rows,
    together with ``p e_v`` for every non-pivot coordinate ``v``, form the
    Hermite normal form of the generator set ``(G | p I_d)``.  The ``p e_v``
    vectors come first, which suits LLL.
    """
    p = G.p if p is None else p
    if p != G.p:
        raise ValueError("modulus mismatch")
    d = G.rows
    if G.cols == 0:
        pivots: list[int] = []
        ech = np.zeros((0, d), dtype=object)
    else:
        ech, pivots = rref(ZpMatrix._trusted(G.data.T.copy(), G.field))
    pivot_set = set(pivots)
    vectors = []
    for v in range(d):
        if v not in pivot_set:
            e = [0] * d
            e[v] = p
            vectors.append(tuple(e))
    for r in range(len(pivots)):
        vectors.append(tuple(int(x) for x in ech[r]))
    return LatticeBasis(tuple(vectors))


# -- exact Gram-Schmidt -----------------------------------------------------

def _integral_gso(b: list[list[int]]) -> tuple[list[int], list[list[int]]]:
    """Return ``(dd, lam)``: dd[i] is the Gram determinant of the first i
    vectors (dd[0] = 1), lam[k][j] = dd[j+1] * mu[k][j]; all exact integers."""
    d = len(b)
    dd = [1] + [0] * d
    lam = [[0] * d for _ in range(d)]
    for k in range(d):
        bk = b[k]
        for j in range(k + 1):
            u = sum(x * y for x, y in zip(bk, b[j]))
            lk, lj = lam[k], lam[j]
            for i in range(j):
                u = (dd[i + 1] * u - lk[i] * lj[i]) // dd[i]
            if j < k:
                lk[j] = u
            else:
                if u == 0:
                    raise ValueError("basis vectors are linearly dependent")
                dd[k + 1] = u
    return dd, lam


def _as_fraction(delta) -> Fraction:
    return Fraction(delta).limit_denominator(1 << 40) if isinstance(delta, float) else Fraction(delta)


def lll_certificate(basis: LatticeBasis, delta=DEFAULT_DELTA, mu_slack: Fraction = MU_SLACK) -> list[str]:
    """Exact check of size reduction and the Lovász condition.

    Returns a list of violations; an empty list certifies the basis.
    """
    b = [list(v) for v in basis.vectors]
    dd, lam = _integral_gso(b)
    dl = _as_fraction(delta)
    bound = Fraction(1, 2) + mu_slack
    problems = []
    for k in range(1, len(b)):
        for j in range(k):
            if abs(Fraction(lam[k][j], dd[j + 1])) > bound:
                problems.append(f"|mu[{k}][{j}]| > {float(bound)}")
        lhs = dl.numerator * dd[k] ** 2
        rhs = dl.denominator * (dd[k + 1] * dd[k - 1] + lam[k][k - 1] ** 2)
        if lhs > rhs:
            problems.append(f"Lovasz condition fails at {k}")
    return problems


# -- LLL --------------------------------------------------------------------

def _lll_exact(b: list[list[int]], delta: Fraction) -> list[list[int]]:
    """Integral LLL (de Weger / Cohen); every quantity is an exact integer."""
    d = len(b)
    b = [list(v) for v in b]
    if d <= 1:
        return b
    dn, dden = delta.numerator, delta.denominator
    dd = [1] + [0] * d
    lam = [[0] * d for _ in range(d)]

    def gso_row(k):
        for j in range(k + 1):
            u = sum(x * y for x, y in zip(b[k], b[j]))
            for i in range(j):
                u = (dd[i + 1] * u - lam[k][i] * lam[j][i]) // dd[i]
            if j < k:
                lam[k][j] = u
            else:
                if u == 0:
                    raise ValueError("basis vectors are linearly dependent")
                dd[k + 1] = u

    def red(k, l):
        den = dd[l + 1]
        if 2 * abs(lam[k][l]) > den:
            r = (2 * lam[k][l] + den) // (2 * den)
            bl = b[l]
            b[k] = [x - r * y for x, y in zip(b[k], bl)]
            lam[k][l] -= r * den
            for i in range(l):
                lam[k][i] -= r * lam[l][i]

    gso_row(0)
    k, kmax = 1, 0
    while k < d:
        if k > kmax:
            kmax = k
            gso_row(k)
        red(k, k - 1)
        lk = lam[k][k - 1]
        if dn * dd[k] ** 2 > dden * (dd[k + 1] * dd[k - 1] + lk * lk):
            b[k], b[k - 1] = b[k - 1], b[k]
            for j in range(k - 1):
                lam[k][j], lam[k - 1][j] = lam[k - 1][j], lam[k][j]
            B = (dd[k - 1] * dd[k + 1] + lk * lk) // dd[k]
            for i in range(k + 1, kmax + 1):
                t = lam[i][k]
                lam[i][k] = (dd[k + 1] * lam[i][k - 1] - lk * t) // dd[k]
                lam[i][k - 1] = (B * t + lk * lam[i][k]) // dd[k + 1]
            dd[k] = B
            k = max(1, k - 1)
        else:
            for l in range(k - 2, -1, -1):
                red(k, l)
            k += 1
    return b


_ETA = 0.5 + 2.0 ** -32
_MAX_PASSES = 64
# Entries up to this many bits are exact in float64; wider ones use long double.
_FLOAT64_BITS = 50


def _lll_float(rows: list[list[int]], delta: float) -> list[list[int]]:
    """Schnorr-Euchner LLL with floating Gram-Schmidt on exact integer vectors.

    The orthogonalised vectors b*_j are kept explicitly (classical
    Gram-Schmidt with one re-orthogonalisation pass).  Deriving them from
    the Gram matrix instead would cancel catastrophically on q-ary bases,
    where |b_k|^2 ~ p^2 but |b*_k|^2 ~ 1.
    """
    d = len(rows)
    if d <= 1:
        return [list(v) for v in rows]
    b = np.array(rows, dtype=object).reshape(d, -1)
    bits = max(abs(int(x)) for x in b.ravel()).bit_length()
    ftype = np.float64 if bits <= _FLOAT64_BITS else np.longdouble
    m = b.shape[1]
    bs = np.zeros((d, m), dtype=ftype)
    c = np.zeros(d, dtype=ftype)
    mu = np.zeros((d, d), dtype=ftype)

    def to_float(row):
        return np.array([float(x) if abs(x) >> 62 else x for x in row], dtype=ftype)

    def gso_row(k):
        v = to_float(b[k])
        basis = bs[:k]
        coef = (basis @ v) / c[:k]
        w = v - coef @ basis
        corr = (basis @ w) / c[:k]
        w -= corr @ basis
        mu[k, :k] = coef + corr
        bs[k] = w
        c[k] = w @ w
        if not c[k] > 0 or not np.isfinite(c[k]):
            raise PrecisionFailure(f"degenerate Gram-Schmidt vector at index {k}")

    gso_row(0)
    k = 1
    iterations = 0
    limit = 50 * d * d * max(1, bits)
    while k < d:
        iterations += 1
        if iterations > limit:
            raise PrecisionFailure("floating LLL did not terminate")
        for _ in range(_MAX_PASSES):
            gso_row(k)
            if np.max(np.abs(mu[k, :k])) <= _ETA:
                break
            for j in range(k - 1, -1, -1):
                x = int(np.rint(mu[k, j]))
                if x == 0:
                    continue
                b[k] = b[k] - x * b[j]
                mu[k, :j] -= ftype(x) * mu[j, :j]
                mu[k, j] -= x
        else:
            raise PrecisionFailure(f"size reduction of vector {k} does not converge")
        if delta * c[k - 1] > c[k] + mu[k, k - 1] ** 2 * c[k - 1]:
            b[[k - 1, k]] = b[[k, k - 1]]
            k = max(k - 1, 1)
            if k == 1:
                gso_row(0)
        else:
            k += 1
    return [[int(x) for x in row] for row in b]


def _lll_fast(rows: list[list[int]], delta: float) -> list[list[int]]:
    d = len(rows)
    if d > 1 and max(abs(x) for row in rows for x in row) < _kernel.ENTRY_LIMIT:
        arr = np.array(rows, dtype=np.int64)
        limit = 50 * d * d * 64
        status = _kernel.lll_int64(arr, delta, _ETA, _MAX_PASSES, limit)
        if status == _kernel.OK:
            return arr.tolist()
        if status == _kernel.PRECISION:
            # Still a basis of the same lattice; continue from there.
            rows = arr.tolist()
    return _lll_float(rows, delta)


def lll_reduce(basis: LatticeBasis, delta: float = DEFAULT_DELTA, mode: str = "auto") -> LatticeBasis:
    """LLL-reduce ``basis`` with Lovász parameter ``delta``.

    ``mode="auto"`` runs the floating variant and certifies it exactly,
    falling back to integral LLL if certification fails.  ``"float"``
    raises :class:`PrecisionFailure` instead of falling back; ``"exact"``
    skips floating point altogether.
    """
    if not 0.25 < delta < 1:
        raise ValueError(f"delta must lie in (0.25, 1), got {delta}")
    if mode not in ("auto", "float", "exact"):
        raise ValueError(f"unknown mode {mode!r}")
    rows = [list(v) for v in basis.vectors]
    exact_delta = _as_fraction(delta)
    if mode == "exact":
        return LatticeBasis(tuple(map(tuple, _lll_exact(rows, exact_delta))))
    # A hair above delta so the exact certificate has room to spare.
    float_delta = min(delta + 2.0 ** -24, 0.5 * (1 + delta))
    try:
        reduced = _lll_fast(rows, float_delta)
        out = LatticeBasis(tuple(map(tuple, reduced)))
        problems = lll_certificate(out, exact_delta)
        if not problems:
            return out
        if mode == "float":
            raise PrecisionFailure("; ".join(problems[:3]))
        rows = reduced
    except PrecisionFailure:
        if mode == "float":
            raise
    return LatticeBasis(tuple(map(tuple, _lll_exact(rows, exact_delta))))


# -- embedding and CVP ------------------------------------------------------

def make_target(dim: int, positions: dict[int, int]) -> tuple[int, ...]:
    t = [0] * dim
    for pos, val in positions.items():
        t[pos - 1] = val
    return tuple(t)


def kannan_embed(S: LatticeBasis, t: Sequence[int] | TargetVector, M: int = 1) -> LatticeBasis:
    """Basis of the lattice generated by ``(S t; 0 M)``."""
    coords = t.coords if isinstance(t, TargetVector) else tuple(int(x) for x in t)
    if len(coords) != S.dim:
        raise ValueError(f"target has dimension {len(coords)}, basis {S.dim}")
    if M < 1:
        raise ValueError("embedding factor must be positive")
    vecs = [v + (0,) for v in S.vectors]
    vecs.append(coords + (int(M),))
    return LatticeBasis(tuple(vecs))


def cvp_via_embedding(
    S: LatticeBasis,
    t: Sequence[int] | TargetVector,
    M: int = 1,
    delta: float = DEFAULT_DELTA,
) -> CvpCandidate:
    """Approximate closest vector to ``t`` in L(S) by Kannan's embedding.

    ``S`` should already be LLL-reduced; only the appended target column
    then needs real work.  Among reduced vectors whose last coordinate is
    ``+-M`` the shortest is taken (ties: earliest in the basis).
    """
    coords = t.coords if isinstance(t, TargetVector) else tuple(int(x) for x in t)
    reduced = lll_reduce(kannan_embed(S, coords, M), delta)
    best = None
    for idx, v in enumerate(reduced.vectors):
        if abs(v[-1]) != M:
            continue
        norm = sum(x * x for x in v)
        if best is None or norm < best[0]:
            best = (norm, idx, v)
    if best is None:
        raise NoEmbeddingVector(f"no reduced vector has last coordinate +-{M}")
    v = best[2]
    if v[-1] < 0:
        v = tuple(-x for x in v)
    e = v[:-1]
    closest = tuple(ti - ei for ti, ei in zip(coords, e))
    return CvpCandidate(closest=closest, offset=tuple(e), embed_last=v[-1])


_BRUTE_MAX_COSETS = 10 ** 6
_BRUTE_MAX_DIM = 6


def cvp_bruteforce(G: ZpMatrix, p: int, t: Sequence[int]) -> tuple[int, ...]:
    """Exact closest vector to ``t`` in ``{y : y = G x mod p}``.

    Enumerates every residue class ``G x mod p``; within a class the
    distance separates by coordinate, so each coordinate independently takes
    the nearest representative (the smaller one on a tie).  Across classes
    ties go to the lexicographically smallest vector.
    """
    d, m = G.rows, G.cols
    if len(t) != d:
        raise ValueError("target dimension mismatch")
    if d > _BRUTE_MAX_DIM or p ** m > _BRUTE_MAX_COSETS:
        raise InstanceTooLarge(f"d={d}, p^m={p ** m} exceed brute-force limits")
    g = G.data.tolist()
    t = [int(x) for x in t]
    best = None
    seen = set()
    for x in itertools.product(range(p), repeat=m):
        y = tuple(sum(g[r][c] * x[c] for c in range(m)) % p for r in range(d))
        if y in seen:
            continue
        seen.add(y)
        vec = []
        for yv, tv in zip(y, t):
            base = yv + p * ((tv - yv) // p)  # largest representative <= tv
            lo_gap, hi_gap = tv - base, base + p - tv
            vec.append(base if lo_gap <= hi_gap else base + p)
        dist = sum((a - b) ** 2 for a, b in zip(vec, t))
        key = (dist, tuple(vec))
        if best is None or key < best:
            best = key
    return best[1]
