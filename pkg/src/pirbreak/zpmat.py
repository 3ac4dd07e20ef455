"""Exact dense linear algebra over the prime field Z_p.

Matrices are stored as int64 numpy arrays with entries in ``[0, p)``.  The
modulus is capped below 2**62, so every canonical residue fits a signed
64-bit word, but products of two residues do not.  Multiplication therefore
splits each operand into three 21-bit limbs, multiplies limb matrices with
plain int64 arithmetic (no intermediate can exceed 2**63 as long as the inner
dimension is chunked), and recombines the partial products as Python
integers.  Nothing passes through floating point.

Row operations (elimination, inversion) run on object arrays of Python ints,
which keeps them exact without any limb bookkeeping.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .errors import GenerationFailure, SingularMatrix

MAX_MODULUS = 1 << 62

_LIMB_BITS = 21
_LIMB_MASK = (1 << _LIMB_BITS) - 1
# (2**21 - 1)**2 * 2**20 < 2**63, so an int64 limb product never wraps.
_CHUNK = 1 << 20

# Deterministic Miller-Rabin: these bases are exact for all n < 3.3 * 10**24.
_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


@lru_cache(maxsize=256)
def is_prime(n: int) -> bool:
    """Deterministic primality test, exact for every ``n < 2**64``."""
    if n < 2:
        return False
    for b in _MR_BASES:
        if n % b == 0:
            return n == b
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def next_prime(n: int) -> int:
    """Smallest prime strictly greater than ``n``."""
    c = n + 1
    if c <= 2:
        return 2
    if c % 2 == 0:
        c += 1
    while not is_prime(c):
        c += 2
    return c


@dataclass(frozen=True)
class PrimeField:
    p: int

    def __post_init__(self):
        p = int(self.p)
        object.__setattr__(self, "p", p)
        if not 2 < p < MAX_MODULUS:
            raise ValueError(f"modulus must satisfy 2 < p < 2**62, got {p}")
        if not is_prime(p):
            raise ValueError(f"modulus {p} is not prime")

    def inv(self, a: int) -> int:
        a %= self.p
        if a == 0:
            raise ZeroDivisionError("0 has no inverse mod p")
        return pow(a, -1, self.p)


def _as_field(field: PrimeField | int) -> PrimeField:
    return field if isinstance(field, PrimeField) else PrimeField(field)


class ZpMatrix:
    """Immutable matrix over Z_p.

    ``data`` is a read-only int64 array of canonical residues.  Construction
    accepts any integer-like 2-D input (negative values and Python ints
    beyond 64 bits included) and reduces it.
    """

    __slots__ = ("_data", "field")

    def __init__(self, data, field: PrimeField | int):
        field = _as_field(field)
        arr = np.asarray(data)
        if arr.ndim != 2:
            if arr.size == 0:
                arr = arr.reshape(0, 0)
            else:
                raise ValueError(f"expected a 2-D array, got shape {arr.shape}")
        if arr.dtype == object or arr.dtype.kind not in "iu":
            arr = np.array(
                [[int(v) % field.p for v in row] for row in arr.tolist()],
                dtype=np.int64,
            ).reshape(arr.shape)
        else:
            arr = np.mod(arr.astype(np.int64, copy=True), field.p)
        arr.setflags(write=False)
        self._data = arr
        self.field = field

    @classmethod
    def _trusted(cls, arr: np.ndarray, field: PrimeField) -> "ZpMatrix":
        # Skips reduction; caller guarantees canonical int64 residues.
        obj = cls.__new__(cls)
        arr = np.ascontiguousarray(arr, dtype=np.int64)
        arr.setflags(write=False)
        obj._data = arr
        obj.field = field
        return obj

    @classmethod
    def identity(cls, dim: int, field: PrimeField | int) -> "ZpMatrix":
        return cls._trusted(np.eye(dim, dtype=np.int64), _as_field(field))

    @classmethod
    def zeros(cls, rows: int, cols: int, field: PrimeField | int) -> "ZpMatrix":
        return cls._trusted(np.zeros((rows, cols), dtype=np.int64), _as_field(field))

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def p(self) -> int:
        return self.field.p

    @property
    def rows(self) -> int:
        return self._data.shape[0]

    @property
    def cols(self) -> int:
        return self._data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self._data.shape

    def tolist(self) -> list[list[int]]:
        return self._data.tolist()

    def signed(self) -> np.ndarray:
        """Entries as centred residues in ``(-p/2, p/2]`` (int64)."""
        d = self._data
        return np.where(d > self.p // 2, d - self.p, d)

    def __getitem__(self, key) -> "ZpMatrix":
        sub = self._data[key]
        if sub.ndim != 2:
            raise IndexError("ZpMatrix indexing must keep two dimensions")
        return ZpMatrix._trusted(sub.copy(), self.field)

    def _check_same_field(self, other: "ZpMatrix"):
        if self.field.p != other.field.p:
            raise ValueError(f"modulus mismatch: {self.p} vs {other.p}")

    def __add__(self, other: "ZpMatrix") -> "ZpMatrix":
        self._check_same_field(other)
        if self.shape != other.shape:
            raise ValueError(f"shape mismatch: {self.shape} vs {other.shape}")
        # Both operands < 2**62, so the sum stays below 2**63.
        s = self._data + other._data
        s -= self.p * (s >= self.p)
        return ZpMatrix._trusted(s, self.field)

    def __neg__(self) -> "ZpMatrix":
        d = self._data
        return ZpMatrix._trusted(np.where(d == 0, 0, self.p - d), self.field)

    def __sub__(self, other: "ZpMatrix") -> "ZpMatrix":
        return self + (-other)

    def __matmul__(self, other: "ZpMatrix") -> "ZpMatrix":
        return mat_mul(self, other)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ZpMatrix):
            return NotImplemented
        return self.p == other.p and self.shape == other.shape and bool(
            np.array_equal(self._data, other._data)
        )

    def __hash__(self):
        return hash((self.p, self.shape, self._data.tobytes()))

    def __repr__(self) -> str:
        return f"ZpMatrix({self.rows}x{self.cols}, p={self.p})"


def _limbs(a: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    return (
        a & _LIMB_MASK,
        (a >> _LIMB_BITS) & _LIMB_MASK,
        a >> (2 * _LIMB_BITS),
    )


def _mulmod_arrays(a: np.ndarray, b: np.ndarray, p: int) -> np.ndarray:
    rows, inner = a.shape
    cols = b.shape[1]
    if rows == 0 or cols == 0:
        return np.zeros((rows, cols), dtype=np.int64)
    # acc[s] collects the limb products of total degree s, each reduced mod p.
    acc = [np.zeros((rows, cols), dtype=object) for _ in range(5)]
    for start in range(0, inner, _CHUNK):
        stop = min(inner, start + _CHUNK)
        la = _limbs(a[:, start:stop])
        lb = _limbs(b[start:stop, :])
        for i in range(3):
            for j in range(3):
                part = np.matmul(la[i], lb[j]) % p
                acc[i + j] += part.astype(object)
    total = np.zeros((rows, cols), dtype=object)
    for s in range(4, -1, -1):
        total = (total * (1 << _LIMB_BITS) + acc[s]) % p
    return total.astype(np.int64)


def mat_mul(a: ZpMatrix, b: ZpMatrix) -> ZpMatrix:
    """Exact product ``a @ b`` over Z_p."""
    a._check_same_field(b)
    if a.cols != b.rows:
        raise ValueError(f"dimension mismatch: {a.shape} @ {b.shape}")
    return ZpMatrix._trusted(_mulmod_arrays(a.data, b.data, a.p), a.field)


def hstack(blocks: Sequence[ZpMatrix]) -> ZpMatrix:
    field = blocks[0].field
    for blk in blocks[1:]:
        blocks[0]._check_same_field(blk)
    return ZpMatrix._trusted(np.hstack([b.data for b in blocks]), field)


def vstack(blocks: Sequence[ZpMatrix]) -> ZpMatrix:
    field = blocks[0].field
    for blk in blocks[1:]:
        blocks[0]._check_same_field(blk)
    return ZpMatrix._trusted(np.vstack([b.data for b in blocks]), field)


def mat_sum(blocks: Iterable[ZpMatrix]) -> ZpMatrix:
    blocks = list(blocks)
    if not blocks:
        raise ValueError("mat_sum needs at least one matrix")
    out = blocks[0]
    for blk in blocks[1:]:
        out = out + blk
    return out


def rref(a: ZpMatrix) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form over Z_p.

    Returns the echelon matrix as an object array of Python ints (nonzero
    rows first) and the list of pivot columns.
    """
    p = a.p
    m = a.data.astype(object)
    rows, cols = m.shape
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.flatnonzero(m[r:, c] != 0)
        if nz.size == 0:
            continue
        piv = r + int(nz[0])
        if piv != r:
            m[[r, piv]] = m[[piv, r]]
        inv = pow(int(m[r, c]), -1, p)
        m[r] = (m[r] * inv) % p
        col = m[:, c].copy()
        col[r] = 0
        for i in np.flatnonzero(col != 0):
            m[i] = (m[i] - col[i] * m[r]) % p
        pivots.append(c)
        r += 1
    return m, pivots


def rank(a: ZpMatrix) -> int:
    return len(rref(a)[1])


def mat_inv(a: ZpMatrix) -> ZpMatrix:
    """Inverse over Z_p by Gauss-Jordan elimination on ``[a | I]``."""
    if a.rows != a.cols:
        raise ValueError(f"cannot invert non-square {a.shape} matrix")
    n = a.rows
    aug = hstack([a, ZpMatrix.identity(n, a.field)])
    m, pivots = rref(aug)
    if len(pivots) < n or pivots[n - 1] != n - 1:
        raise SingularMatrix(f"matrix of dimension {n} is singular mod {a.p}")
    return ZpMatrix._trusted(m[:, n:].astype(np.int64), a.field)


def rand_matrix(rows: int, cols: int, field: PrimeField | int, rng: np.random.Generator) -> ZpMatrix:
    field = _as_field(field)
    return ZpMatrix._trusted(
        rng.integers(0, field.p, size=(rows, cols), dtype=np.int64), field
    )


def rand_invertible(
    dim: int,
    field: PrimeField | int,
    rng: np.random.Generator,
    max_attempts: int = 100,
) -> ZpMatrix:
    """Uniform element of GL_dim(Z_p) by rejection sampling."""
    field = _as_field(field)
    for _ in range(max_attempts):
        m = rand_matrix(dim, dim, field, rng)
        if rank(m) == dim:
            return m
    raise GenerationFailure(
        f"no invertible {dim}x{dim} matrix mod {field.p} after {max_attempts} draws"
    )
