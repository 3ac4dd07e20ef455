"""A lattice-based PIR scheme built on noisy matrices over Z_p.

A client wanting file ``i0`` out of ``n`` sends ``n`` matrices

    B_i = [P_i M1 | P_i M2 + eps_i] Delta      (each N x 2N over Z_p)

where ``eps_i`` has random +-1 entries, except that the diagonal of
``eps_{i0}`` is scaled by ``q``.  The server answers ``R = A B`` with ``A``
the horizontal concatenation of all files, and the client strips the
scrambling to read ``A_{i0}`` off the amplified noise.

Indices exposed by this module (``i0``, block numbers) are 1-based, as in
the scheme description; Python sequences underneath are 0-based.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import ExtractionError
from .zpmat import (
    MAX_MODULUS,
    PrimeField,
    ZpMatrix,
    hstack,
    is_prime,
    mat_inv,
    next_prime,
    rand_invertible,
    rand_matrix,
    vstack,
)

PAPER_PRIME = (1 << 60) + 325


def formula_l0(n: int, N: int) -> int:
    """Bit-length parameter ``ceil(log2(n N)) + 2``."""
    return math.ceil(math.log2(n * N)) + 2


@dataclass(frozen=True)
class SchemeParams:
    """Public scheme constants plus the attack knobs.

    ``k`` is the extra-row count of the windowed attack, ``t`` the block count
    at which preprocessing hands over to it, and ``M`` the embedding factor.
    """

    n: int
    N: int
    L: int
    l0: int
    q: int
    p: int
    k: int
    t: int = 6
    M: int = 1

    def __post_init__(self):
        if self.n < 1 or self.N < 2 or self.L < 1:
            raise ValueError(f"need n >= 1, N >= 2, L >= 1 (got {self.n}, {self.N}, {self.L})")
        if self.l0 < 1:
            raise ValueError("l0 must be positive")
        if self.q < 2 or self.q % 2:
            raise ValueError(f"q must be a positive even integer, got {self.q}")
        if not 2 * self.q < self.p < MAX_MODULUS:
            raise ValueError(f"p must satisfy 2q < p < 2**62, got p={self.p}")
        if not is_prime(self.p):
            raise ValueError(f"p={self.p} is not prime")
        if not 1 <= self.k <= self.N:
            raise ValueError(f"k must lie in [1, N], got {self.k}")
        if self.t < 3:
            raise ValueError(f"threshold t must be >= 3, got {self.t}")
        if self.M < 1:
            raise ValueError(f"embedding factor must be >= 1, got {self.M}")

    @property
    def field(self) -> PrimeField:
        return PrimeField(self.p)

    def consistency_problems(self) -> list[str]:
        """Ways in which these values depart from the scheme's own recipe."""
        problems = []
        need = formula_l0(self.n, self.N)
        if self.l0 < need:
            problems.append(
                f"l0={self.l0} is below ceil(log2(nN))+2={need}; extraction may fail"
            )
        if self.q != 1 << (2 * self.l0 - 1):
            problems.append(f"q={self.q} differs from 2**(2*l0-1)")
        if self.p <= 1 << (3 * self.l0):
            problems.append(f"p={self.p} does not exceed 2**(3*l0)")
        return problems

    def to_dict(self) -> dict:
        # q and p exceed the float mantissa; keep them as decimal strings.
        return {
            "n": self.n, "N": self.N, "L": self.L, "l0": self.l0,
            "q": str(self.q), "p": str(self.p),
            "k": self.k, "t": self.t, "M": self.M,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SchemeParams":
        return cls(
            n=int(d["n"]), N=int(d["N"]), L=int(d["L"]), l0=int(d["l0"]),
            q=int(d["q"]), p=int(d["p"]),
            k=int(d["k"]), t=int(d.get("t", 6)), M=int(d.get("M", 1)),
        )


def derive_params(
    n: int,
    N: int,
    L: int = 4,
    *,
    l0: int | None = None,
    q: int | None = None,
    p: int | None = None,
    k: int | None = None,
    t: int = 6,
    M: int = 1,
    force: bool = False,
) -> SchemeParams:
    """Build parameters from ``(n, N, L)``, filling the rest from the recipe.

    Overrides that contradict ``q = 2**(2 l0 - 1)``, ``p > 2**(3 l0)`` or the
    ``l0`` lower bound are rejected unless ``force`` is set.
    """
    if n < 1 or N < 2 or L < 1:
        raise ValueError(f"need n >= 1, N >= 2, L >= 1 (got {n}, {N}, {L})")
    if l0 is None:
        l0 = formula_l0(n, N)
    if q is None:
        q = 1 << (2 * l0 - 1)
    if p is None:
        p = next_prime(1 << (3 * l0))
    if k is None:
        k = N
    params = SchemeParams(n=n, N=N, L=L, l0=l0, q=q, p=p, k=k, t=t, M=M)
    problems = params.consistency_problems()
    if problems and not force:
        raise ValueError("; ".join(problems) + " (pass force=True to accept)")
    return params


def paper_params(n: int = 100, L: int = 4, *, force: bool = True) -> SchemeParams:
    """The recommended instance: l0=20, q=2**39, N=50, p=2**60+325, k=34, t=6, M=1.

    For ``n > 5242`` the fixed ``l0 = 20`` is below ``ceil(log2(50 n)) + 2``,
    so the preset is forced by default.
    """
    return derive_params(n, 50, L, l0=20, q=1 << 39, p=PAPER_PRIME, k=34, t=6, M=1, force=force)


def desk_params(n: int, L: int = 4) -> SchemeParams:
    """Small instance for CI: N=10, l0 from the recipe, k=7, t=6, M=1."""
    N = 10
    return derive_params(n, N, L, k=min(N, 7), t=6, M=1)


PRESETS = {"paper": paper_params, "desk": desk_params}


@dataclass(frozen=True)
class SecretKey:
    m1: ZpMatrix
    m2: ZpMatrix
    delta: ZpMatrix
    m1_inv: ZpMatrix
    delta_inv: ZpMatrix


@dataclass(frozen=True)
class NoiseWitness:
    """Signed noise matrices; known to the client (and to tests) only."""

    epsilons: tuple[np.ndarray, ...]
    i0: int
    signs: tuple[int, ...]

    def stacked(self) -> np.ndarray:
        return np.vstack(self.epsilons)


@dataclass(frozen=True)
class QueryStack:
    blocks: tuple[ZpMatrix, ...]
    params: SchemeParams

    def __len__(self) -> int:
        return len(self.blocks)

    def block(self, i: int) -> ZpMatrix:
        """1-based access with cyclic wraparound (``B_{i+n} = B_i``)."""
        return self.blocks[(i - 1) % len(self.blocks)]

    def stacked(self) -> ZpMatrix:
        return vstack(self.blocks)


def gen_secret(params: SchemeParams, rng: np.random.Generator) -> SecretKey:
    f = params.field
    N = params.N
    m1 = rand_invertible(N, f, rng)
    m2 = rand_matrix(N, N, f, rng)
    delta = rand_invertible(2 * N, f, rng)
    return SecretKey(m1=m1, m2=m2, delta=delta, m1_inv=mat_inv(m1), delta_inv=mat_inv(delta))


def gen_queries(
    params: SchemeParams,
    secret: SecretKey,
    i0: int,
    rng: np.random.Generator,
) -> tuple[QueryStack, NoiseWitness]:
    if not 1 <= i0 <= params.n:
        raise IndexError(f"i0={i0} outside 1..{params.n}")
    f = params.field
    N, q = params.N, params.q
    blocks, epsilons = [], []
    signs: tuple[int, ...] = ()
    for i in range(1, params.n + 1):
        P = rand_invertible(N, f, rng)
        eps = 2 * rng.integers(0, 2, size=(N, N), dtype=np.int64) - 1
        if i == i0:
            signs = tuple(int(s) for s in np.diag(eps))
            eps[np.diag_indices(N)] *= q
        eps.setflags(write=False)
        left = P @ secret.m1
        right = P @ secret.m2 + ZpMatrix(eps, f)
        blocks.append(hstack([left, right]) @ secret.delta)
        epsilons.append(eps)
    witness = NoiseWitness(epsilons=tuple(epsilons), i0=i0, signs=signs)
    return QueryStack(blocks=tuple(blocks), params=params), witness


@dataclass(frozen=True)
class Database:
    files: tuple[np.ndarray, ...]

    @classmethod
    def random(cls, params: SchemeParams, rng: np.random.Generator) -> "Database":
        hi = 1 << params.l0
        return cls(tuple(
            rng.integers(0, hi, size=(params.L, params.N), dtype=np.int64)
            for _ in range(params.n)
        ))

    @property
    def n(self) -> int:
        return len(self.files)


def encode_answer(db: Database, queries: QueryStack) -> ZpMatrix:
    """Server side: ``R = [A_1 | ... | A_n] (B_1; ...; B_n)`` over Z_p."""
    if db.n != len(queries):
        raise ValueError(f"database has {db.n} files but {len(queries)} query blocks")
    N = queries.params.N
    for a in db.files:
        if a.shape[1] != N or a.shape[0] != db.files[0].shape[0]:
            raise ValueError(f"file shape {a.shape} does not match L x {N}")
    f = queries.params.field
    A = ZpMatrix(np.hstack(db.files), f)
    return A @ queries.stacked()


def extract_file(answer: ZpMatrix, secret: SecretKey, params: SchemeParams) -> np.ndarray:
    """Client side: recover the requested ``L x N`` file from the answer."""
    N, p, q = params.N, params.p, params.q
    if answer.cols != 2 * N:
        raise ValueError(f"answer must have {2 * N} columns, got {answer.cols}")
    unscrambled = answer @ secret.delta_inv
    U, D = unscrambled[:, :N], unscrambled[:, N:]
    err = D - U @ secret.m1_inv @ secret.m2
    out = np.empty((answer.rows, N), dtype=np.int64)
    for (i, j), e in np.ndenumerate(err.data):
        e = int(e)
        e1 = p - e if e > p // 2 else e
        r = e1 % q
        e2 = e1 - r if 2 * r < q else e1 - r + q
        if e2 % q:
            raise ExtractionError(f"entry ({i}, {j}) is not a multiple of q")
        value = e2 // q
        if not 0 <= value < 1 << params.l0:
            raise ExtractionError(f"entry ({i}, {j}) decodes to {value}, outside [0, 2**l0)")
        out[i, j] = value
    return out


def bridging_matrix(secret: SecretKey) -> ZpMatrix:
    """``D = Delta^-1 (-M1^-1 M2 ; I_N)``, so that ``B_i D = eps_i`` for every block."""
    f = secret.m1.field
    N = secret.m1.rows
    top = -(secret.m1_inv @ secret.m2)
    return secret.delta_inv @ vstack([top, ZpMatrix.identity(N, f)])


# -- JSON wire format ------------------------------------------------------

def matrix_to_json(m: ZpMatrix | np.ndarray, modulus: int | None = None) -> dict:
    if isinstance(m, ZpMatrix):
        modulus = m.p
        arr = m.data
    else:
        arr = np.asarray(m)
    rows, cols = arr.shape
    return {
        "rows": rows,
        "cols": cols,
        "modulus": None if modulus is None else str(modulus),
        "data": [str(int(v)) for v in arr.ravel().tolist()],
    }


def matrix_from_json(d: dict) -> ZpMatrix | np.ndarray:
    rows, cols = int(d["rows"]), int(d["cols"])
    values = [int(v) for v in d["data"]]
    if len(values) != rows * cols:
        raise ValueError(f"expected {rows * cols} entries, got {len(values)}")
    arr = np.array(values, dtype=object).reshape(rows, cols)
    if d.get("modulus") is None:
        return arr.astype(np.int64)
    return ZpMatrix(arr, int(d["modulus"]))


def queries_to_json(qs: QueryStack) -> dict:
    return {"params": qs.params.to_dict(), "blocks": [matrix_to_json(b) for b in qs.blocks]}


def queries_from_json(d: dict) -> QueryStack:
    params = SchemeParams.from_dict(d["params"])
    return QueryStack(tuple(matrix_from_json(b) for b in d["blocks"]), params)


def database_to_json(db: Database) -> dict:
    return {"files": [matrix_to_json(a) for a in db.files]}


def database_from_json(d: dict) -> Database:
    return Database(tuple(matrix_from_json(a) for a in d["files"]))


def answer_to_json(r: ZpMatrix) -> dict:
    return matrix_to_json(r)


def answer_from_json(d: dict) -> ZpMatrix:
    return matrix_from_json(d)
