import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pirbreak import _lll_kernel as kernel
from pirbreak.errors import InstanceTooLarge, NoEmbeddingVector
from pirbreak.lattice import (
    LatticeBasis,
    TargetVector,
    cvp_bruteforce,
    cvp_via_embedding,
    det_exact,
    kannan_embed,
    lattice_coordinates,
    lll_certificate,
    lll_reduce,
    make_target,
    qary_square_basis,
)
from pirbreak.zpmat import ZpMatrix, next_prime, rand_matrix, rank


def gauss_shortest_sq(u, v):
    """Lagrange-Gauss reduction in dimension 2; returns lambda_1 squared."""
    def dot(a, b):
        return sum(x * y for x, y in zip(a, b))
    u, v = list(u), list(v)
    if dot(u, u) > dot(v, v):
        u, v = v, u
    while True:
        m = round(Fraction(dot(u, v), dot(u, u)))
        v = [a - m * b for a, b in zip(v, u)]
        if dot(v, v) >= dot(u, u):
            return dot(u, u)
        u, v = v, u


def naive_det(rows):
    n = len(rows)
    total = 0
    for perm in itertools.permutations(range(n)):
        sign = 1
        for i in range(n):
            for j in range(i + 1, n):
                if perm[i] > perm[j]:
                    sign = -sign
        prod = 1
        for i in range(n):
            prod *= rows[i][perm[i]]
        total += sign * prod
    return total


@settings(max_examples=30, deadline=None)
@given(st.lists(st.lists(st.integers(-50, 50), min_size=4, max_size=4), min_size=4, max_size=4))
def test_det_exact_matches_permutation_expansion(rows):
    assert det_exact(rows) == naive_det(rows)


def test_qary_basis_small_example():
    G = ZpMatrix([[1], [2]], 5)
    B = qary_square_basis(G)
    assert abs(B.determinant()) == 5
    assert B.contains((1, 2))
    assert B.contains((5, 0)) and B.contains((0, 5))
    assert not B.contains((1, 0))


@pytest.mark.parametrize("seed", range(8))
def test_qary_basis_determinant_and_membership(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(3, 9))
    m = int(rng.integers(1, d))
    p = next_prime(int(rng.integers(50, 5000)))
    G = rand_matrix(d, m, p, rng)
    B = qary_square_basis(G)
    assert abs(B.determinant()) == p ** (d - rank(G))
    for col in G.data.T.tolist():
        assert B.contains(col)
    x = rng.integers(0, p, size=m)
    y = (G.data.astype(object) @ x.astype(object)) % p
    assert B.contains([int(v) - p for v in y])


def test_qary_basis_rank_deficient_generator():
    G = ZpMatrix([[1, 2], [2, 4], [3, 6]], 7)
    B = qary_square_basis(G)
    assert abs(B.determinant()) == 7**2


def test_lattice_coordinates():
    B = LatticeBasis(((2, 0), (1, 3)))
    assert lattice_coordinates(B, (3, 3)) == [1, 1]
    assert lattice_coordinates(B, (1, 0)) is None
    with pytest.raises(ValueError):
        lattice_coordinates(B, (1, 2, 3))


def test_lll_simple_examples():
    out = lll_reduce(LatticeBasis(((1, 0), (1000000, 1))))
    assert sorted(map(abs, itertools.chain(*out.vectors))) == [0, 0, 1, 1]
    out = lll_reduce(LatticeBasis(((3, 0), (0, 3))))
    assert sorted(out.norms_squared()) == [9, 9]


@settings(max_examples=40, deadline=None)
@given(
    st.tuples(st.integers(-10**6, 10**6), st.integers(-10**6, 10**6)),
    st.tuples(st.integers(-10**6, 10**6), st.integers(-10**6, 10**6)),
)
def test_lll_dimension_two_against_gauss(u, v):
    if u[0] * v[1] - u[1] * v[0] == 0:
        return
    out = lll_reduce(LatticeBasis((u, v)))
    lam = gauss_shortest_sq(u, v)
    first = out.norms_squared()[0]
    assert lam <= first <= lam / 0.99
    assert abs(out.determinant()) == abs(u[0] * v[1] - u[1] * v[0])


@pytest.mark.parametrize("mode", ["auto", "float", "exact"])
def test_lll_modes_certify(mode):
    rng = np.random.default_rng(4)
    p = next_prime(2**30)
    B = qary_square_basis(rand_matrix(16, 6, p, rng))
    out = lll_reduce(B, mode=mode)
    assert lll_certificate(out, 0.99) == []
    assert abs(out.determinant()) == abs(B.determinant())


def test_lll_argument_checks():
    B = LatticeBasis(((1, 0), (0, 1)))
    with pytest.raises(ValueError):
        lll_reduce(B, delta=1.0)
    with pytest.raises(ValueError):
        lll_reduce(B, mode="fast")


def test_certificate_flags_unreduced_bases():
    assert lll_certificate(LatticeBasis(((1, 0), (7, 1))), 0.99)
    assert lll_certificate(LatticeBasis(((10, 0), (0, 1))), 0.99)
    assert lll_certificate(LatticeBasis(((1, 0), (0, 1))), 0.99) == []


def test_kernel_wide_entries_match_exact_lattice():
    # 60-bit q-ary basis: the kernel runs with wrapping arithmetic.
    p = 2**60 + 325
    rng = np.random.default_rng(8)
    B = qary_square_basis(rand_matrix(24, 16, p, rng))
    arr = np.array([list(v) for v in B.vectors], dtype=np.int64)
    status = kernel.lll_int64(arr, 0.99 + 2**-24, 0.5 + 2**-32, 64, 10**7)
    assert status == kernel.OK
    out = LatticeBasis(tuple(map(tuple, arr.tolist())))
    assert lll_certificate(out, 0.99) == []
    assert abs(out.determinant()) == abs(B.determinant())
    for v in out.vectors:
        assert B.contains(v)


def test_make_target_and_embedding_layout():
    assert make_target(4, {2: 7}) == (0, 7, 0, 0)
    S = LatticeBasis(((3, 0), (0, 3)))
    E = kannan_embed(S, (1, 2), 5)
    assert E.vectors == ((3, 0, 0), (0, 3, 0), (1, 2, 5))
    with pytest.raises(ValueError):
        kannan_embed(S, (1, 2, 3))
    with pytest.raises(ValueError):
        kannan_embed(S, (1, 2), 0)


def test_cvp_embedding_examples():
    S = lll_reduce(LatticeBasis(((3, 0), (0, 3))))
    cand = cvp_via_embedding(S, (1, 1))
    assert cand.closest == (0, 0)
    assert cand.offset == (1, 1)
    assert cand.distance_squared() == 2
    assert abs(cand.embed_last) == 1
    cand = cvp_via_embedding(LatticeBasis(((7,),)), TargetVector((3,), 1, 3))
    assert cand.closest == (0,)


def test_cvp_embedding_can_report_no_vector():
    # Frozen instance where no reduced vector ends in +-M.
    G = ZpMatrix([[0], [11], [12], [0]], 13)
    S = lll_reduce(qary_square_basis(G))
    with pytest.raises(NoEmbeddingVector):
        cvp_via_embedding(S, (4, 16, 15, -5), M=1)


def test_cvp_bruteforce_examples():
    G = ZpMatrix([[1], [0]], 3)
    # lattice 3Z x 3Z plus (1, 0): points (3a+k, 3b) with k = x mod 3
    assert cvp_bruteforce(ZpMatrix([[0], [0]], 3), 3, (1, 1)) == (0, 0)
    assert cvp_bruteforce(G, 3, (1, 1)) == (1, 0)
    assert cvp_bruteforce(ZpMatrix([[1], [2]], 5), 5, (1, 2)) == (1, 2)


def brute_force_ball(G, p, t, radius):
    # Independent oracle: scan every integer point in a box around t.
    best = None
    rows = G.data.tolist()
    d, m = G.rows, G.cols
    members = {
        tuple(sum(rows[r][c] * x[c] for c in range(m)) % p for r in range(d))
        for x in itertools.product(range(p), repeat=m)
    }
    for off in itertools.product(range(-radius, radius + 1), repeat=d):
        y = tuple(a + b for a, b in zip(t, off))
        if tuple(v % p for v in y) in members:
            key = (sum(o * o for o in off), y)
            if best is None or key < best:
                best = key
    return best


@pytest.mark.parametrize("seed", range(12))
def test_cvp_bruteforce_matches_box_scan(seed):
    rng = np.random.default_rng(seed)
    p = int(rng.choice([3, 5, 7]))
    G = rand_matrix(3, 1, p, rng)
    t = tuple(int(x) for x in rng.integers(-10, 11, size=3))
    got = cvp_bruteforce(G, p, t)
    ref = brute_force_ball(G, p, t, p)
    assert sum((a - b) ** 2 for a, b in zip(got, t)) == ref[0]
    assert got == ref[1]


def test_cvp_bruteforce_limits():
    G = rand_matrix(7, 1, 5, np.random.default_rng(0))
    with pytest.raises(InstanceTooLarge):
        cvp_bruteforce(G, 5, [0] * 7)
    with pytest.raises(ValueError):
        cvp_bruteforce(ZpMatrix([[1], [2]], 5), 5, (1,))


@pytest.mark.parametrize("seed", range(10))
def test_cvp_embedding_returns_members(seed):
    rng = np.random.default_rng(seed)
    p = next_prime(int(rng.integers(100, 10**6)))
    G = rand_matrix(10, 4, p, rng)
    B = qary_square_basis(G)
    S = lll_reduce(B)
    t = tuple(int(x) for x in rng.integers(-p, p, size=10))
    try:
        cand = cvp_via_embedding(S, t)
    except NoEmbeddingVector:
        return
    assert B.contains(cand.closest)
    assert tuple(a - b for a, b in zip(t, cand.closest)) == cand.offset


def test_basis_json_uses_strings():
    B = LatticeBasis(((2**70, 0), (1, 1)))
    d = B.to_json()
    assert d["data"] == [str(2**70), "1", "0", "1"]
    assert math.isclose(float(d["data"][0]), 2.0**70)
