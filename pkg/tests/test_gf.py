import numpy as np
import pytest

from symon import _gf
from symon.modmat import ModMatrix, Modulus, det, rank_mod
from symon.prng import CounterRng
from symon.sympgroup import GroupContext, NotSimilitude, multiplier


def rand_entries(n, dd, p, seed):
    rng = CounterRng(seed, 0)
    return np.array([[rng.below(p) for _ in range(dd)] for _ in range(n)],
                    dtype=np.int64)


def test_inverse_table():
    for p in (2, 3, 7, 13, 31):
        inv = _gf.inverse_table(p)
        assert inv[0] == 0
        for x in range(1, p):
            assert inv[x] * x % p == 1


@pytest.mark.parametrize("p", [3, 13, 17, 31])
def test_pack_unpack_round_trip(p):
    flat = rand_entries(500, 16, p, p)
    keys = _gf.pack_entries(flat, p)
    words = 1 if p ** 16 < 2 ** 63 else 2
    assert keys.shape == (500, words)
    assert (_gf.unpack_entries(keys, p, 16) == flat).all()


@pytest.mark.parametrize("p", [13, 17])
def test_key_order_matches_lexicographic(p):
    flat = rand_entries(400, 16, p, 3 * p)
    keys = _gf.unique_keys(_gf.pack_entries(flat, p))
    back = _gf.unpack_entries(keys, p, 16)
    as_tuples = [tuple(row) for row in back]
    assert as_tuples == sorted(as_tuples)


@pytest.mark.parametrize("p", [13, 17, 31])
def test_searchsorted_keys_membership(p):
    flat = rand_entries(300, 16, p, 7 * p)
    keys = _gf.unique_keys(_gf.pack_entries(flat, p))
    hits = _gf.searchsorted_keys(keys, _gf.pack_entries(flat, p))
    assert hits.all()
    other = rand_entries(300, 16, p, 7 * p + 1)
    expect = {tuple(r) for r in flat}
    got = _gf.searchsorted_keys(keys, _gf.pack_entries(other, p))
    for row, hit in zip(other, got):
        assert bool(hit) == (tuple(row) in expect)


@pytest.mark.parametrize("p,d", [(3, 2), (5, 3), (7, 4), (13, 4)])
def test_batch_det_against_scalar(p, d):
    flat = rand_entries(200, d * d, p, p + d)
    batch = flat.reshape(-1, d, d)
    dets = _gf.batch_det(batch, p)
    modulus = Modulus.of(p)
    for mat, bd in zip(batch, dets):
        m = ModMatrix.from_rows(modulus, [[int(x) for x in row] for row in mat])
        assert det(m) == int(bd)


@pytest.mark.parametrize("p,shape", [(3, (4, 4)), (5, (4, 4)), (7, (6, 3))])
def test_batch_rank_against_scalar(p, shape):
    r, c = shape
    flat = rand_entries(200, r * c, p, 17 * p + r)
    batch = flat.reshape(-1, r, c)
    ranks = _gf.batch_rank(batch, p)
    for mat, br in zip(batch, ranks):
        rows = [[int(x) for x in row] for row in mat]
        assert rank_mod(rows, p) == int(br)


def test_batch_rank_degenerate_cases():
    p = 5
    zeros = np.zeros((3, 4, 4), dtype=np.int64)
    assert (_gf.batch_rank(zeros, p) == 0).all()
    eye = np.broadcast_to(np.eye(4, dtype=np.int64), (3, 4, 4)).copy()
    assert (_gf.batch_rank(eye, p) == 4).all()


@pytest.mark.parametrize("p,g", [(3, 1), (5, 2), (7, 2)])
def test_similitude_check_against_scalar(p, g):
    dim = 2 * g
    flat = rand_entries(300, dim * dim, p, 23 * p + g)
    batch = flat.reshape(-1, dim, dim)
    lam, ok = _gf.similitude_check(batch, p)
    ctx = GroupContext.of(g, p)
    modulus = Modulus.of(p)
    for mat, l_, ok_ in zip(batch, lam, ok):
        m = ModMatrix.from_rows(modulus, [[int(x) for x in row] for row in mat])
        try:
            want = multiplier(ctx, m)
            assert bool(ok_) and int(l_) == want
        except NotSimilitude:
            assert not bool(ok_)
