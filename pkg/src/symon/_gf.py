"""Vectorized GF(p) kernels on numpy batches of small matrices.

Internal module: arrays here are raw ``int64`` stacks of shape (N, d, d)
with entries already reduced mod p.  The scalar, exact public API lives in
``modmat``; these kernels exist so that exhaustive enumerations and
million-element set constructions run at C speed.

Intermediate products stay below 2**63 for every modulus this package
accepts (p <= ~10**6, d <= 16), so no overflow handling is needed.
"""

from __future__ import annotations

import numpy as np


def inverse_table(p: int) -> np.ndarray:
    """inv[x] = x^-1 mod p for x in [1, p); inv[0] = 0."""
    inv = np.zeros(p, dtype=np.int64)
    if p > 1:
        x = np.arange(p, dtype=np.int64)
        # x^(p-2) mod p via square-and-multiply on the whole table
        result = np.ones(p, dtype=np.int64)
        base = x.copy()
        e = p - 2
        while e:
            if e & 1:
                result = result * base % p
            base = base * base % p
            e >>= 1
        inv[1:] = result[1:]
    return inv


def batch_matmul(a: np.ndarray, b: np.ndarray, p: int) -> np.ndarray:
    return np.matmul(a, b) % p


def batch_det(a: np.ndarray, p: int) -> np.ndarray:
    """Determinants mod p of a (N, d, d) batch, closed-form for d <= 4."""
    d = a.shape[-1]
    if d == 1:
        return a[:, 0, 0] % p
    if d == 2:
        return (a[:, 0, 0] * a[:, 1, 1] - a[:, 0, 1] * a[:, 1, 0]) % p
    if d == 3:
        return (
            a[:, 0, 0] * (a[:, 1, 1] * a[:, 2, 2] - a[:, 1, 2] * a[:, 2, 1])
            - a[:, 0, 1] * (a[:, 1, 0] * a[:, 2, 2] - a[:, 1, 2] * a[:, 2, 0])
            + a[:, 0, 2] * (a[:, 1, 0] * a[:, 2, 1] - a[:, 1, 1] * a[:, 2, 0])
        ) % p
    if d == 4:
        # Laplace expansion along the first two rows: pair each 2x2 minor of
        # rows (0,1) with the complementary minor of rows (2,3).
        def top(i, j):
            return (a[:, 0, i] * a[:, 1, j] - a[:, 0, j] * a[:, 1, i]) % p

        def bot(i, j):
            return (a[:, 2, i] * a[:, 3, j] - a[:, 2, j] * a[:, 3, i]) % p

        return (
            top(0, 1) * bot(2, 3)
            - top(0, 2) * bot(1, 3)
            + top(0, 3) * bot(1, 2)
            + top(1, 2) * bot(0, 3)
            - top(1, 3) * bot(0, 2)
            + top(2, 3) * bot(0, 1)
        ) % p
    raise NotImplementedError(f"batch_det supports d <= 4, got {d}")


def batch_det_minus_identity(a: np.ndarray, p: int) -> np.ndarray:
    """det(a - I) mod p, the eigenvalue-one detector."""
    d = a.shape[-1]
    b = (a - np.eye(d, dtype=np.int64)) % p
    return batch_det(b, p)


def batch_rank(a: np.ndarray, p: int) -> np.ndarray:
    """Ranks over GF(p) of a (N, r, c) batch by vectorized elimination."""
    a = (a % p).astype(np.int64).copy()
    n, nrows, ncols = a.shape
    inv = inverse_table(p)
    rank = np.zeros(n, dtype=np.int64)
    for c in range(ncols):
        # bring a nonzero pivot into row rank[i] of each matrix that has one
        found = np.zeros(n, dtype=bool)
        for r in range(nrows):
            cand = np.nonzero(~found & (r >= rank) & (a[:, r, c] != 0))[0]
            if cand.size:
                ri = rank[cand]
                tmp = a[cand, r, :].copy()
                a[cand, r, :] = a[cand, ri, :]
                a[cand, ri, :] = tmp
                found[cand] = True
        live = np.nonzero(found)[0]
        if live.size == 0:
            continue
        ri = rank[live]
        a[live, ri, :] = a[live, ri, :] * inv[a[live, ri, c]][:, None] % p
        for r in range(nrows):
            sel = live[(a[live, r, c] != 0) & (r != ri)]
            if sel.size:
                f = a[sel, r, c]
                a[sel, r, :] = (a[sel, r, :] - f[:, None] * a[sel, rank[sel], :]) % p
        rank[live] += 1
    return rank


# -- packing matrices into sortable integer keys --
#
# Entries are packed row-major, base p, most significant first, so the
# integer order of keys equals lexicographic order of entry tuples.  One
# 64-bit word holds up to floor(63 / log2(p)) entries; wider matrices are
# split across several words and compared left to right.

def pack_words(p: int, count: int) -> int:
    """Number of 64-bit words needed to pack `count` base-p digits."""
    per = 1
    while p ** (per + 1) < (1 << 63):
        per += 1
    return -(-count // per)


def pack_entries(flat: np.ndarray, p: int) -> np.ndarray:
    """Pack (N, D) entry arrays into (N, W) uint64 key arrays."""
    n, dd = flat.shape
    words = pack_words(p, dd)
    per = -(-dd // words)
    out = np.zeros((n, words), dtype=np.uint64)
    for w in range(words):
        part = flat[:, w * per:(w + 1) * per]
        k = part.shape[1]
        powers = (p ** np.arange(k - 1, -1, -1)).astype(np.int64)
        out[:, w] = (part.astype(np.int64) @ powers).astype(np.uint64)
    return out


def unpack_entries(keys: np.ndarray, p: int, dd: int) -> np.ndarray:
    """Invert pack_entries back to (N, D) int64 entry arrays."""
    n, words = keys.shape
    per = -(-dd // words)
    out = np.zeros((n, dd), dtype=np.int64)
    for w in range(words):
        k = min(per, dd - w * per)
        vals = keys[:, w].astype(np.int64)
        for j in range(k - 1, -1, -1):
            out[:, w * per + j] = vals % p
            vals = vals // p
    return out


def sort_keys(keys: np.ndarray) -> np.ndarray:
    """Sort (N, W) key rows lexicographically; returns a new array."""
    if keys.shape[1] == 1:
        return np.sort(keys, axis=0)
    order = np.lexsort(tuple(keys[:, w] for w in range(keys.shape[1] - 1, -1, -1)))
    return keys[order]


def unique_keys(keys: np.ndarray) -> np.ndarray:
    s = sort_keys(keys)
    if s.shape[0] <= 1:
        return s
    keep = np.ones(s.shape[0], dtype=bool)
    keep[1:] = (s[1:] != s[:-1]).any(axis=1)
    return s[keep]


def searchsorted_keys(sorted_keys: np.ndarray, queries: np.ndarray) -> np.ndarray:
    """Membership mask of query key rows in lexicographically sorted keys."""
    if sorted_keys.shape[0] == 0:
        return np.zeros(queries.shape[0], dtype=bool)
    if sorted_keys.shape[1] == 1:
        pos = np.searchsorted(sorted_keys[:, 0], queries[:, 0])
        pos = np.minimum(pos, sorted_keys.shape[0] - 1)
        return sorted_keys[pos, 0] == queries[:, 0]
    # multi-word rows: byte-wise void comparison matches the numeric
    # lexicographic order only after a big-endian re-encoding
    void = np.dtype((np.void, sorted_keys.dtype.itemsize * sorted_keys.shape[1]))
    hay = np.ascontiguousarray(sorted_keys.astype(">u8")).view(void).ravel()
    ned = np.ascontiguousarray(queries.astype(">u8")).view(void).ravel()
    pos = np.searchsorted(hay, ned)
    pos = np.minimum(pos, hay.shape[0] - 1)
    return hay[pos] == ned


# -- exhaustive candidate scan --

def index_to_entries(idx: np.ndarray, p: int, dd: int) -> np.ndarray:
    """Base-p digits of idx, most significant first: the row-major entries."""
    out = np.empty((idx.shape[0], dd), dtype=np.int64)
    v = idx.copy()
    for k in range(dd - 1, -1, -1):
        out[:, k] = v % p
        v //= p
    return out


def pairings(a: np.ndarray, p: int, i: int, j: int) -> np.ndarray:
    """Standard symplectic pairing of columns i and j of a (N, 2g, 2g) batch."""
    g = a.shape[-1] // 2
    acc = np.zeros(a.shape[0], dtype=np.int64)
    for b in range(g):
        acc += a[:, 2 * b, i] * a[:, 2 * b + 1, j] - a[:, 2 * b + 1, i] * a[:, 2 * b, j]
    return acc % p


def similitude_check(a: np.ndarray, p: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-matrix (multiplier, is-similitude) over a (N, 2g, 2g) batch.

    The multiplier slot is meaningful only where the mask is True.
    """
    dim = a.shape[-1]
    lam = pairings(a, p, 0, 1)
    ok = lam != 0
    for i in range(dim):
        for j in range(i + 1, dim):
            if (i, j) == (0, 1):
                continue
            e = pairings(a, p, i, j)
            if i % 2 == 0 and j == i + 1:
                ok &= e == lam
            else:
                ok &= e == 0
    return lam, ok


def scan_similitudes(g: int, p: int, allowed: np.ndarray | None = None,
                     chunk: int = 1 << 20):
    """Scan all p**(2g)^2 candidate matrices in row-major lexicographic order.

    Yields (entries, multipliers) array pairs for the candidates that are
    symplectic similitudes whose multiplier is allowed.  ``allowed`` is a
    boolean mask over residues [0, p); None admits every unit multiplier.
    """
    dim = 2 * g
    dd = dim * dim
    total = p ** dd
    if allowed is not None:
        allowed = np.asarray(allowed, dtype=bool)
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.int64)
        a = index_to_entries(idx, p, dd).reshape(-1, dim, dim)
        lam, ok = similitude_check(a, p)
        if allowed is not None:
            ok &= allowed[lam]
        if ok.any():
            yield a[ok], lam[ok]
