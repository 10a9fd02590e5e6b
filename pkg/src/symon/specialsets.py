"""Families of similitudes forced to fix a nonzero vector.

The construction runs in three layers over F_ell (genus g >= 2):

* ``core`` -- matrices assembled through the e_1-stabilizer parameterization
  from a fixed pool of eigenvalue-one-free blocks, with the one value of the
  free corner entry excluded that would enlarge the fixed space.  Every core
  matrix fixes exactly the line through e_1.
* ``full`` -- the core together with all of its conjugates under the shear
  maps built on e_2 + span(e_3, ..., e_2g).  Distinct conjugators move the
  fixed line to distinct positions, so the closure has exactly
  (ell^(2g-2) * (ell-1) + 1) times the core's cardinality.
* ``union`` -- the disjoint union of full layers over every admissible
  multiplier of the context.

Cardinalities obey closed formulas which the materialized builders measure
independently (build, pack, deduplicate, count); the test suite pins the two
against each other.  Block pools come in two flavours: the canonical pool
takes the first eligible blocks in the group's lexicographic enumeration
order (reproducible across runs and machines), and an explicit closed-form
pool is available at g = 2.

Materialization is a g = 2 feature; for larger genus the module still
provides exact cardinalities and witness sampling by construction, but no
global membership decisions.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from typing import Iterator, Mapping, TextIO, Union

import numpy as np

from . import _gf
from .modmat import (
    ModMatrix,
    Modulus,
    header_line,
    kernel_basis,
    mat_inv,
    matrix_line,
    rank_mod,
    read_matrices,
    reduce_mod,
)
from .prng import CounterRng
from .sympgroup import (
    DEFAULT_BUDGET,
    GroupContext,
    NotSimilitude,
    _Infinity,
    is_member,
    multiplicative_order,
    multiplier,
    sample_entries,
    scan_entries,
    sp_order,
    stabilizer_matrix,
    StabilizerParams,
    transvection,
)

DEFAULT_ELL_CAP = 13
HARD_ELL_CAP = 31


class InsufficientMatrices(RuntimeError):
    """Fewer eligible blocks exist than the construction requires."""


class BlockStrategy(enum.Enum):
    LEX_CANONICAL = "lex-canonical"
    EXPLICIT_G2 = "explicit-g2"


class SetLevel(enum.Enum):
    CORE = "core"
    FULL = "full"
    UNION = "union"


@dataclass(frozen=True)
class SingleMultiplier:
    value: int


@dataclass(frozen=True)
class PowersOfQ:
    pass


@dataclass(frozen=True)
class AllUnits:
    pass


Selector = Union[SingleMultiplier, PowersOfQ, AllUnits]


def no_eigenvalue_one_floor(ell: int, g: int) -> int:
    """Guaranteed count of multiplier-fixed similitudes without eigenvalue 1.

    Equals ell^(2g-1) * (ell^2g - 1) * (ell-2) / (ell-1); an integer for
    every prime ell, and zero at ell = 2.
    """
    num = ell ** (2 * g - 1) * (ell ** (2 * g) - 1) * (ell - 2)
    if num % (ell - 1):
        raise AssertionError("floor formula did not divide out")
    return num // (ell - 1)


def count_without_eigenvalue_one(ell: int, g: int, lam: int,
                                 budget: int = DEFAULT_BUDGET) -> int:
    """Exact count of multiplier-lam similitudes with det(A - I) != 0.

    Exhaustive: scans the whole candidate space, so g <= 2 in practice.
    Raises BudgetExceeded like the underlying enumeration.
    """
    ctx = GroupContext.of(g, ell)
    total = 0
    for entries, _ in scan_entries(ctx, lam=lam, budget=budget):
        total += int(np.count_nonzero(_gf.batch_det_minus_identity(entries, ell)))
    return total


# -- block pools --

def _block_count(ell: int, g: int, strategy: BlockStrategy) -> int:
    if strategy is BlockStrategy.EXPLICIT_G2:
        return ell * (ell - 1) ** 2
    return no_eigenvalue_one_floor(ell, g - 1) * sp_order(g - 2, ell)


def _require_constructible(ctx: GroupContext, strategy: BlockStrategy) -> int:
    if not ctx.modulus.is_prime:
        raise ValueError("set construction requires a prime modulus")
    ell = ctx.modulus.n
    if ell == 2:
        raise ValueError(
            "ell=2 is rejected: the (ell-2) factor makes the eigenvalue-one-free "
            "floor zero, so the block pool and every derived set are empty")
    if ctx.g < 2:
        raise ValueError("set construction needs g >= 2")
    if strategy is BlockStrategy.EXPLICIT_G2 and ctx.g != 2:
        raise ValueError("the explicit block pool is defined only for g = 2")
    return ell


def _blocks_entries(ctx: GroupContext, lam: int,
                    strategy: BlockStrategy) -> np.ndarray:
    """Block pool as an (m, 2g-2, 2g-2) int64 array, deterministic order."""
    ell = _require_constructible(ctx, strategy)
    lam %= ell
    if math.gcd(lam, ell) != 1:
        raise ValueError(f"multiplier {lam} is not a unit mod {ell}")
    if strategy is BlockStrategy.EXPLICIT_G2:
        rows = []
        for b11 in range(ell):
            for b12 in range(1, ell):
                inv12 = pow(b12, -1, ell)
                for b22 in range(ell):
                    if b22 == (1 - b11 + lam) % ell:
                        continue
                    b21 = inv12 * (b11 * b22 - lam) % ell
                    rows.append((b11, b12, b21, b22))
        return np.array(rows, dtype=np.int64).reshape(-1, 2, 2)
    need = _block_count(ell, ctx.g, strategy)
    sub = GroupContext(ctx.g - 1, ctx.modulus)
    picked = []
    have = 0
    for entries, _ in scan_entries(sub, lam=lam):
        keep = entries[_gf.batch_det_minus_identity(entries, ell) != 0]
        if have + keep.shape[0] > need:
            keep = keep[: need - have]
        picked.append(keep)
        have += keep.shape[0]
        if have == need:
            break
    if have < need:
        raise InsufficientMatrices(
            f"only {have} eigenvalue-one-free blocks available, need {need}")
    return np.concatenate(picked, axis=0)


def select_blocks(ctx: GroupContext, lam: int,
                  strategy: BlockStrategy = BlockStrategy.LEX_CANONICAL) -> list[ModMatrix]:
    """The chosen block pool for one multiplier, as matrices."""
    entries = _blocks_entries(ctx, lam, strategy)
    d = entries.shape[-1]
    return [ModMatrix.from_rows(ctx.modulus, [[int(x) for x in row] for row in m])
            for m in entries.reshape(-1, d, d)]


# -- cardinality formulas --

def core_cardinality(g: int, ell: int,
                     strategy: BlockStrategy = BlockStrategy.LEX_CANONICAL) -> int:
    """ell^(2g-2) * (ell-1) * |block pool|."""
    return ell ** (2 * g - 2) * (ell - 1) * _block_count(ell, g, strategy)


def full_cardinality(g: int, ell: int,
                     strategy: BlockStrategy = BlockStrategy.LEX_CANONICAL) -> int:
    """(ell^(2g-2) * (ell-1) + 1) * core cardinality."""
    return (ell ** (2 * g - 2) * (ell - 1) + 1) * core_cardinality(g, ell, strategy)


def union_cardinality(g: int, ell: int, q: int | _Infinity,
                      strategy: BlockStrategy = BlockStrategy.LEX_CANONICAL) -> int:
    """Sum of full layers over the admissible multipliers mod ell.

    The per-multiplier cardinality does not depend on the multiplier, so
    this is (number of admissible multipliers) * full cardinality.
    """
    count = (ell - 1) if isinstance(q, _Infinity) else multiplicative_order(q, ell)
    return count * full_cardinality(g, ell, strategy)


def composite_union_cardinality(g: int, n: int, q: int | _Infinity,
                                strategy: BlockStrategy = BlockStrategy.LEX_CANONICAL) -> int:
    """Cardinality of the union-level set over squarefree composite n.

    Residues mod n with every reduction in the per-prime set and a single
    global multiplier: each choice of the global multiplier exponent
    contributes the product of per-prime full layers.
    """
    primes = Modulus.of(n).primes
    if isinstance(q, _Infinity):
        return math.prod(union_cardinality(g, ell, q, strategy) for ell in primes)
    if math.gcd(q, n) != 1:
        raise ValueError(f"gcd({q}, {n}) != 1")
    return multiplicative_order(q, n) * math.prod(
        full_cardinality(g, ell, strategy) for ell in primes)


# -- materialized sets (g = 2) --

def _require_materializable(ctx: GroupContext, strategy: BlockStrategy,
                            allow_large: bool) -> int:
    ell = _require_constructible(ctx, strategy)
    if ctx.g != 2:
        raise ValueError("materialization is implemented for g = 2 only; "
                         "use the cardinality formulas and witness samplers for larger g")
    cap = HARD_ELL_CAP if allow_large else DEFAULT_ELL_CAP
    if ell > cap:
        raise ValueError(f"ell={ell} exceeds the materialization cap {cap}"
                         + ("" if allow_large else " (pass allow_large=True up to 31)"))
    return ell


def _core_entries(ctx: GroupContext, lam: int, strategy: BlockStrategy) -> np.ndarray:
    ell = ctx.modulus.n
    lam %= ell
    blocks = _blocks_entries(ctx, lam, strategy)
    inv_lam = pow(lam, -1, ell)
    d1 = np.repeat(np.arange(ell, dtype=np.int64), ell)
    d2 = np.tile(np.arange(ell, dtype=np.int64), ell)
    chunks = []
    for blk in blocks:
        b11, b12, b21, b22 = (int(blk[0, 0]), int(blk[0, 1]),
                              int(blk[1, 0]), int(blk[1, 1]))
        ib = np.array([[1 - b11, -b12], [-b21, 1 - b22]], dtype=np.int64) % ell
        det = int(ib[0, 0] * ib[1, 1] - ib[0, 1] * ib[1, 0]) % ell
        dinv = pow(det, -1, ell)
        minv = np.array([[ib[1, 1], -ib[0, 1]], [-ib[1, 0], ib[0, 0]]],
                        dtype=np.int64) * dinv % ell
        # forced top-row entries and the excluded corner value, per (d1, d2)
        b1 = inv_lam * (d1 * b21 - d2 * b11) % ell
        b2 = inv_lam * (d1 * b22 - d2 * b12) % ell
        t1 = (minv[0, 0] * d1 + minv[0, 1] * d2) % ell
        t2 = (minv[1, 0] * d1 + minv[1, 1] * d2) % ell
        excl = (-(b1 * t1 + b2 * t2)) % ell
        dgrid = np.arange(ell, dtype=np.int64)
        keep = dgrid[None, :] != excl[:, None]          # (ell^2, ell)
        pair_idx, d_vals = np.nonzero(keep)
        m = pair_idx.shape[0]
        out = np.zeros((m, 4, 4), dtype=np.int64)
        out[:, 0, 0] = 1
        out[:, 0, 1] = d_vals
        out[:, 1, 1] = lam
        out[:, 2, 1] = d1[pair_idx]
        out[:, 3, 1] = d2[pair_idx]
        out[:, 0, 2] = b1[pair_idx]
        out[:, 0, 3] = b2[pair_idx]
        out[:, 2, 2] = b11
        out[:, 2, 3] = b12
        out[:, 3, 2] = b21
        out[:, 3, 3] = b22
        chunks.append(out)
    return np.concatenate(chunks, axis=0)


def _conjugator_pair(ctx: GroupContext, alpha, beta: int) -> tuple[np.ndarray, np.ndarray]:
    t = np.array(transvection(ctx, alpha, beta).rows, dtype=np.int64)
    tinv = np.array(transvection(ctx, alpha, -beta).rows, dtype=np.int64)
    return t, tinv


class FixedVectorSet:
    """A materialized (or formula-only) layer of the construction.

    Materialized sets hold their elements as sorted packed integer keys, so
    membership is a binary search and dumps are canonically ordered.
    ``cardinality`` is always the measured deduplicated count for
    materialized sets and the closed-formula value otherwise.
    """

    def __init__(self, ctx: GroupContext, selector: Selector, level: SetLevel,
                 strategy: BlockStrategy, cardinality: int,
                 keys: np.ndarray | None):
        self.ctx = ctx
        self.selector = selector
        self.level = level
        self.strategy = strategy
        self.cardinality = cardinality
        self.keys = keys

    @property
    def is_materialized(self) -> bool:
        return self.keys is not None

    def _require_keys(self) -> np.ndarray:
        if self.keys is None:
            raise ValueError("set is not materialized")
        return self.keys

    def contains_flat(self, flat: np.ndarray) -> np.ndarray:
        """Membership mask for an (N, dim*dim) int64 entry array."""
        keys = self._require_keys()
        q = _gf.pack_entries(np.asarray(flat, dtype=np.int64), self.ctx.modulus.n)
        return _gf.searchsorted_keys(keys, q)

    def contains(self, mat: ModMatrix) -> bool:
        if mat.modulus != self.ctx.modulus or mat.dim != self.ctx.dim:
            raise ValueError("matrix does not match the set's context")
        flat = np.array([mat.flat()], dtype=np.int64)
        return bool(self.contains_flat(flat)[0])

    def iter_entries(self, chunk: int = 1 << 16) -> Iterator[np.ndarray]:
        keys = self._require_keys()
        dd = self.ctx.dim * self.ctx.dim
        for start in range(0, keys.shape[0], chunk):
            yield _gf.unpack_entries(keys[start:start + chunk], self.ctx.modulus.n, dd)

    def __iter__(self) -> Iterator[ModMatrix]:
        d = self.ctx.dim
        for block in self.iter_entries():
            for flat in block:
                vals = [int(x) for x in flat]
                yield ModMatrix.from_rows(self.ctx.modulus,
                                          [vals[i * d:(i + 1) * d] for i in range(d)])

    def dump(self, fh: TextIO) -> int:
        """Write the canonical sorted dump in the one-matrix-per-line format."""
        keys = self._require_keys()
        fh.write(header_line(self.ctx.dim, self.ctx.modulus.n) + "\n")
        for block in self.iter_entries():
            for flat in block:
                fh.write(matrix_line(flat) + "\n")
        return keys.shape[0]

    def sidecar(self) -> dict:
        q = self.ctx.q
        info = {
            "g": self.ctx.g,
            "n": self.ctx.modulus.n,
            "q": "inf" if isinstance(q, _Infinity) else q,
            "level": self.level.value,
            "strategy": self.strategy.value,
            "cardinality": str(self.cardinality),
            "seed-independent": True,
        }
        if isinstance(self.selector, SingleMultiplier):
            info["lam"] = self.selector.value
        return info

    def write_sidecar(self, fh: TextIO) -> None:
        json.dump(self.sidecar(), fh, indent=2)
        fh.write("\n")

    @classmethod
    def load(cls, fh: TextIO, ctx: GroupContext, selector: Selector,
             level: SetLevel, strategy: BlockStrategy) -> "FixedVectorSet":
        flats = []
        for mat in read_matrices(fh):
            if mat.modulus != ctx.modulus or mat.dim != ctx.dim:
                raise ValueError("dump does not match the context")
            flats.append(mat.flat())
        arr = np.array(flats, dtype=np.int64).reshape(len(flats), ctx.dim * ctx.dim)
        keys = _gf.unique_keys(_gf.pack_entries(arr, ctx.modulus.n))
        if keys.shape[0] != len(flats):
            raise ValueError("dump contains duplicate matrices")
        return cls(ctx, selector, level, strategy, keys.shape[0], keys)


def build_core_set(ctx: GroupContext, lam: int,
                   strategy: BlockStrategy = BlockStrategy.LEX_CANONICAL,
                   allow_large: bool = False) -> FixedVectorSet:
    """Materialize the core layer for one multiplier (g = 2)."""
    ell = _require_materializable(ctx, strategy, allow_large)
    entries = _core_entries(ctx, lam, strategy)
    keys = _gf.unique_keys(_gf.pack_entries(entries.reshape(entries.shape[0], -1), ell))
    return FixedVectorSet(ctx, SingleMultiplier(lam % ell), SetLevel.CORE,
                          strategy, keys.shape[0], keys)


def _full_keys(ctx: GroupContext, lam: int, strategy: BlockStrategy) -> np.ndarray:
    ell = ctx.modulus.n
    core = _core_entries(ctx, lam, strategy)
    parts = [_gf.pack_entries(core.reshape(core.shape[0], -1), ell)]
    for a3 in range(ell):
        for a4 in range(ell):
            for beta in range(1, ell):
                t, tinv = _conjugator_pair(ctx, (a3, a4), beta)
                conj = np.matmul(np.matmul(tinv, core) % ell, t) % ell
                parts.append(_gf.pack_entries(conj.reshape(conj.shape[0], -1), ell))
    return _gf.unique_keys(np.concatenate(parts, axis=0))


def build_full_set(ctx: GroupContext, lam: int,
                   strategy: BlockStrategy = BlockStrategy.LEX_CANONICAL,
                   allow_large: bool = False) -> FixedVectorSet:
    """Materialize the full (conjugation-closed) layer for one multiplier."""
    ell = _require_materializable(ctx, strategy, allow_large)
    keys = _full_keys(ctx, lam, strategy)
    return FixedVectorSet(ctx, SingleMultiplier(lam % ell), SetLevel.FULL,
                          strategy, keys.shape[0], keys)


def build_union_set(ctx: GroupContext,
                    strategy: BlockStrategy = BlockStrategy.LEX_CANONICAL,
                    allow_large: bool = False) -> FixedVectorSet:
    """Materialize the union over all admissible multipliers of the context."""
    ell = _require_materializable(ctx, strategy, allow_large)
    parts = [_full_keys(ctx, lam, strategy) for lam in ctx.multiplier_values(ell)]
    keys = _gf.unique_keys(np.concatenate(parts, axis=0))
    selector: Selector = AllUnits() if isinstance(ctx.q, _Infinity) else PowersOfQ()
    return FixedVectorSet(ctx, selector, SetLevel.UNION, strategy,
                          keys.shape[0], keys)


# -- membership without materialization --

class DirectMembership:
    """Union-level membership decided by decomposition instead of lookup.

    A candidate is in the union layer iff its fixed space is exactly one
    line, that line meets the orbit of e_1 under the shear conjugators
    (equivalently, contains a vector (1, b, c, d) with the right shape), and
    conjugating back by the unique shear lands in the core layer: e_1-fixing
    shape, block in the chosen pool, corner entry off the excluded value.
    Works for any prime ell at g = 2 with O(1) memory in the set size, which
    is what makes simulation at moduli whose materialized sets would not fit
    in RAM possible.
    """

    def __init__(self, ctx: GroupContext,
                 strategy: BlockStrategy = BlockStrategy.LEX_CANONICAL):
        ell = _require_constructible(ctx, strategy)
        if ctx.g != 2:
            raise ValueError("direct membership is implemented for g = 2 only")
        self.ctx = ctx
        self.strategy = strategy
        self.ell = ell
        self._by_lam: dict[int, dict[tuple, np.ndarray]] = {}
        for lam in ctx.multiplier_values(ell):
            table = {}
            for blk in _blocks_entries(ctx, lam, strategy):
                b11, b12, b21, b22 = (int(blk[0, 0]), int(blk[0, 1]),
                                      int(blk[1, 0]), int(blk[1, 1]))
                ib = np.array([[1 - b11, -b12], [-b21, 1 - b22]], dtype=np.int64) % ell
                det = int(ib[0, 0] * ib[1, 1] - ib[0, 1] * ib[1, 0]) % ell
                dinv = pow(det, -1, ell)
                minv = np.array([[ib[1, 1], -ib[0, 1]], [-ib[1, 0], ib[0, 0]]],
                                dtype=np.int64) * dinv % ell
                table[(b11, b12, b21, b22)] = minv
            self._by_lam[lam] = table

    @property
    def cardinality(self) -> int:
        return union_cardinality(self.ctx.g, self.ell, self.ctx.q, self.strategy)

    def contains(self, mat: ModMatrix) -> bool:
        if mat.modulus != self.ctx.modulus or mat.dim != self.ctx.dim:
            raise ValueError("matrix does not match the context")
        return self.contains_rows([list(r) for r in mat.rows])

    def contains_rows(self, rows: list[list[int]]) -> bool:
        ell = self.ell
        try:
            lam = multiplier(GroupContext(self.ctx.g, self.ctx.modulus),
                             ModMatrix.from_rows(self.ctx.modulus, rows))
        except NotSimilitude:
            return False
        table = self._by_lam.get(lam)
        if table is None:
            return False
        # fixed space must be exactly one line
        shifted = [[(x - (1 if i == j else 0)) % ell for j, x in enumerate(row)]
                   for i, row in enumerate(rows)]
        ker = kernel_basis(shifted, ell)
        if len(ker) != 1:
            return False
        v = ker[0]
        if v[0] % ell == 0:
            return False
        scale = pow(v[0], -1, ell)
        v = [x * scale % ell for x in v]
        if v[1] == 0:
            if any(v[k] for k in range(2, len(v))):
                return False
            core = rows
        else:
            beta = (-v[1]) % ell
            inv1 = pow(v[1], -1, ell)
            alpha = [x * inv1 % ell for x in v[2:]]
            t = np.array(transvection(self.ctx, alpha, beta).rows, dtype=np.int64)
            tinv = np.array(transvection(self.ctx, alpha, -beta).rows, dtype=np.int64)
            core = (t @ np.array(rows, dtype=np.int64) @ tinv % ell).tolist()
        if any(core[i][0] != (1 if i == 0 else 0) for i in range(4)):
            return False
        key = (core[2][2], core[2][3], core[3][2], core[3][3])
        minv = table.get(key)
        if minv is None:
            return False
        d1, d2 = core[2][1], core[3][1]
        b1, b2 = core[0][2], core[0][3]
        t1 = (int(minv[0, 0]) * d1 + int(minv[0, 1]) * d2) % ell
        t2 = (int(minv[1, 0]) * d1 + int(minv[1, 1]) * d2) % ell
        excluded = (-(b1 * t1 + b2 * t2)) % ell
        return core[0][1] != excluded


class CompositeUnionSet:
    """Union-level membership over a squarefree composite modulus.

    A matrix belongs iff it lies in the context's similitude class mod n
    (one global multiplier) and each prime reduction belongs to that prime's
    union layer.
    """

    def __init__(self, ctx: GroupContext,
                 parts: Mapping[int, FixedVectorSet | DirectMembership]):
        if set(parts) != set(ctx.modulus.primes):
            raise ValueError("need one per-prime part for every prime factor")
        self.ctx = ctx
        self.parts = dict(parts)

    @classmethod
    def direct(cls, ctx: GroupContext,
               strategy: BlockStrategy = BlockStrategy.LEX_CANONICAL) -> "CompositeUnionSet":
        return cls(ctx, {ell: DirectMembership(ctx.restrict(ell), strategy)
                         for ell in ctx.modulus.primes})

    @property
    def cardinality(self) -> int:
        strategies = {p.strategy for p in self.parts.values()}
        if len(strategies) != 1:
            raise ValueError("mixed block strategies across primes")
        return composite_union_cardinality(self.ctx.g, self.ctx.modulus.n,
                                           self.ctx.q, strategies.pop())

    def contains(self, mat: ModMatrix) -> bool:
        if not is_member(self.ctx, mat):
            return False
        return all(self.parts[ell].contains(reduce_mod(mat, ell))
                   for ell in self.ctx.modulus.primes)


def membership(s: FixedVectorSet | DirectMembership | CompositeUnionSet,
               mat: ModMatrix) -> bool:
    """Uniform entry point over the three membership carriers."""
    return s.contains(mat)


# -- witnesses for g >= 3 (or any g >= 2) --

def sample_core_witness(ctx: GroupContext, lam: int, seed: int, index: int) -> ModMatrix:
    """A random matrix of the core shape, built by construction.

    The block is drawn uniformly among eigenvalue-one-free similitudes of
    the right multiplier (all of them, not the canonical pool, which is not
    enumerable beyond g = 2), so witnesses demonstrate the structural
    properties of the family rather than membership in one pinned set.
    """
    ell = _require_constructible(ctx, BlockStrategy.LEX_CANONICAL)
    lam %= ell
    if math.gcd(lam, ell) != 1:
        raise ValueError(f"multiplier {lam} is not a unit mod {ell}")
    rng = CounterRng(seed, index)
    d = ctx.dim
    while True:
        block_rows = sample_entries(ctx.g - 1, ell, lam, rng)
        id_minus = [[((1 if i == j else 0) - x) % ell for j, x in enumerate(row)]
                    for i, row in enumerate(block_rows)]
        if rank_mod(id_minus, ell) == d - 2:
            break
    block = ModMatrix.from_rows(ctx.modulus, block_rows)
    d_vec = tuple(rng.below(ell) for _ in range(d - 2))
    # excluded corner value: -(b row) (I - B)^{-1} d_vec
    m_inv = mat_inv(ModMatrix.from_rows(ctx.modulus, id_minus))
    inv_lam = pow(lam, -1, ell)
    b = []
    for k in range(d - 2):
        acc = 0
        for j in range(ctx.g - 1):
            acc += d_vec[2 * j] * block.rows[2 * j + 1][k] - d_vec[2 * j + 1] * block.rows[2 * j][k]
        b.append(acc * inv_lam % ell)
    t = [sum(m_inv.rows[i][j] * d_vec[j] for j in range(d - 2)) % ell for i in range(d - 2)]
    excluded = (-sum(x * y for x, y in zip(b, t))) % ell
    d_val = (excluded + 1 + rng.below(ell - 1)) % ell
    return stabilizer_matrix(ctx, StabilizerParams(lam, d_val, d_vec, block))


def sample_full_witness(ctx: GroupContext, lam: int, seed: int, index: int) -> ModMatrix:
    """A core witness conjugated by a random shear."""
    core = sample_core_witness(ctx, lam, seed, index)
    rng = CounterRng(seed ^ 0x5CA1AB1E, index)
    ell = ctx.modulus.n
    alpha = [rng.below(ell) for _ in range(ctx.dim - 2)]
    beta = rng.below(ell)
    t = transvection(ctx, alpha, beta)
    tinv = transvection(ctx, alpha, -beta)
    return tinv @ core @ t
