"""Exact linear algebra over Z/n for squarefree n.

Matrices and vectors carry their modulus; every operation reduces
immediately and works in plain integer arithmetic, so all results are exact.
Over a prime modulus the usual Gaussian elimination applies (unit pivots via
the extended Euclid behind ``pow(x, -1, p)``); over a composite squarefree
modulus, determinants and inverses are computed per prime factor and
recombined with the Chinese Remainder Theorem, which sidesteps zero-divisor
pivoting entirely.

All values are immutable after construction and all operations are pure, so
everything here is safe to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence, TextIO

MAX_DIM = 16


class NotInvertible(ValueError):
    """The matrix determinant shares a factor with the modulus."""


def factor_squarefree(n: int) -> tuple[int, ...]:
    """Factor n into distinct primes; raise if n is not squarefree or < 2."""
    if n < 2:
        raise ValueError(f"modulus must be >= 2, got {n}")
    primes = []
    m = n
    p = 2
    while p * p <= m:
        if m % p == 0:
            m //= p
            if m % p == 0:
                raise ValueError(f"modulus {n} is not squarefree (divisible by {p}^2)")
            primes.append(p)
        p += 1 if p == 2 else 2
    if m > 1:
        primes.append(m)
    return tuple(primes)


@dataclass(frozen=True)
class Modulus:
    """A squarefree modulus n together with its prime factorization."""

    n: int
    primes: tuple[int, ...]

    def __post_init__(self):
        if list(self.primes) != sorted(set(self.primes)):
            raise ValueError("prime factors must be distinct and ascending")
        if math.prod(self.primes) != self.n:
            raise ValueError("prime factors do not multiply to the modulus")

    @classmethod
    def of(cls, n: int) -> "Modulus":
        return cls(n, factor_squarefree(n))

    @property
    def is_prime(self) -> bool:
        return len(self.primes) == 1


@dataclass(frozen=True)
class ModMatrix:
    """Square matrix over Z/n, entries stored reduced in [0, n)."""

    modulus: Modulus
    rows: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        d = len(self.rows)
        if d == 0 or d > MAX_DIM:
            raise ValueError(f"dimension must be in [1, {MAX_DIM}], got {d}")
        n = self.modulus.n
        for row in self.rows:
            if len(row) != d:
                raise ValueError("matrix must be square")
            for x in row:
                if not 0 <= x < n:
                    raise ValueError(f"entry {x} out of range [0, {n})")

    @property
    def dim(self) -> int:
        return len(self.rows)

    @classmethod
    def from_rows(cls, modulus: Modulus, rows: Sequence[Sequence[int]]) -> "ModMatrix":
        n = modulus.n
        return cls(modulus, tuple(tuple(int(x) % n for x in row) for row in rows))

    @classmethod
    def identity(cls, modulus: Modulus, dim: int) -> "ModMatrix":
        return cls(modulus, tuple(tuple(1 if i == j else 0 for j in range(dim)) for i in range(dim)))

    def flat(self) -> tuple[int, ...]:
        return tuple(x for row in self.rows for x in row)

    def __matmul__(self, other: "ModMatrix") -> "ModMatrix":
        return mat_mul(self, other)


@dataclass(frozen=True)
class ModVector:
    modulus: Modulus
    entries: tuple[int, ...]

    def __post_init__(self):
        n = self.modulus.n
        for x in self.entries:
            if not 0 <= x < n:
                raise ValueError(f"entry {x} out of range [0, {n})")

    @property
    def dim(self) -> int:
        return len(self.entries)

    @classmethod
    def from_entries(cls, modulus: Modulus, entries: Sequence[int]) -> "ModVector":
        n = modulus.n
        return cls(modulus, tuple(int(x) % n for x in entries))

    @classmethod
    def basis_vector(cls, modulus: Modulus, dim: int, i: int) -> "ModVector":
        return cls(modulus, tuple(1 if j == i else 0 for j in range(dim)))


def _require_same(a: ModMatrix, b: ModMatrix) -> None:
    if a.modulus != b.modulus:
        raise ValueError(f"modulus mismatch: {a.modulus.n} vs {b.modulus.n}")
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")


def mat_mul(a: ModMatrix, b: ModMatrix) -> ModMatrix:
    """Matrix product with entries reduced mod n."""
    _require_same(a, b)
    n = a.modulus.n
    d = a.dim
    bt = tuple(zip(*b.rows))
    rows = tuple(
        tuple(sum(x * y for x, y in zip(ar, bc)) % n for bc in bt) for ar in a.rows
    )
    return ModMatrix(a.modulus, rows)


def mat_vec(a: ModMatrix, v: ModVector) -> ModVector:
    if a.modulus != v.modulus or a.dim != v.dim:
        raise ValueError("modulus/dimension mismatch")
    n = a.modulus.n
    return ModVector(a.modulus, tuple(sum(x * y for x, y in zip(row, v.entries)) % n for row in a.rows))


# -- prime-field elimination helpers (plain lists of ints) --

def rref_mod(rows: list[list[int]], p: int) -> tuple[list[list[int]], list[int]]:
    """Reduced row echelon form over GF(p). Returns (rref, pivot columns)."""
    a = [[x % p for x in row] for row in rows]
    m = len(a)
    cols = len(a[0]) if m else 0
    piv_cols: list[int] = []
    r = 0
    for c in range(cols):
        piv = next((i for i in range(r, m) if a[i][c]), None)
        if piv is None:
            continue
        a[r], a[piv] = a[piv], a[r]
        inv = pow(a[r][c], -1, p)
        a[r] = [x * inv % p for x in a[r]]
        for i in range(m):
            if i != r and a[i][c]:
                f = a[i][c]
                a[i] = [(x - f * y) % p for x, y in zip(a[i], a[r])]
        piv_cols.append(c)
        r += 1
        if r == m:
            break
    return a, piv_cols


def kernel_basis(rows: list[list[int]], p: int) -> list[list[int]]:
    """Basis of the right kernel over GF(p), in the canonical RREF form."""
    cols = len(rows[0]) if rows else 0
    rref, piv_cols = rref_mod(rows, p)
    piv_set = set(piv_cols)
    basis = []
    for f in range(cols):
        if f in piv_set:
            continue
        v = [0] * cols
        v[f] = 1
        for r, pc in enumerate(piv_cols):
            v[pc] = (-rref[r][f]) % p
        basis.append(v)
    return basis


def rank_mod(rows: list[list[int]], p: int) -> int:
    return len(rref_mod(rows, p)[1])


def _det_prime(rows: list[list[int]], p: int) -> int:
    a = [[x % p for x in row] for row in rows]
    d = len(a)
    det = 1
    for c in range(d):
        piv = next((i for i in range(c, d) if a[i][c]), None)
        if piv is None:
            return 0
        if piv != c:
            a[c], a[piv] = a[piv], a[c]
            det = -det
        det = det * a[c][c] % p
        inv = pow(a[c][c], -1, p)
        for i in range(c + 1, d):
            if a[i][c]:
                f = a[i][c] * inv % p
                a[i] = [(x - f * y) % p for x, y in zip(a[i], a[c])]
    return det % p


def _inv_prime(rows: list[list[int]], p: int) -> list[list[int]]:
    d = len(rows)
    aug = [list(row) + [1 if i == j else 0 for j in range(d)] for i, row in enumerate(rows)]
    rref, piv_cols = rref_mod(aug, p)
    if piv_cols[:d] != list(range(d)):
        raise NotInvertible(f"matrix is singular mod {p}")
    return [row[d:] for row in rref[:d]]


def crt_pair(r1: int, m1: int, r2: int, m2: int) -> int:
    """The residue mod m1*m2 reducing to r1 mod m1 and r2 mod m2 (coprime moduli)."""
    inv = pow(m1, -1, m2)
    return (r1 + (r2 - r1) * inv % m2 * m1) % (m1 * m2)


def det(a: ModMatrix) -> int:
    """Determinant mod n, computed per prime factor and CRT-recombined."""
    r, m = 0, 1
    for p in a.modulus.primes:
        dp = _det_prime([list(row) for row in a.rows], p)
        r, m = (crt_pair(r, m, dp, p), m * p) if m > 1 else (dp, p)
    return r


def mat_inv(a: ModMatrix) -> ModMatrix:
    """Inverse of a over Z/n; raises NotInvertible when gcd(det, n) > 1."""
    n = a.modulus.n
    d = math.gcd(det(a), n)
    if d != 1:
        raise NotInvertible(f"determinant shares factor {d} with modulus {n}")
    if a.modulus.is_prime:
        inv = _inv_prime([list(row) for row in a.rows], n)
        return ModMatrix.from_rows(a.modulus, inv)
    parts = [(_inv_prime([list(row) for row in a.rows], p), p) for p in a.modulus.primes]
    return crt_lift([ModMatrix.from_rows(Modulus.of(p), rows) for rows, p in parts])


def fixed_space(a: ModMatrix) -> list[ModVector]:
    """Canonical basis of ker(a - I) over the prime field of a's modulus.

    An empty list means only the zero vector is fixed.
    """
    if not a.modulus.is_prime:
        raise ValueError("fixed_space requires a prime modulus")
    p = a.modulus.n
    rows = [[(x - (1 if i == j else 0)) % p for j, x in enumerate(row)] for i, row in enumerate(a.rows)]
    return [ModVector.from_entries(a.modulus, v) for v in kernel_basis(rows, p)]


def has_eigenvalue_one(a: ModMatrix) -> bool:
    """True iff det(a - I) == 0 mod the (prime) modulus."""
    if not a.modulus.is_prime:
        raise ValueError("has_eigenvalue_one requires a prime modulus")
    p = a.modulus.n
    rows = [[(x - (1 if i == j else 0)) % p for j, x in enumerate(row)] for i, row in enumerate(a.rows)]
    return _det_prime(rows, p) == 0


def reduce_mod(a: ModMatrix, ell: int) -> ModMatrix:
    """Entrywise reduction of a to the prime factor ell of its modulus."""
    if ell not in a.modulus.primes:
        raise ValueError(f"{ell} does not divide the modulus {a.modulus.n}")
    m = Modulus.of(ell)
    return ModMatrix(m, tuple(tuple(x % ell for x in row) for row in a.rows))


def crt_lift(mats: Iterable[ModMatrix]) -> ModMatrix:
    """Lift per-prime residue matrices to the unique matrix mod the product.

    Each input matrix must live over a distinct prime modulus; ``reduce_mod``
    inverts the lift.
    """
    mats = list(mats)
    if not mats:
        raise ValueError("need at least one residue matrix")
    primes = []
    for m in mats:
        if not m.modulus.is_prime:
            raise ValueError("crt_lift inputs must have prime moduli")
        primes.append(m.modulus.n)
    if len(set(primes)) != len(primes):
        raise ValueError(f"duplicate primes in {primes}")
    d = mats[0].dim
    if any(m.dim != d for m in mats):
        raise ValueError("dimension mismatch among residues")
    order = sorted(range(len(mats)), key=lambda i: primes[i])
    acc = [[0] * d for _ in range(d)]
    mod = 1
    for i in order:
        p = primes[i]
        for r in range(d):
            for c in range(d):
                x = mats[i].rows[r][c]
                acc[r][c] = crt_pair(acc[r][c], mod, x, p) if mod > 1 else x
        mod *= p
    return ModMatrix.from_rows(Modulus.of(mod), acc)


# -- line-oriented serialization --
#
# One matrix per line: row-major decimal entries, comma-separated, no
# spaces.  A single header line "# dim=<d> mod=<n>" opens the stream.

def header_line(dim: int, n: int) -> str:
    return f"# dim={dim} mod={n}"


def matrix_line(flat_entries: Sequence[int]) -> str:
    return ",".join(str(int(x)) for x in flat_entries)


def parse_header(line: str) -> tuple[int, int]:
    parts = line.strip().split()
    if len(parts) != 3 or parts[0] != "#" or not parts[1].startswith("dim=") or not parts[2].startswith("mod="):
        raise ValueError(f"bad header line: {line!r}")
    return int(parts[1][4:]), int(parts[2][4:])


def write_matrices(fh: TextIO, flats: Iterable[Sequence[int]], dim: int, n: int) -> int:
    fh.write(header_line(dim, n) + "\n")
    count = 0
    for flat in flats:
        fh.write(matrix_line(flat) + "\n")
        count += 1
    return count


def read_matrices(fh: TextIO) -> Iterator[ModMatrix]:
    dim, n = parse_header(fh.readline())
    modulus = Modulus.of(n)
    for line in fh:
        line = line.strip()
        if not line:
            continue
        vals = [int(x) for x in line.split(",")]
        if len(vals) != dim * dim:
            raise ValueError(f"expected {dim * dim} entries, got {len(vals)}")
        yield ModMatrix.from_rows(modulus, [vals[i * dim:(i + 1) * dim] for i in range(dim)])
