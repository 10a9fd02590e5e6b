"""Seeded simulation of tuples of similitudes and their fixed-vector events.

Sampling protocol (deterministic in (seed, index), see prng): each sample
index owns one stream.  A tuple over a composite squarefree modulus draws,
per slot, one global multiplier exponent (finite q) or independent unit
multipliers per prime (q = INFINITY), then one uniform coset element per
prime factor in ascending order; the per-prime draws CRT-lift to the
element mod n.  Drawing the exponent once per slot is what makes the
per-prime hit events exactly independent with the product density.

Events:

* set hit -- the slot-one element reduces into the union-level
  fixed-vector set at a prime (decided by DirectMembership, so no
  materialization is needed even at primes whose sets would not fit in
  memory);
* joint set hit -- simultaneous set hits at several primes;
* common fixed vector -- the e matrices of the tuple share a nonzero fixed
  vector mod a prime, tested as rank(stack of (A_i - I)) < 2g.

Estimates carry binomial standard errors, the exact value when one is
computable, and the projective union bound for common-fixed-vector events.
Work partitions across threads by sample index without changing any output.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union

from .analysis import density_ratio, frac_str, pow_enclosure
from .modmat import ModMatrix, Modulus, crt_lift, rank_mod
from .prng import CounterRng
from .specialsets import BlockStrategy, DirectMembership
from .sympgroup import (
    GroupContext,
    _Infinity,
    gsp_q_order,
    multiplicative_order,
    sample_entries,
)


@dataclass(frozen=True)
class SampleTuple:
    """An e-tuple of group elements over Z/n with its provenance."""

    ctx: GroupContext
    elements: tuple[ModMatrix, ...]
    seed: int
    index: int


@dataclass(frozen=True)
class FixedVectorEvent:
    """The tuple has a common nonzero fixed vector mod ell."""

    ell: int

    def name(self) -> str:
        return f"fixed-vector({self.ell})"


@dataclass(frozen=True)
class SetHitEvent:
    """The slot-one element lies in the union-level set mod ell."""

    ell: int

    def name(self) -> str:
        return f"set-hit({self.ell})"


@dataclass(frozen=True)
class JointSetHitEvent:
    """Simultaneous set hits at every listed prime."""

    ells: tuple[int, ...]

    def name(self) -> str:
        return "joint-set-hit(" + ",".join(str(x) for x in self.ells) + ")"


Event = Union[FixedVectorEvent, SetHitEvent, JointSetHitEvent]


@dataclass(frozen=True)
class EventEstimate:
    event_name: str
    n_samples: int
    hits: int
    estimate: Fraction
    std_error: float
    exact_value: Fraction | None = None
    bound: Fraction | None = None

    def as_report_dict(self) -> dict:
        out = {
            "event": self.event_name,
            "n_samples": self.n_samples,
            "hits": self.hits,
            "estimate": frac_str(self.estimate),
            "estimate_float": float(self.estimate),
            "std_error": self.std_error,
        }
        if self.exact_value is not None:
            out["exact_value"] = frac_str(self.exact_value)
            out["exact_value_float"] = float(self.exact_value)
        if self.bound is not None:
            out["bound"] = frac_str(self.bound)
            out["bound_float"] = float(self.bound)
        return out


def _binomial_se(hits: int, n: int) -> float:
    p = hits / n
    return math.sqrt(p * (1.0 - p) / n)


def _draw_rows_by_prime(ctx: GroupContext, e: int, rng: CounterRng) -> dict[int, list[list[list[int]]]]:
    """Per-prime row matrices of one e-tuple: out[ell][slot] = rows."""
    n = ctx.modulus.n
    out: dict[int, list] = {ell: [] for ell in ctx.modulus.primes}
    finite = not isinstance(ctx.q, _Infinity)
    ord_n = multiplicative_order(ctx.q, n) if finite else 0
    for _ in range(e):
        if finite:
            exp = rng.below(ord_n) + 1
        for ell in ctx.modulus.primes:
            if finite:
                lam = pow(ctx.q, exp, ell)
            else:
                lam = 1 + rng.below(ell - 1)
            out[ell].append(sample_entries(ctx.g, ell, lam, rng))
    return out


def sample_tuple(ctx: GroupContext, e: int, seed: int, index: int) -> SampleTuple:
    """e independent uniform draws from the context's class over Z/n."""
    if e < 1:
        raise ValueError("e must be >= 1")
    rng = CounterRng(seed, index)
    by_prime = _draw_rows_by_prime(ctx, e, rng)
    elements = []
    for slot in range(e):
        residues = [ModMatrix.from_rows(Modulus.of(ell), by_prime[ell][slot])
                    for ell in ctx.modulus.primes]
        elements.append(residues[0] if len(residues) == 1 else crt_lift(residues))
    return SampleTuple(ctx, tuple(elements), seed, index)


def _stacked_rank_deficient(rows_list: Sequence[Sequence[Sequence[int]]], ell: int, dim: int) -> bool:
    stacked = []
    for rows in rows_list:
        for i, row in enumerate(rows):
            stacked.append([(x - (1 if i == j else 0)) % ell for j, x in enumerate(row)])
    return rank_mod(stacked, ell) < dim


def has_common_fixed_vector(sig: SampleTuple, ell: int) -> bool:
    """True iff the reductions mod ell share a nonzero fixed vector."""
    if ell not in sig.ctx.modulus.primes:
        raise ValueError(f"{ell} does not divide the modulus {sig.ctx.modulus.n}")
    rows_list = [[[x % ell for x in row] for row in m.rows] for m in sig.elements]
    return _stacked_rank_deficient(rows_list, ell, sig.ctx.dim)


def exact_common_fixed_fraction(ctx: GroupContext, ell: int, e: int) -> Fraction:
    """Exact probability that an e-tuple shares a fixed vector (g = 1).

    In dimension two the fixed-space lattice is lines only: the event is the
    union over the ell + 1 lines of "every slot restricts to the identity
    there", the per-line count is the same by transitivity, and any two
    lines overlap only in the identity tuple.  That gives
    m * (n1^e - 1) + 1 favourable tuples with m = ell + 1 and n1 the number
    of elements fixing e_1 pointwise.
    """
    if ctx.g != 1:
        raise ValueError("exact mode is implemented for g = 1 only")
    if ell not in ctx.modulus.primes:
        raise ValueError(f"{ell} does not divide the modulus {ctx.modulus.n}")
    if e < 1:
        raise ValueError("e must be >= 1")
    sub = ctx.restrict(ell)
    n1 = ell * len(sub.multiplier_values(ell))
    size = gsp_q_order(sub)
    m = ell + 1
    return Fraction(m * (n1 ** e - 1) + 1, size ** e)


def common_fixed_upper_bound(ctx: GroupContext, ell: int, e: int) -> Fraction:
    """Projective union bound (ell^2g - 1)/(ell - 1) * |G_ell|^(-e/2g).

    Upper enclosure of the fractional power, so the bound is safe to compare
    against from below.
    """
    if ell not in ctx.modulus.primes:
        raise ValueError(f"{ell} does not divide the modulus {ctx.modulus.n}")
    if e < 1:
        raise ValueError("e must be >= 1")
    size = gsp_q_order(ctx.restrict(ell))
    _, hi = pow_enclosure(size, -e, 2 * ctx.g)
    return Fraction(ell ** (2 * ctx.g) - 1, ell - 1) * hi


def _split_ranges(n: int, parts: int) -> list[range]:
    parts = max(1, min(parts, n)) if n else 1
    step = -(-n // parts)
    return [range(lo, min(lo + step, n)) for lo in range(0, n, step)]


def estimate_events(ctx: GroupContext, events: Sequence[Event], e: int,
                    n_samples: int, seed: int, threads: int = 1,
                    strategy: BlockStrategy = BlockStrategy.LEX_CANONICAL) -> list[EventEstimate]:
    """Monte Carlo estimates of several events over one shared sample stream.

    All events are evaluated on the same n_samples tuples, so a joint event
    and its marginals come from identical draws.  Output is independent of
    ``threads``.
    """
    if e < 1 or n_samples < 1:
        raise ValueError("need e >= 1 and n_samples >= 1")
    need_sets = set()
    for ev in events:
        if isinstance(ev, SetHitEvent):
            need_sets.add(ev.ell)
        elif isinstance(ev, JointSetHitEvent):
            need_sets.update(ev.ells)
        for ell in ([ev.ell] if not isinstance(ev, JointSetHitEvent) else list(ev.ells)):
            if ell not in ctx.modulus.primes:
                raise ValueError(f"event prime {ell} does not divide the modulus")
    if need_sets and e != 1:
        raise ValueError("set-hit events are defined for e = 1 tuples")
    testers = {ell: DirectMembership(ctx.restrict(ell), strategy) for ell in sorted(need_sets)}

    def run(rng_range: range) -> list[int]:
        hits = [0] * len(events)
        for index in rng_range:
            rng = CounterRng(seed, index)
            by_prime = _draw_rows_by_prime(ctx, e, rng)
            in_set = {ell: testers[ell].contains_rows(by_prime[ell][0]) for ell in testers}
            for k, ev in enumerate(events):
                if isinstance(ev, SetHitEvent):
                    ok = in_set[ev.ell]
                elif isinstance(ev, JointSetHitEvent):
                    ok = all(in_set[ell] for ell in ev.ells)
                else:
                    ok = _stacked_rank_deficient(by_prime[ev.ell], ev.ell, ctx.dim)
                hits[k] += ok
        return hits

    ranges = _split_ranges(n_samples, threads)
    if len(ranges) == 1:
        totals = run(ranges[0])
    else:
        with ThreadPoolExecutor(max_workers=len(ranges)) as pool:
            parts = list(pool.map(run, ranges))
        totals = [sum(col) for col in zip(*parts)]

    out = []
    for ev, hits in zip(events, totals):
        exact = bound = None
        if isinstance(ev, SetHitEvent):
            exact = density_ratio(ctx.g, ev.ell, ctx.q)
        elif isinstance(ev, JointSetHitEvent):
            exact = math.prod((density_ratio(ctx.g, ell, ctx.q) for ell in ev.ells),
                              start=Fraction(1))
        else:
            bound = common_fixed_upper_bound(ctx, ev.ell, e)
            if ctx.g == 1:
                exact = exact_common_fixed_fraction(ctx, ev.ell, e)
        out.append(EventEstimate(ev.name(), n_samples, hits,
                                 Fraction(hits, n_samples),
                                 _binomial_se(hits, n_samples), exact, bound))
    return out


def estimate_event(ctx: GroupContext, event: Event, e: int, n_samples: int,
                   seed: int, threads: int = 1,
                   strategy: BlockStrategy = BlockStrategy.LEX_CANONICAL) -> EventEstimate:
    return estimate_events(ctx, [event], e, n_samples, seed, threads, strategy)[0]


@dataclass(frozen=True)
class BorelCantelliReport:
    """Hit statistics of per-prime event streams over a prime range.

    Each sample is one stream: an independent e-tuple is drawn at every
    prime of the range and the event evaluated there.  ``regime`` is
    "part-a" (e = 1, set hits: divergent expected sum) or "part-b"
    (e >= 2, common-fixed-vector events: summable expected sum).  The
    threshold is the first prime of the upper half of the range;
    frac_tail_hit is the fraction of streams with at least one hit at or
    past it, frac_zero_tail its complement.
    """

    regime: str
    g: int
    q: int | _Infinity
    e: int
    ells: tuple[int, ...]
    n_samples: int
    seed: int
    per_ell: tuple[EventEstimate, ...]
    hist: dict[int, int]
    mean_hits: float
    mean_std_error: float
    expected_mean: Fraction
    threshold: int | None
    frac_tail_hit: float
    frac_zero_tail: float

    def as_report_dict(self) -> dict:
        return {
            "regime": self.regime,
            "g": self.g,
            "q": "inf" if isinstance(self.q, _Infinity) else self.q,
            "e": self.e,
            "ells": list(self.ells),
            "n_samples": self.n_samples,
            "seed": self.seed,
            "per_ell": [est.as_report_dict() for est in self.per_ell],
            "hit_histogram": {str(k): v for k, v in sorted(self.hist.items())},
            "mean_hits": self.mean_hits,
            "mean_std_error": self.mean_std_error,
            "expected_mean": frac_str(self.expected_mean),
            "expected_mean_float": float(self.expected_mean),
            "threshold": self.threshold,
            "frac_tail_hit": self.frac_tail_hit,
            "frac_zero_tail": self.frac_zero_tail,
        }


def borel_cantelli_experiment(g: int, q: int | _Infinity, ells: Sequence[int],
                              e: int, n_samples: int, seed: int, threads: int = 1,
                              strategy: BlockStrategy = BlockStrategy.LEX_CANONICAL) -> BorelCantelliReport:
    """Simulate per-prime event streams and summarize their hit counts.

    Any finite range can only exhibit the monotone trend of the zero-one
    behaviour, never verify it; the report is finite-range evidence.
    """
    if e < 1 or n_samples < 1:
        raise ValueError("need e >= 1 and n_samples >= 1")
    ells = tuple(sorted(ells))
    if len(set(ells)) != len(ells):
        raise ValueError("primes must be distinct")
    contexts = {ell: GroupContext.of(g, ell, q) for ell in ells}
    values_by_ell = {ell: contexts[ell].multiplier_values(ell) for ell in ells}
    part_a = e == 1
    testers = {}
    if part_a:
        for ell in ells:
            testers[ell] = DirectMembership(contexts[ell], strategy)

    def run(rng_range: range):
        per_ell = [0] * len(ells)
        hist: dict[int, int] = {}
        tail_hit = 0
        mid = len(ells) // 2
        for index in rng_range:
            rng = CounterRng(seed, index)
            count = 0
            tail = False
            for k, ell in enumerate(ells):
                values = values_by_ell[ell]
                rows_list = []
                for _ in range(e):
                    lam = values[rng.below(len(values))]
                    rows_list.append(sample_entries(g, ell, lam, rng))
                if part_a:
                    hit = testers[ell].contains_rows(rows_list[0])
                else:
                    hit = _stacked_rank_deficient(rows_list, ell, 2 * g)
                if hit:
                    per_ell[k] += 1
                    count += 1
                    if k >= mid:
                        tail = True
            hist[count] = hist.get(count, 0) + 1
            tail_hit += tail
        return per_ell, hist, tail_hit

    ranges = _split_ranges(n_samples, threads)
    if len(ranges) == 1:
        results = [run(ranges[0])]
    else:
        with ThreadPoolExecutor(max_workers=len(ranges)) as pool:
            results = list(pool.map(run, ranges))
    per_ell = [sum(r[0][k] for r in results) for k in range(len(ells))]
    hist: dict[int, int] = {}
    for r in results:
        for k, v in r[1].items():
            hist[k] = hist.get(k, 0) + v
    tail_hit = sum(r[2] for r in results)

    estimates = []
    expected = Fraction(0)
    var_sum = 0.0
    for k, ell in enumerate(ells):
        ctx = contexts[ell]
        if part_a:
            exact = density_ratio(g, ell, q)
            bound = None
            expected += exact
        else:
            exact = exact_common_fixed_fraction(ctx, ell, e) if g == 1 else None
            bound = common_fixed_upper_bound(ctx, ell, e)
            expected += bound
        name = SetHitEvent(ell).name() if part_a else FixedVectorEvent(ell).name()
        estimates.append(EventEstimate(name, n_samples, per_ell[k],
                                       Fraction(per_ell[k], n_samples),
                                       _binomial_se(per_ell[k], n_samples),
                                       exact, bound))
        p = per_ell[k] / n_samples
        var_sum += p * (1.0 - p)
    mean_hits = sum(per_ell) / n_samples
    threshold = ells[len(ells) // 2] if ells else None
    frac_tail = tail_hit / n_samples
    if not ells:
        hist = {0: n_samples}
    return BorelCantelliReport(
        regime="part-a" if part_a else "part-b",
        g=g, q=q, e=e, ells=ells, n_samples=n_samples, seed=seed,
        per_ell=tuple(estimates), hist=hist,
        mean_hits=mean_hits, mean_std_error=math.sqrt(var_sum / n_samples),
        expected_mean=expected, threshold=threshold,
        frac_tail_hit=frac_tail, frac_zero_tail=1.0 - frac_tail,
    )
