"""Reachability of eigenfields through repeated interaction with a fixed
seed set, with machine-checkable certificates.

The seed is every eigenfield with frequency entries at most 3.  One step
maps a reached set E to E plus the span of all projected products between
a seed field and a reached field; the step is asymmetric on purpose (the
left factor ranges over the seed only).  Bookkeeping is per frequency: a
product contributes its branch-coefficient vector at each target
frequency, vectors are pooled over all generating pairs, and branch
indices are added according to the dimension and orientation of the
pooled span.  Rank decisions run in floating point (relative singular
value cut 1e-9); every newly reached branch is then backed by an exact
rational certificate (lengths converted exactly, pi factored out)
recomputed from the generating pair, so a float misdecision cannot go
unnoticed.
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .basis import (
    DomainSpec,
    Freq,
    ModeKey,
    enumerate_frequencies,
    mode_from_key,
    num_zero,
)
from .interact import advection_coeffs, project_components, project_exact
from .interact import _projection_solver

SEED_MAX_FREQ = 3
_REL_RANK_TOL = 1e-9


def branch_count(n: Freq) -> int:
    return 2 - num_zero(n)


def mode_keys_up_to(q: int) -> list[ModeKey]:
    """All (j, k) with entries of k at most q, ordered by (k, j)."""
    keys = []
    for k in enumerate_frequencies(q):
        for j in range(1, branch_count(k) + 1):
            keys.append((j, k))
    keys.sort(key=lambda kj: (kj[1], kj[0]))
    return keys


@dataclass(frozen=True)
class ModeSet:
    """Reached branches after some number of interaction steps."""

    generation: int
    members: frozenset

    def __contains__(self, key: ModeKey):
        return key in self.members

    def sorted_members(self) -> list[ModeKey]:
        return sorted(self.members, key=lambda kj: (kj[1], kj[0]))


@dataclass(frozen=True)
class Certificate:
    """Evidence that one branch is spanned by projected products.

    z_vectors are the exact per-frequency amplitudes of the generating
    product(s) with pi factored out.  det_value is the exact witness:
    the 3x3 determinant det(n, z, z') for a two-branch event ("det3"),
    the coefficient against the remaining branch when one branch was
    already reached ("det2"), or a single nonzero branch coefficient
    ("alpha1").
    """

    target: ModeKey
    pair_a: ModeKey
    pair_b: ModeKey
    z_vectors: tuple
    det_value: Fraction
    rank_evidence: str
    generation: int


def seed_set(domain: DomainSpec) -> ModeSet:
    """Generation-0 set: all branches with frequency entries at most 3."""
    return ModeSet(generation=0, members=frozenset(mode_keys_up_to(SEED_MAX_FREQ)))


def _exact_domain(domain: DomainSpec) -> tuple:
    return tuple(
        L if isinstance(L, Fraction) else Fraction(L) for L in domain.lengths
    )


class _Witness:
    __slots__ = ("a", "b", "alphas")

    def __init__(self, a, b, alphas):
        self.a, self.b, self.alphas = a, b, alphas


@lru_cache(maxsize=None)
def _float_amplitude(key: ModeKey, lengths):
    mode = mode_from_key(key, DomainSpec(*lengths))
    return tuple(map(float, mode.w))


def _pair_products(a_key, b_key, cutoff, domain):
    """Filtered per-frequency coefficient vectors of one product.

    The filter floor tracks the size of the individual terms summed into
    each amplitude (not the possibly cancelled sum), so coefficients that
    are exactly zero in real arithmetic cannot sneak in as round-off."""
    L = tuple(float(x) for x in domain.lengths)
    wa = _float_amplitude(a_key, L)
    wb = _float_amplitude(b_key, L)
    ka, kb = a_key[1], b_key[1]
    raw = advection_coeffs(ka, wa, kb, wb, L)
    beta_a = sum(abs(wa[i]) * kb[i] / L[i] for i in range(3)) / 8
    beta_b = sum(abs(wb[i]) * ka[i] / L[i] for i in range(3)) / 8
    summand = beta_a * max(map(abs, wb)) + beta_b * max(map(abs, wa))
    out = []
    for n, z in raw.items():
        if max(n) > cutoff or num_zero(n) >= 2:
            continue
        alphas, floor = project_components(n, z, domain)
        inv_scale = _projection_solver(n, L)[2]
        floor = max(10.0 * floor, 1e-13 * inv_scale * summand, 1e-300)
        if math.sqrt(sum(a * a for a in alphas)) > floor:
            out.append((n, alphas))
    return out


def _exact_witness(a_key, b_key, n, domain):
    """Exact z vector (pi factored) and branch coefficients for one pair."""
    L = _exact_domain(domain)
    dom = DomainSpec(*L)
    ma = mode_from_key(a_key, dom)
    mb = mode_from_key(b_key, dom)
    raw = advection_coeffs(ma.k, ma.w, mb.k, mb.w, L)
    z = raw.get(n)
    if z is None:
        return None, ()
    z = tuple(z)
    return z, project_exact(n, z, L)


def _decide_branches(n, witnesses, reached):
    """Which branches at frequency n the pooled witnesses span.

    Returns a set of branch indices (including already reached ones).
    For a two-branch frequency the pooled normalized rows plus the unit
    rows of reached branches are ranked by SVD; a rank-1 pool only counts
    if its principal direction is a coordinate axis, since only canonical
    branches are tracked.
    """
    nb = branch_count(n)
    have = set(reached)
    if not witnesses:
        return have
    if nb == 1:
        have.add(1)
        return have
    rows = [np.eye(2)[j - 1] for j in sorted(have)]
    rows += [np.array(w.alphas) / math.sqrt(sum(a * a for a in w.alphas)) for w in witnesses]
    mat = np.array(rows)
    svals = np.linalg.svd(mat, compute_uv=False)
    rank = int(np.sum(svals > _REL_RANK_TOL * svals[0]))
    if rank >= 2:
        return {1, 2}
    _, _, vt = np.linalg.svd(mat)
    v = vt[0]
    for j in (1, 2):
        if abs(v[2 - j]) <= _REL_RANK_TOL:
            have.add(j)
    return have


def _certify(n, witnesses, reached_before, generation, domain):
    """Exactly confirmed new branches at frequency n, with certificates.

    Floating point only proposes; membership is decided here.  Returns
    (confirmed branch set, certificates).  A single witness with exactly
    one nonzero coefficient certifies that branch; a witness pair with
    nonzero cross determinant certifies both; a witness whose coefficient
    against an already-reached branch's complement is nonzero certifies
    the complement.  A skew one-dimensional exact span certifies nothing.
    """
    ordered = sorted(witnesses, key=lambda w: (w.a[1], w.a[0], w.b[1], w.b[0]))
    lengths = _exact_domain(domain)
    cache: dict[int, tuple] = {}

    def exact(idx):
        if idx not in cache:
            w = ordered[idx]
            cache[idx] = _exact_witness(w.a, w.b, n, domain)
        return cache[idx]

    if branch_count(n) == 1:
        for i, w in enumerate(ordered):
            z, alphas = exact(i)
            if alphas and alphas[0] != 0:
                return {1}, [Certificate((1, n), w.a, w.b, (z,), alphas[0], "alpha1", generation)]
        return set(), []
    if reached_before:
        (j1,) = {1, 2} - set(reached_before)
        for i, w in enumerate(ordered):
            z, alphas = exact(i)
            if alphas and alphas[j1 - 1] != 0:
                return {j1}, [
                    Certificate((j1, n), w.a, w.b, (z,), alphas[j1 - 1], "det2", generation)
                ]
        return set(), []
    first = None
    for i in range(len(ordered)):
        z, alphas = exact(i)
        if alphas and any(x != 0 for x in alphas):
            first = i
            break
    if first is None:
        return set(), []
    z0, a0 = exact(first)
    w0 = ordered[first]
    for i in range(first + 1, len(ordered)):
        z, alphas = exact(i)
        if not alphas:
            continue
        if a0[0] * alphas[1] - a0[1] * alphas[0] != 0:
            det3 = _det3_cols(n, z0, z, lengths)
            w = ordered[i]
            return {1, 2}, [
                Certificate((1, n), w0.a, w0.b, (z0, z), det3, "det3", generation),
                Certificate((2, n), w.a, w.b, (z0, z), det3, "det3", generation),
            ]
    # every exact witness is a multiple of the first: a 1-D span, usable
    # only when it coincides with a coordinate branch
    if a0[1] == 0:
        return {1}, [Certificate((1, n), w0.a, w0.b, (z0,), a0[0], "alpha1", generation)]
    if a0[0] == 0:
        return {2}, [Certificate((2, n), w0.a, w0.b, (z0,), a0[1], "alpha1", generation)]
    return set(), []


def _det3_cols(n, z1, z2, lengths):
    """det(g, z1, z2) with g the length-scaled frequency: nonzero exactly
    when the two projected fields span both branches at n."""
    c0 = tuple(Fraction(x) / l for x, l in zip(n, lengths))
    return (
        c0[0] * (z1[1] * z2[2] - z1[2] * z2[1])
        - z1[0] * (c0[1] * z2[2] - c0[2] * z2[1])
        + z2[0] * (c0[1] * z1[2] - c0[2] * z1[1])
    )


def f_l_step(
    seed: ModeSet,
    current: ModeSet,
    cutoff: int,
    domain: DomainSpec,
    *,
    pairs: str = "seed",
    certify: bool = True,
):
    """One interaction step: pool products of (seed x current) and add every
    branch the pooled per-frequency spans reach.

    pairs="all" lets the left factor range over the whole current set;
    that is NOT the defining recursion (the definition restricts the left
    factor to the seed) and exists to test that the restricted run is not
    silently equivalent to the unrestricted one.  certify=False skips the
    exact certificates when only the reached set is wanted.
    """
    if not seed.members <= current.members:
        raise ValueError("seed must be contained in the current set")
    left = seed if pairs == "seed" else current
    pools: dict[Freq, list] = {}
    for a_key in left.sorted_members():
        for b_key in current.sorted_members():
            for n, alphas in _pair_products(a_key, b_key, cutoff, domain):
                pools.setdefault(n, []).append(_Witness(a_key, b_key, alphas))
    members = set(current.members)
    certs = []
    generation = current.generation + 1
    for n in sorted(pools):
        reached = {j for j in (1, 2) if (j, n) in members}
        if len(reached) == branch_count(n):
            continue
        proposed = _decide_branches(n, pools[n], reached) - reached
        if not proposed:
            continue
        if certify:
            confirmed, new_certs = _certify(n, pools[n], reached, generation, domain)
            certs += new_certs
        else:
            confirmed = proposed
        members |= {(j, n) for j in confirmed}
    return ModeSet(generation=generation, members=frozenset(members)), certs


@dataclass
class SaturationReport:
    """Outcome of the iterated recursion up to a frequency cutoff."""

    domain: DomainSpec
    cutoff: int
    generations: dict
    certificates: list
    complete: bool
    unreached: tuple

    def generation_of(self, key: ModeKey) -> int:
        return self.generations[key]

    def covering_generation(self, q: int) -> int:
        """First generation containing every branch with entries <= q."""
        return max(self.generations[key] for key in mode_keys_up_to(q))

    def inclusion_holds(self, q: int) -> bool:
        """Branches with entries <= q are reached by generation q - 1."""
        keys = mode_keys_up_to(q)
        if any(key not in self.generations for key in keys):
            return False
        return self.covering_generation(q) <= q - 1

    def all_inclusions_hold(self) -> bool:
        return self.complete and all(
            self.inclusion_holds(q) for q in range(4, self.cutoff + 1)
        )


def saturate(cutoff: int, max_generations: int, domain: DomainSpec) -> SaturationReport:
    """Iterate the seed-restricted step until every branch with frequency
    entries at most cutoff is reached (or max_generations is exhausted).

    Product pools persist across steps, so each step only computes
    products of the seed against branches added in the previous step.
    """
    if cutoff < SEED_MAX_FREQ:
        raise ValueError(f"cutoff must be at least {SEED_MAX_FREQ}")
    seed = seed_set(domain)
    all_keys = set(mode_keys_up_to(cutoff))
    generations = {key: 0 for key in seed.members}
    certificates = []
    pools: dict[Freq, list] = {}
    seed_keys = seed.sorted_members()
    current = set(seed.members)
    fresh = sorted(current, key=lambda kj: (kj[1], kj[0]))
    generation = 0
    while generation < max_generations and current != all_keys:
        generation += 1
        for a_key in seed_keys:
            for b_key in fresh:
                for n, alphas in _pair_products(a_key, b_key, cutoff, domain):
                    pools.setdefault(n, []).append(_Witness(a_key, b_key, alphas))
        added = []
        for n in sorted(pools):
            reached = {j for j in (1, 2) if (j, n) in current}
            if len(reached) == branch_count(n):
                continue
            proposed = _decide_branches(n, pools[n], reached) - reached
            if not proposed:
                continue
            confirmed, new_certs = _certify(n, pools[n], reached, generation, domain)
            certificates += new_certs
            for j in sorted(confirmed):
                key = (j, n)
                generations[key] = generation
                added.append(key)
        if not added:
            break
        current |= set(added)
        fresh = sorted(added, key=lambda kj: (kj[1], kj[0]))
    unreached = tuple(sorted(all_keys - current, key=lambda kj: (kj[1], kj[0])))
    return SaturationReport(
        domain=domain,
        cutoff=cutoff,
        generations=generations,
        certificates=certificates,
        complete=not unreached,
        unreached=unreached,
    )


@dataclass(frozen=True)
class FrequencyClasses:
    """The index families that tile each frequency shell.

    For order q: sq is every admissible frequency with entries <= q;
    rq[m] holds the face frequencies with n_m = q and the others in
    [1, q-1]; lq[(m1, m2)] holds the edge frequencies with two entries
    pinned at q.  The shell decomposition below is asserted exactly in
    the tests.
    """

    q: int
    sq: frozenset
    rq: dict
    lq: dict

    @classmethod
    def for_order(cls, q: int) -> "FrequencyClasses":
        sq = frozenset(enumerate_frequencies(q))
        rq = {
            m: frozenset(
                n for n in sq
                if n[m] == q and all(1 <= n[i] <= q - 1 for i in range(3) if i != m)
            )
            for m in range(3)
        }
        lq = {}
        for m1, m2 in ((0, 1), (1, 2), (2, 0)):
            (rest,) = [i for i in range(3) if i not in (m1, m2)]
            lq[(m1, m2)] = frozenset(
                n for n in sq if n[m1] == q and n[m2] == q and 1 <= n[rest] <= q - 1
            )
        return cls(q=q, sq=sq, rq=rq, lq=lq)


def shell_partition_holds(q: int) -> bool:
    """Frequencies with entries <= q+1 and no zero entry decompose exactly
    into: those with entries <= q, the three face families, the three
    edge families, and the corner (q+1, q+1, q+1), all pairwise disjoint."""
    top = FrequencyClasses.for_order(q + 1)
    inner = FrequencyClasses.for_order(q)
    target = {n for n in top.sq if num_zero(n) == 0}
    pieces = [{n for n in inner.sq if num_zero(n) == 0}]
    pieces += [set(top.rq[m]) for m in range(3)]
    pieces += [set(top.lq[pair]) for pair in ((0, 1), (1, 2), (2, 0))]
    pieces += [{(q + 1, q + 1, q + 1)}]
    union = set()
    for piece in pieces:
        if union & piece:
            return False
        union |= piece
    return union == target
