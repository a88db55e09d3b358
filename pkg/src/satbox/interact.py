"""Mode interactions: the symmetrized advection of two eigenfields, its
expansion over trig vector fields, and the projection back onto the
divergence-free eigenbasis.

The product of two eigenfields expands, per coordinate, into eight
sin/cos monomials whose frequencies are the componentwise sums and
absolute differences |k_i +- m_i|.  A single sign rule covers all three
coordinates: for trig signs sigma in {+1,-1}^3 let star = sigma_1 * sigma,
then coordinate i of (Y^k . grad) Y^m + (Y^m . grad) Y^k picks up

    (star_i w_i^m beta(w^k, m, star) + sigma_1 w_i^k beta(w^m, k, star))

against the monomial at frequency (k_i + sigma_i m_i), with
beta(w, m, s) = (pi/8) sum_i s_i w_i m_i / L_i.  Folding negative
frequencies to |.| flips the sign of the sine factor, so the coefficient
is multiplied by sign(k_i + sigma_i m_i); colliding folded frequencies
are summed.  The rule is exercised against a tensor-grid quadrature
oracle in the test suite.

Coefficient assembly in `advection_coeffs` is plain ring arithmetic with
pi factored out, so the same code produces floats from float lengths and
exact Fractions from rational lengths.
"""

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .basis import (
    DomainSpec,
    EigenMode,
    Freq,
    ModeKey,
    TrigVectorField,
    num_zero,
    perp_basis,
)

SIGN_TRIPLES = tuple(
    (s1, s2, s3) for s1 in (1, -1) for s2 in (1, -1) for s3 in (1, -1)
)


def beta(w, m: Freq, signs, domain: DomainSpec) -> float:
    """(pi/8)(s1 w1 m1/L1 + s2 w2 m2/L2 + s3 w3 m3/L3)."""
    L = domain.lengths
    return math.pi / 8 * float(sum(signs[i] * w[i] * m[i] / L[i] for i in range(3)))


def advection_coeffs(k: Freq, wk, m: Freq, wm, lengths) -> dict:
    """Per-frequency amplitude vectors of the symmetrized advection, with the
    overall factor pi removed.  Generic over the coefficient ring."""
    zero = 0 * lengths[0]
    terms: dict[Freq, list] = {}
    for sig in SIGN_TRIPLES:
        s1 = sig[0]
        star = (1, s1 * sig[1], s1 * sig[2])
        bkm = sum(star[i] * wk[i] * m[i] / lengths[i] for i in range(3)) / 8
        bmk = sum(star[i] * wm[i] * k[i] / lengths[i] for i in range(3)) / 8
        n = tuple(abs(k[i] + sig[i] * m[i]) for i in range(3))
        acc = terms.setdefault(n, [zero, zero, zero])
        for i in range(3):
            a = k[i] + sig[i] * m[i]
            if a == 0:
                continue
            sgn = 1 if a > 0 else -1
            acc[i] = acc[i] + sgn * (star[i] * wm[i] * bkm + s1 * wk[i] * bmk)
    return {n: z for n, z in terms.items() if any(zi != 0 for zi in z)}


@dataclass(frozen=True)
class InteractionTerm:
    """Map frequency -> amplitude of one symmetrized advection product."""

    terms: dict

    def as_fields(self) -> list[TrigVectorField]:
        return [TrigVectorField(n=n, z=tuple(z)) for n, z in sorted(self.terms.items())]

    def scaled(self, c: float) -> "InteractionTerm":
        return InteractionTerm({n: tuple(c * zi for zi in z) for n, z in self.terms.items()})


def advection_sym(a: EigenMode, b: EigenMode, domain: DomainSpec) -> InteractionTerm:
    """(Y^a . grad) Y^b + (Y^b . grad) Y^a expanded over trig vector fields."""
    L = tuple(float(Li) for Li in domain.lengths)
    raw = advection_coeffs(a.k, tuple(map(float, a.w)), b.k, tuple(map(float, b.w)), L)
    return InteractionTerm({n: tuple(math.pi * zi for zi in z) for n, z in raw.items()})


def self_advection(a: EigenMode, domain: DomainSpec) -> InteractionTerm:
    """(Y^a . grad) Y^a in closed form.

    With (w,k)_[L] = 0 the product collapses to frequencies drawn from
    {0, 2k_i}: a diagonal part (pi/4) w_i^2 k_i/L_i on each doubled axis and
    mixed parts -(pi/4)(w_j k_j / L_j)(w over the two axes other than j).
    Coincides with advection_sym(a, a)/2 term by term.
    """
    k, w = a.k, tuple(map(float, a.w))
    L = tuple(float(Li) for Li in domain.lengths)
    acc: dict[Freq, list] = {}

    def add(n, z):
        if all(zi == 0.0 for zi in z):
            return
        cur = acc.setdefault(n, [0.0, 0.0, 0.0])
        for i in range(3):
            cur[i] += z[i]

    c = math.pi / 4
    for i in range(3):
        n = tuple(2 * k[ax] if ax == i else 0 for ax in range(3))
        z = [0.0, 0.0, 0.0]
        z[i] = c * w[i] * w[i] * k[i] / L[i]
        add(tuple(n), z)
    for j in range(3):
        o1, o2 = [ax for ax in range(3) if ax != j]
        n = [0, 0, 0]
        n[o1], n[o2] = 2 * k[o1], 2 * k[o2]
        z = [0.0, 0.0, 0.0]
        z[o1] = -c * (w[j] * k[j] / L[j]) * w[o1]
        z[o2] = -c * (w[j] * k[j] / L[j]) * w[o2]
        add(tuple(n), z)
    return InteractionTerm({n: tuple(z) for n, z in acc.items()})


@dataclass(frozen=True)
class FieldExpansion:
    """Finite combination of eigenfields, keyed by (branch, frequency)."""

    coeffs: dict = field(default_factory=dict)

    def get(self, key: ModeKey, default=0.0):
        return self.coeffs.get(key, default)

    def keys(self):
        return self.coeffs.keys()

    def items(self):
        return self.coeffs.items()

    def __len__(self):
        return len(self.coeffs)

    def l2_norm(self, domain: DomainSpec) -> float:
        from .basis import amplitude_norm_sq, perp_basis as _pb

        total = 0.0
        for (j, n), c in self.coeffs.items():
            w = _pb(n, domain)[j - 1]
            total += float(c) ** 2 * float(amplitude_norm_sq(n, w, domain))
        return math.sqrt(total)


@lru_cache(maxsize=None)
def _projection_solver(n: Freq, lengths):
    """Cached coordinate rows at frequency n.

    The gradient direction in amplitude space is the length-scaled
    frequency g = (n_1/L_1, n_2/L_2, n_3/L_3): the field with amplitude g
    is exactly curl free, the one with amplitude n is not (unless the
    lengths coincide).  Full frequencies: the first two rows of the
    inverse of the 3x3 basis matrix [w1 w2 g], so that alpha_j = row_j . z
    gives the branch parts of z = a1 w1 + a2 w2 + a0 g.  One zero axis:
    the 2x2 analogue on the two active axes with the single admissible
    vector and g.  Rows are plain tuples; the hot pair loop dots them
    without numpy overhead.
    """
    dom = DomainSpec(*lengths)
    ws = perp_basis(n, dom)
    grad = tuple(n[i] / lengths[i] for i in range(3))
    if len(ws) == 2:
        M = np.array([ws[0], ws[1], grad], dtype=float).T
        Minv = np.linalg.inv(M)
        rows = (tuple(Minv[0]), tuple(Minv[1]))
        return (None, rows, float(np.linalg.norm(Minv)))
    (zi,) = [ax for ax in range(3) if n[ax] == 0]
    act = tuple(ax for ax in range(3) if ax != zi)
    M = np.array(
        [[float(ws[0][a]) for a in act], [float(grad[a]) for a in act]], dtype=float
    ).T
    Minv = np.linalg.inv(M)
    return (act, (tuple(Minv[0]),), float(np.linalg.norm(Minv)))


def project_components(n: Freq, z, domain: DomainSpec):
    """Branch coefficients of the divergence-free part of the field (n, z),
    plus the round-off floor of the solve.

    Returns (alphas, floor) where alphas has length 2 - #zeros(n); the
    gradient coordinate along n is discarded.  Frequencies with two or
    more zero axes carry no eigenfield (the field is zero or a pure
    gradient) and yield an empty alpha tuple.
    """
    if num_zero(n) >= 2:
        return (), 0.0
    act, rows, inv_scale = _projection_solver(n, tuple(float(L) for L in domain.lengths))
    if act is None:
        z0, z1, z2 = float(z[0]), float(z[1]), float(z[2])
    else:
        z0, z1 = float(z[act[0]]), float(z[act[1]])
        z2 = 0.0
    alphas = tuple(r[0] * z0 + r[1] * z1 + (r[2] * z2 if len(r) == 3 else 0.0) for r in rows)
    floor = inv_scale * math.sqrt(z0 * z0 + z1 * z1 + z2 * z2)
    return alphas, 1e-15 * floor


def project(t: TrigVectorField, domain: DomainSpec) -> FieldExpansion:
    """Divergence-free, wall-tangent part of a trig vector field, expanded
    over the canonical eigenfields of its frequency."""
    alphas, _ = project_components(t.n, t.z, domain)
    coeffs = {(j + 1, t.n): float(a) for j, a in enumerate(alphas) if a != 0.0}
    return FieldExpansion(coeffs)


def project_exact(n: Freq, z, lengths):
    """Exact-arithmetic branch coefficients at frequency n (Cramer solve
    against the basis {w1, w2, length-scaled frequency}).

    Inputs are Fractions (or any exact ring with division); returns a tuple
    of length 2 - #zeros(n).  Empty tuple when no eigenfield exists at n.
    """
    if num_zero(n) >= 2:
        return ()
    dom = DomainSpec(*lengths)
    ws = perp_basis(n, dom)
    grad = tuple(Fraction(n[i]) / lengths[i] for i in range(3))
    if len(ws) == 2:
        det = _det3(ws[0], ws[1], grad)
        a1 = _det3(z, ws[1], grad) / det
        a2 = _det3(ws[0], z, grad) / det
        return (a1, a2)
    (zi,) = [ax for ax in range(3) if n[ax] == 0]
    a, b = [ax for ax in range(3) if ax != zi]
    w = ws[0]
    det = w[a] * grad[b] - w[b] * grad[a]
    a1 = (z[a] * grad[b] - z[b] * grad[a]) / det
    return (a1,)


def _det3(c0, c1, c2):
    return (
        c0[0] * (c1[1] * c2[2] - c1[2] * c2[1])
        - c1[0] * (c0[1] * c2[2] - c0[2] * c2[1])
        + c2[0] * (c0[1] * c1[2] - c0[2] * c1[1])
    )


def bilinear_sym(a: EigenMode, b: EigenMode, domain: DomainSpec) -> FieldExpansion:
    """Projected symmetrized advection B(Y^a,Y^b) + B(Y^b,Y^a) in eigenfield
    coordinates.  Arguments are ordered internally, so the symmetry
    bilinear_sym(a, b) == bilinear_sym(b, a) is exact."""
    if b.key < a.key:
        a, b = b, a
    term = advection_sym(a, b, domain)
    coeffs: dict[ModeKey, float] = {}
    for n in sorted(term.terms):
        alphas, _ = project_components(n, term.terms[n], domain)
        for j, alpha in enumerate(alphas):
            if alpha != 0.0:
                key = (j + 1, n)
                coeffs[key] = coeffs.get(key, 0.0) + float(alpha)
    return FieldExpansion({k: v for k, v in sorted(coeffs.items()) if v != 0.0})


def quadrature_oracle(field_eval, modes, domain: DomainSpec, grid_per_axis: int) -> FieldExpansion:
    """Independent projection by tensor-product midpoint quadrature.

    field_eval maps an (N, 3) array of points to (N, 3) values.  Midpoint
    sums integrate the trig monomials exactly below the aliasing limit;
    the grid must satisfy grid_per_axis >= 2 * max frequency + 2.
    """
    if grid_per_axis < 2:
        raise ValueError("grid_per_axis must be at least 2")
    max_freq = max((max(m.k) for m in modes), default=0)
    if grid_per_axis < 2 * max_freq + 2:
        warnings.warn(
            f"grid {grid_per_axis} per axis may alias frequencies up to {max_freq}",
            stacklevel=2,
        )
    L = [float(Li) for Li in domain.lengths]
    G = grid_per_axis
    axes = [(np.arange(G) + 0.5) * (L[i] / G) for i in range(3)]
    X = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)  # (G,G,G,3)
    F = np.asarray(field_eval(X.reshape(-1, 3))).reshape(G, G, G, 3)
    weight = L[0] * L[1] * L[2] / G**3
    coeffs = {}
    for mode in modes:
        k = mode.k
        trig = {}
        for ax in range(3):
            theta = k[ax] * math.pi * axes[ax] / L[ax]
            trig[ax] = (np.sin(theta), np.cos(theta))
        ip = 0.0
        for i in range(3):
            if mode.w[i] == 0:
                continue
            f1 = trig[0][0 if i == 0 else 1]
            f2 = trig[1][0 if i == 1 else 1]
            f3 = trig[2][0 if i == 2 else 1]
            ip += float(mode.w[i]) * np.einsum("abc,a,b,c->", F[..., i], f1, f2, f3)
        coeff = ip * weight / float(mode.norm_sq)
        if coeff != 0.0:
            coeffs[mode.key] = coeff
    return FieldExpansion(coeffs)
