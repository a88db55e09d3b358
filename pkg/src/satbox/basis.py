"""Closed-form Stokes eigenbasis of a 3D box with free-slip (Lions) walls.

Velocity eigenfields on the box (0,L1)x(0,L2)x(0,L3) are indexed by an
integer frequency triple k and a branch index j.  Component i of the field
is w_i * psi_i^k(x), where psi_i^k is the product of sin(k_i pi x_i / L_i)
in axis i and cosines in the other two axes.  The amplitude w must be
orthogonal to k in the length-weighted pairing (w, k)_[L] = sum w_i k_i / L_i
(this makes the field divergence free) and must have w_i = 0 wherever
k_i = 0.  A frequency with one zero entry carries a single branch, a
frequency with all entries positive carries two.

Everything here is closed form: no PDE solves.  Functions accept plain
numbers for the box lengths, so the same construction works with floats
and with exact Fractions.
"""

import math
from dataclasses import dataclass

import numpy as np

Freq = tuple[int, int, int]
ModeKey = tuple[int, Freq]  # (branch j, frequency k)


@dataclass(frozen=True)
class DomainSpec:
    """Box lengths and viscosity; all geometry derives from this."""

    L1: object
    L2: object
    L3: object
    nu: object = 1.0

    def __post_init__(self):
        if not (self.L1 > 0 and self.L2 > 0 and self.L3 > 0):
            raise ValueError(f"box lengths must be positive, got {(self.L1, self.L2, self.L3)}")
        if not self.nu > 0:
            raise ValueError(f"viscosity must be positive, got {self.nu}")

    @property
    def lengths(self):
        return (self.L1, self.L2, self.L3)

    def as_float(self) -> "DomainSpec":
        return DomainSpec(float(self.L1), float(self.L2), float(self.L3), float(self.nu))


def num_zero(k: Freq) -> int:
    """Number of vanishing components of a frequency."""
    return sum(1 for ki in k if ki == 0)


def weighted_dot(z, k, lengths):
    """(z, k)_[L] = z1 k1/L1 + z2 k2/L2 + z3 k3/L3."""
    return sum(z[i] * k[i] / lengths[i] for i in range(3))


def enumerate_frequencies(max_per_axis: int) -> list[Freq]:
    """All k with 0 <= k_i <= max_per_axis carrying at least one branch,
    i.e. with at most one zero entry, in lexicographic order."""
    if max_per_axis < 1:
        return []
    out = []
    for k1 in range(max_per_axis + 1):
        for k2 in range(max_per_axis + 1):
            for k3 in range(max_per_axis + 1):
                k = (k1, k2, k3)
                if num_zero(k) <= 1:
                    out.append(k)
    return out


def perp_basis(k: Freq, domain: DomainSpec):
    """Canonical amplitude basis of the admissible space at frequency k.

    One zero entry: the single vector vanishing on the zero axis, with
    (-k_j L_i, k_i L_j) on the two active axes i < j.  No zero entry:
    first vector (-k2 L1, k1 L2, 0), second the Euclidean orthogonalization
    of (-k3 L1, 0, k1 L3) against the first.  Every downstream coefficient
    and certificate depends on this fixed choice.
    """
    L = domain.lengths
    nz = num_zero(k)
    if nz >= 2 or all(ki == 0 for ki in k):
        raise ValueError(f"frequency {k} carries no admissible amplitudes")
    if nz == 1:
        i, j = [ax for ax in range(3) if k[ax] != 0]
        w = [0 * L[0]] * 3
        w[i] = -k[j] * L[i]
        w[j] = k[i] * L[j]
        return [tuple(w)]
    w1 = (-k[1] * L[0], k[0] * L[1], 0 * L[0])
    v = (-k[2] * L[0], 0 * L[0], k[0] * L[2])
    c = sum(vi * wi for vi, wi in zip(v, w1)) / sum(wi * wi for wi in w1)
    w2 = tuple(vi - c * wi for vi, wi in zip(v, w1))
    return [w1, w2]


def eigenvalue(k: Freq, domain: DomainSpec) -> float:
    """Dissipation rate nu pi^2 |k^L|^2 of the mode at frequency k."""
    if all(ki == 0 for ki in k):
        raise ValueError("zero frequency has no mode")
    L = domain.lengths
    return float(domain.nu) * math.pi**2 * sum((k[i] / float(L[i])) ** 2 for i in range(3))


def amplitude_norm_sq(k: Freq, w, domain: DomainSpec):
    """L2 norm squared of the field with frequency k and amplitude w, closed form.

    Each 1D factor integrates to L_i/2 for a positive frequency; a zero
    frequency gives L_i for the cosine factor and kills the sine factor.
    """
    L = domain.lengths
    total = 0 * L[0]
    for i in range(3):
        if w[i] == 0:
            continue
        fac = w[i] * w[i]
        for jax in range(3):
            if k[jax] == 0:
                if jax == i:
                    fac = 0 * fac
                else:
                    fac = fac * L[jax]
            else:
                fac = fac * L[jax] / 2
        total = total + fac
    return total


@dataclass(frozen=True)
class EigenMode:
    """One eigenfield: frequency k, branch j, amplitude w, cached L2 norm^2."""

    k: Freq
    j: int
    w: tuple
    norm_sq: object

    def __post_init__(self):
        if num_zero(self.k) > 1:
            raise ValueError(f"frequency {self.k} admits no eigenfield")
        if self.j not in (1, 2 - num_zero(self.k)):
            raise ValueError(f"branch {self.j} out of range for frequency {self.k}")

    @property
    def key(self) -> ModeKey:
        return (self.j, self.k)


@dataclass(frozen=True)
class TrigVectorField:
    """Field with component i equal to z_i psi_i^n; z is unconstrained."""

    n: Freq
    z: tuple


def eigenmodes(k: Freq, domain: DomainSpec) -> list[EigenMode]:
    """The 2 - #zeros(k) canonical eigenfields at frequency k."""
    return [
        EigenMode(k=k, j=j + 1, w=w, norm_sq=amplitude_norm_sq(k, w, domain))
        for j, w in enumerate(perp_basis(k, domain))
    ]


def mode_from_key(key: ModeKey, domain: DomainSpec) -> EigenMode:
    j, k = key
    return eigenmodes(k, domain)[j - 1]


def l2_norm_sq(mode: EigenMode, domain: DomainSpec):
    return amplitude_norm_sq(mode.k, mode.w, domain)


def evaluate(field, x, domain: DomainSpec) -> np.ndarray:
    """Evaluate an EigenMode or TrigVectorField at points x.

    x has shape (..., 3); the result has the same shape.
    """
    if isinstance(field, EigenMode):
        k, z = field.k, field.w
    else:
        k, z = field.n, field.z
    x = np.asarray(x, dtype=float)
    L = [float(Li) for Li in domain.lengths]
    theta = [k[i] * math.pi * x[..., i] / L[i] for i in range(3)]
    cos = [np.cos(t) for t in theta]
    sin = [np.sin(t) for t in theta]
    out = np.empty_like(x)
    out[..., 0] = float(z[0]) * sin[0] * cos[1] * cos[2]
    out[..., 1] = float(z[1]) * cos[0] * sin[1] * cos[2]
    out[..., 2] = float(z[2]) * cos[0] * cos[1] * sin[2]
    return out
