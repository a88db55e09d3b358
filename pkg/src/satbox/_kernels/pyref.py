"""Pure-numpy reference implementation of the quadratic tensor kernels.

Entries are COO triplets (c, a, b) with a <= b and the diagonal values
pre-halved, so both kernels use one uniform accumulation rule.
"""

import numpy as np

BACKEND = "numpy"


def quad_apply(c_idx, a_idx, b_idx, val, u, n_out):
    """out[c] += val * u[a] * u[b]"""
    return np.bincount(c_idx, weights=val * u[a_idx] * u[b_idx], minlength=n_out)


def quad_jact(c_idx, a_idx, b_idx, val, u, v, n_out):
    """Transpose-Jacobian product of quad_apply at u against v:
    g[a] += val * u[b] * v[c];  g[b] += val * u[a] * v[c]."""
    vc = val * v[c_idx]
    g = np.bincount(a_idx, weights=vc * u[b_idx], minlength=n_out)
    g += np.bincount(b_idx, weights=vc * u[a_idx], minlength=n_out)
    return g
