"""Pure numpy implementations of the hot array kernels.

Same call signatures as the compiled module `_kernels_cy`; `_backend` picks one
at import time.  All arrays are C contiguous.  Spatial axes are the first four;
spinor fields carry a trailing length-2 complex axis that rides along.

Division by h is written as multiplication by its reciprocal: scalar-reciprocal
multiplication is componentwise exact for complex values in numpy and C alike,
so the two backends produce bitwise-identical results instead of drifting by an
ulp through different complex-division algorithms.
"""

import numpy as np


def forward_diff(u, axis, h):
    """(u[x + e_axis] - u[x]) / h, shortening `axis` by one."""
    lead = (slice(None),) * axis
    hi = lead + (slice(1, None),)
    lo = lead + (slice(None, -1),)
    return (u[hi] - u[lo]) * (1.0 / h)


def forward_diff_transpose(w, axis, h):
    """Exact transpose of forward_diff: out[x] = (w[x - e] - w[x]) / h, zero extended.

    Lengthens `axis` by one.
    """
    shape = list(w.shape)
    shape[axis] += 1
    out = np.zeros(shape, dtype=w.dtype)
    lead = (slice(None),) * axis
    out[lead + (slice(1, None),)] = w
    out[lead + (slice(None, -1),)] -= w
    out *= 1.0 / h
    return out


def cov_forward(a, phi, axis, h):
    """Compact-transport covariant difference of a spinor field along one axis.

    W[x] = (exp(i h a[x]) phi[x + e_axis] - phi[x]) / h, defined on the link grid
    of `axis` (a's grid).  `a` is real, `phi` is complex with trailing component
    axis.
    """
    lead = (slice(None),) * axis
    u = np.exp(1j * h * a)[..., np.newaxis]
    return (u * phi[lead + (slice(1, None),)] - phi[lead + (slice(None, -1),)]) * (1.0 / h)


def cov_forward_transpose(a, w, axis, h, out):
    """Accumulate the exact transpose of cov_forward into the site array `out`.

    out[x]          += -w[x] / h
    out[x + e_axis] += conj(exp(i h a[x])) w[x] / h

    The outgoing-link term is applied before the incoming one at every site.
    """
    inv = 1.0 / h
    lead = (slice(None),) * axis
    uc = np.exp(-1j * h * a)[..., np.newaxis]
    out[lead + (slice(None, -1),)] -= w * inv
    out[lead + (slice(1, None),)] += uc * w * inv
    return out
