"""Refinement studies for the identities that hold only in the h -> 0 limit.

Three discrepancies are tracked on a fixed physical box [0,1]^4 while the
spacing halves: the covariant-derivative commutator against -i*F, the
adjoint-multiplication term against half the differential of |phi|^2, and the
canonical gradient against the operator form assembled with linear transport.
Each error is evaluated by the discrete formulas themselves on their common
cells, so the observed slope isolates the transport/averaging mismatch rather
than any sampling choice.  Defects are aggregated in the weighted L2 norm:
the sup localizes at a single moving cell and its pre-asymptotic wobble can
dip the observed order below the true one at desk spacings.  First order is
the claim; the studies report the observed orders and leave the assertion to
their callers.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import fields
from .errors import ParameterError
from .functional import operator_gradient, sw_gradient
from .lattice import Form, build_domain, d

STUDY_NAMES = ("commutator", "phi-star", "gradient-operator")


@dataclass(frozen=True)
class StudyResult:
    name: str
    spacings: tuple
    errors: tuple
    orders: tuple

    def to_keyvalues(self) -> str:
        lines = [f"check={self.name}"]
        for h, e in zip(self.spacings, self.errors):
            lines.append(f"h={h!r} error={e!r}")
        for o in self.orders:
            lines.append(f"order={o!r}")
        return "\n".join(lines)


def _crop(arr, shape):
    return arr[tuple(slice(0, n) for n in shape) + (slice(None),) * (arr.ndim - 4)]


def analytic_fields(h, n, amp=0.7):
    """Smooth trial fields sampled at base points of an n^4 grid with spacing h."""
    dims = (n,) * 4
    domain = build_domain(dims, h, kg_spec=0.4, alpha_sq=0.0)
    a_comps = {}
    for k in range(4):
        shape = domain.comp_shape((k,))
        xs = np.meshgrid(*[np.arange(m) * h for m in shape], indexing="ij")
        a_comps[(k,)] = amp * np.sin(math.pi * xs[(k + 1) % 4]) * np.cos(
            0.5 * math.pi * xs[k] + 0.3 * k
        )
    xs = np.meshgrid(*[np.arange(m) * h for m in dims], indexing="ij")
    phi = np.empty(dims + (2,), dtype=np.complex128)
    phi[..., 0] = amp * (np.cos(math.pi * xs[0]) + 0.6j * np.sin(math.pi * xs[1]))
    phi[..., 1] = amp * (np.sin(0.5 * math.pi * xs[2] + 0.2)
                         + 0.5j * np.cos(math.pi * xs[3]))
    return domain, Form(domain, 1, "real", a_comps), Form(domain, 0, "spinor", {(): phi})


def commutator_error(domain, a, phi) -> float:
    """Weighted L2 of [cov_l, cov_k]phi + i*F_kl*phi over plaquette base cells."""
    h = domain.h
    f = fields.curvature(a)
    w = [fields.covariant_derivative(a, phi)[(k,)] for k in range(4)]

    def step(al_full, wk, laxis, kaxis):
        shape = tuple(
            domain.dims[i] - (1 if i in (laxis, kaxis) else 0) for i in range(4)
        )
        al = _crop(al_full, shape)
        hi = tuple(slice(1, None) if i == laxis else slice(0, shape[i])
                   for i in range(4))
        lo = tuple(slice(0, -1) if i == laxis else slice(0, shape[i])
                   for i in range(4))
        u = np.exp(1j * h * al)[..., np.newaxis]
        return (u * wk[hi] - wk[lo]) * (1.0 / h)

    total = 0.0
    for k in range(4):
        for l in range(k + 1, 4):
            shape = tuple(domain.dims[i] - (1 if i in (k, l) else 0) for i in range(4))
            second_lk = step(a[(l,)], w[k], l, k)
            second_kl = step(a[(k,)], w[l], k, l)
            err = (second_lk - second_kl
                   + 1j * _crop(f[(k, l)], shape)[..., np.newaxis] * _crop(phi[()], shape))
            total += float(np.sum(np.abs(err) ** 2))
    return math.sqrt(h**4 * total)


def phi_star_error(domain, a, phi) -> float:
    """Weighted L2 gap between the adjoint-multiplication term and half d|phi|^2."""
    w = fields.covariant_derivative(a, phi)
    n2 = Form(domain, 0, "real", {(): np.sum(np.abs(phi[()]) ** 2, axis=-1)})
    diff = fields.phi_star(w, phi) - 0.5 * d(n2)
    total = sum(float(np.sum(diff[(k,)] ** 2)) for k in range(4))
    return math.sqrt(domain.h**4 * total)


def gradient_operator_error(domain, a, phi) -> float:
    """Weighted L2 gap, over interior rows, of canonical vs linear-transport gradient."""
    ga, gp = sw_gradient(domain, a, phi)
    la, lp_ = operator_gradient(domain, a, phi, transport="linear")
    total = 0.0
    for k in range(4):
        mask = np.ones(domain.comp_shape((k,)), dtype=bool)
        for l in range(4):
            if l == k:
                continue
            sl_lo = tuple(slice(0, 1) if i == l else slice(None) for i in range(4))
            sl_hi = tuple(slice(-1, None) if i == l else slice(None) for i in range(4))
            mask[sl_lo] = False
            mask[sl_hi] = False
        diff = ga[(k,)] - la[(k,)]
        total += float(np.sum(diff[mask] ** 2))
    dmag_sq = np.sum(np.abs(gp[()] - lp_[()]) ** 2, axis=-1)
    total += float(np.sum(dmag_sq[domain.interior_mask]))
    return math.sqrt(domain.h**4 * total)


_ERROR_FNS = {
    "commutator": commutator_error,
    "phi-star": phi_star_error,
    "gradient-operator": gradient_operator_error,
}


def refine_study(name, base_h=0.2, levels=3) -> StudyResult:
    """Run one named check at h, h/2, ... on the fixed unit box."""
    if name not in _ERROR_FNS:
        raise ParameterError(
            f"unknown check {name!r}; choose from {', '.join(STUDY_NAMES)}"
        )
    if levels < 2:
        raise ParameterError("need at least two levels for an observed order")
    fn = _ERROR_FNS[name]
    spacings = []
    errors = []
    for i in range(levels):
        h = base_h / 2**i
        n = round(1.0 / h) + 1
        domain, a, phi = analytic_fields(h, n)
        spacings.append(h)
        errors.append(fn(domain, a, phi))
    orders = tuple(
        math.log2(errors[i] / errors[i + 1]) for i in range(levels - 1)
    )
    return StudyResult(name=name, spacings=tuple(spacings), errors=tuple(errors),
                       orders=orders)
