"""Gauge and spinor fields and the covariant operators that couple them.

A u(1) gauge field stores the real coefficient a of A = i*a on every link; a
spinor field stores a C^2 value on every site.  The covariant derivative uses
compact link transport exp(i*h*a), which makes gauge covariance an exact
identity, while the curvature stays the linear F = dA so Bianchi and Stokes
identities hold to round-off.  The mismatch between the two choices is O(h)
and is measured, not hidden, by the refinement studies.

The multiplication operator and its adjoint use the symmetric link average of
the spinor with no extra factor of i: that is the unique convention for which
the adjoint identity is exact and the pairing against a covariant derivative
reproduces half the differential of |phi|^2 in the refinement limit.  The
imaginary-part pairing that drives the gauge-field gradient is a different
object and is exposed separately as `gauge_current`.
"""

import numpy as np

from . import _backend
from .errors import MismatchError
from .lattice import Form, d

__all__ = [
    "gauge_field",
    "spinor_field",
    "covariant_derivative",
    "curvature",
    "laplacian",
    "phi_op",
    "phi_star",
    "gauge_current",
]


def gauge_field(domain, comps) -> Form:
    """Real 1-form from four link arrays, one per axis."""
    comps = list(comps)
    if len(comps) != 4:
        raise MismatchError(f"a gauge field takes four link arrays, got {len(comps)}")
    return Form(domain, 1, "real", {(k,): comps[k] for k in range(4)})


def spinor_field(domain, values) -> Form:
    """Spinor 0-form from one site array of shape dims + (2,)."""
    return Form(domain, 0, "spinor", {(): values})


def _require(form, degree, kind, name):
    if not isinstance(form, Form) or form.degree != degree or form.kind != kind:
        raise MismatchError(f"{name} must be a degree-{degree} {kind} form")


def _same_domain(a, b):
    if a.domain != b.domain:
        raise MismatchError("fields live on different domains")


def covariant_derivative(a: Form, phi: Form) -> Form:
    """Spinor 1-form W with W_k(x) = [exp(i h a_k(x)) phi(x+e_k) - phi(x)] / h."""
    _require(a, 1, "real", "a")
    _require(phi, 0, "spinor", "phi")
    _same_domain(a, phi)
    h = a.domain.h
    site = phi[()]
    comps = {
        (k,): _backend.cov_forward(a[(k,)], site, k, h) for k in range(4)
    }
    return Form(a.domain, 1, "spinor", comps)


def covariant_derivative_transpose(a: Form, w: Form) -> Form:
    """Exact transpose of covariant_derivative in its spinor argument.

    Returns the spinor 0-form psi with <psi, v> = <w, covariant_derivative(a, v)>
    for every spinor field v, to round-off.
    """
    _require(a, 1, "real", "a")
    _require(w, 1, "spinor", "w")
    _same_domain(a, w)
    h = a.domain.h
    out = np.zeros(a.domain.dims + (2,), dtype=np.complex128)
    for k in range(4):
        _backend.cov_forward_transpose(a[(k,)], w[(k,)], k, h, out)
    return Form(a.domain, 0, "spinor", {(): out})


def curvature(a: Form) -> Form:
    """Curvature 2-form F = dA of a gauge field; dF = 0 exactly."""
    _require(a, 1, "real", "a")
    return d(a)


def laplacian(a: Form, phi: Form) -> Form:
    """Gauge-covariant Laplacian as the composition transpose(cov) o cov.

    Satisfies <laplacian(a, phi), psi> = <cov phi, cov psi> exactly for every
    psi; sites next to the boundary carry half-stencil values that only mean
    anything when paired against interior-supported tests.
    """
    return covariant_derivative_transpose(a, covariant_derivative(a, phi))


def _link_average(site, axis):
    # symmetric average onto the link grid of `axis`
    lead = (slice(None),) * axis
    return 0.5 * (site[lead + (slice(None, -1),)] + site[lead + (slice(1, None),)])


def phi_op(lam: Form, phi: Form) -> Form:
    """Multiplication operator: real 1-form times the link-averaged spinor."""
    _require(lam, 1, "real", "lam")
    _require(phi, 0, "spinor", "phi")
    _same_domain(lam, phi)
    site = phi[()]
    comps = {
        (k,): lam[(k,)][..., np.newaxis] * _link_average(site, k) for k in range(4)
    }
    return Form(lam.domain, 1, "spinor", comps)


def phi_star(w: Form, phi: Form) -> Form:
    """Exact adjoint of phi_op in the 1-form argument.

    Component k is Re<avg_k(phi), w_k> on every link, so
    <phi_op(lam, phi), w> = <lam, phi_star(w, phi)> holds to round-off.  For
    w = covariant_derivative(a, phi) this converges to half of d(|phi|^2), and
    equals it exactly when a = 0.
    """
    _require(w, 1, "spinor", "w")
    _require(phi, 0, "spinor", "phi")
    _same_domain(w, phi)
    site = phi[()]
    comps = {}
    for k in range(4):
        avg = _link_average(site, k)
        comps[(k,)] = np.sum((np.conj(avg) * w[(k,)]).real, axis=-1)
    return Form(w.domain, 1, "real", comps)


def gauge_current(a: Form, phi: Form) -> Form:
    """Base-point current J_k(x) = Im<phi(x), (cov phi)_k(x)>.

    This is the pairing that the gauge-field gradient of the coupling energy
    produces; it is not phi_star and the two differ at O(1) on rough data.
    """
    _require(a, 1, "real", "a")
    _require(phi, 0, "spinor", "phi")
    _same_domain(a, phi)
    w = covariant_derivative(a, phi)
    site = phi[()]
    comps = {}
    for k in range(4):
        lead = (slice(None),) * k
        base = site[lead + (slice(None, -1),)]
        comps[(k,)] = np.sum((np.conj(base) * w[(k,)]).imag, axis=-1)
    return Form(a.domain, 1, "real", comps)
