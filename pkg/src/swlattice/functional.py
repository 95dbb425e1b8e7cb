"""The quartic spinor-curvature energy, its directional derivatives and gradient.

The energy of a configuration (A, phi) on a domain is

    E = 1/4 ||F||^2 + ||cov phi||^2 + 1/8 ||phi||_4^4 + 1/4 <kg phi, phi>
        + pi^2 * alpha_sq

with F = dA, all pairings under the h^4 cell measure.  `sw_gradient` is the
exact derivative of this discrete function with respect to every link and site
degree of freedom, assembled analytically with the exact transposes; the
central-difference check then holds to truncation error of the difference
formula, not to discretization order.

A second assembly, `operator_gradient`, builds the same rows from the named
operator pieces (codifferential of F, current, Laplacian, local terms).  With
compact transport it reproduces the canonical gradient identically on interior
degrees of freedom; with linear transport (1 + i*h*a in place of the link
exponential) it differs at O(h), which is what the refinement study measures.

Scale conventions: textbook presentations write the rows as
(d*F + 4*current, laplacian + (|phi|^2+kg)/4 * phi).  The exact derivative of
the discrete energy is A_ROW_SCALE times the first row and PHI_ROW_SCALE times
the second; the constants below record that conversion once.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import _backend
from .errors import MismatchError
from .fields import covariant_derivative, covariant_derivative_transpose, gauge_current
from .lattice import COMBOS, Form, d, d_transpose, codifferential, inner_product

#: canonical A row = A_ROW_SCALE * (d*F + 4*current)
A_ROW_SCALE = 0.5
#: canonical phi row = PHI_ROW_SCALE * (laplacian + (|phi|^2 + kg)/4 * phi)
PHI_ROW_SCALE = 2.0

ENERGY_CSV_HEADER = "curvature,dirichlet,quartic,coupling,topological,total"


@dataclass(frozen=True)
class EnergyBreakdown:
    """The five energy summands and their total."""

    curvature_term: float
    dirichlet_term: float
    quartic_term: float
    curvature_coupling_term: float
    topological_term: float
    total: float

    def csv_row(self) -> str:
        """One CSV row matching ENERGY_CSV_HEADER, full precision."""
        return ",".join(
            repr(v)
            for v in (
                self.curvature_term,
                self.dirichlet_term,
                self.quartic_term,
                self.curvature_coupling_term,
                self.topological_term,
                self.total,
            )
        )


def _check_pair(domain, a, phi):
    if not (isinstance(a, Form) and a.degree == 1 and a.kind == "real"):
        raise MismatchError("A must be a degree-1 real form")
    if not (isinstance(phi, Form) and phi.degree == 0 and phi.kind == "spinor"):
        raise MismatchError("phi must be a degree-0 spinor form")
    if a.domain != domain or phi.domain != domain:
        raise MismatchError("fields live on a different domain")


# ===== array-level internals (shared with the descent loop) ==================


def _curvature_arrays(domain, a_comps):
    """F_{kl} = fd_k(a_l) - fd_l(a_k) for k < l, keyed like COMBOS[2]."""
    h = domain.h
    out = {}
    for k, l in COMBOS[2]:
        out[(k, l)] = _backend.forward_diff(a_comps[l], k, h) - _backend.forward_diff(
            a_comps[k], l, h
        )
    return out

def _energy_terms(domain, a_comps, phi_arr):
    h4 = domain.h**4
    f = _curvature_arrays(domain, a_comps)
    curv = 0.25 * h4 * sum(float(np.sum(arr * arr)) for arr in f.values())
    diri = h4 * sum(
        float(np.sum(np.abs(_backend.cov_forward(a_comps[k], phi_arr, k, domain.h)) ** 2))
        for k in range(4)
    )
    n2 = np.sum(np.abs(phi_arr) ** 2, axis=-1)
    quart = 0.125 * h4 * float(np.sum(n2 * n2))
    coup = 0.25 * h4 * float(np.sum(domain.kg * n2))
    topo = math.pi**2 * domain.alpha_sq
    return curv, diri, quart, coup, topo

def _gradient_arrays(domain, a_comps, phi_arr):
    """Exact derivative of the discrete energy in every degree of freedom."""
    h = domain.h
    f = _curvature_arrays(domain, a_comps)
    w = [_backend.cov_forward(a_comps[k], phi_arr, k, h) for k in range(4)]

    grad_a = []
    for k in range(4):
        acc = None
        for l in range(4):
            if l == k:
                continue
            src = (k, l) if k < l else (l, k)
            term = _backend.forward_diff_transpose(f[src], l, h)
            # sign of inserting l into src
            if src.index(l) % 2:
                term = -term
            acc = term if acc is None else acc + term
        lead_all = tuple(slice(None, -1) if i == k else slice(None) for i in range(4))
        base = phi_arr[lead_all]
        current = np.sum((np.conj(base) * w[k]).imag, axis=-1)
        grad_a.append(0.5 * acc + 2.0 * current)

    grad_phi = np.zeros(domain.dims + (2,), dtype=np.complex128)
    for k in range(4):
        _backend.cov_forward_transpose(a_comps[k], w[k], k, h, grad_phi)
    grad_phi *= 2.0
    n2 = np.sum(np.abs(phi_arr) ** 2, axis=-1)
    grad_phi += (0.5 * (n2 + domain.kg))[..., np.newaxis] * phi_arr
    return grad_a, grad_phi


# ===== public entry points ===================================================


def sw_energy(domain, a: Form, phi: Form) -> EnergyBreakdown:
    """Energy breakdown of a configuration under the h^4 quadrature."""
    _check_pair(domain, a, phi)
    a_comps = [a[(k,)] for k in range(4)]
    curv, diri, quart, coup, topo = _energy_terms(domain, a_comps, phi[()])
    return EnergyBreakdown(curv, diri, quart, coup, topo, curv + diri + quart + coup + topo)


def sw_gradient(domain, a: Form, phi: Form) -> tuple[Form, Form]:
    """Exact gradient of sw_energy: a real 1-form row and a spinor row.

    Every degree of freedom carries its true partial derivative, boundary ones
    included; restriction to a constrained subset is the caller's business.
    """
    _check_pair(domain, a, phi)
    a_comps = [a[(k,)] for k in range(4)]
    grad_a, grad_phi = _gradient_arrays(domain, a_comps, phi[()])
    return (
        Form(domain, 1, "real", {(k,): grad_a[k] for k in range(4)}),
        Form(domain, 0, "spinor", {(): grad_phi}),
    )


def d1(domain, a: Form, phi: Form, lam: Form) -> float:
    """Directional derivative of the energy along a gauge-field direction.

    Evaluated in the summed-by-parts form 1/2 <F, d lam> + 2 <lam, current>,
    which carries the boundary pairing implicitly: rewriting the first term
    through the codifferential leaves 1/2 * boundary_defect(lam, F) on top of
    the interior pairing.  Equals <grad_A, lam> to round-off for every lam.
    """
    _check_pair(domain, a, phi)
    if not (lam.degree == 1 and lam.kind == "real"):
        raise MismatchError("lam must be a degree-1 real form")
    f = d(a)
    return 0.5 * inner_product(f, d(lam)) + 2.0 * inner_product(lam, gauge_current(a, phi))


def d2(domain, a: Form, phi: Form, v: Form) -> float:
    """Directional derivative of the energy along a spinor direction.

    2 <cov phi, cov v> + <(|phi|^2 + kg)/2 * phi, v>; the first pairing keeps
    its boundary contributions, matching d1.
    """
    _check_pair(domain, a, phi)
    if not (v.degree == 0 and v.kind == "spinor"):
        raise MismatchError("v must be a degree-0 spinor form")
    w = covariant_derivative(a, phi)
    wv = covariant_derivative(a, v)
    phi_arr = phi[()]
    n2 = np.sum(np.abs(phi_arr) ** 2, axis=-1)
    local = Form(
        domain, 0, "spinor", {(): (0.5 * (n2 + domain.kg))[..., np.newaxis] * phi_arr}
    )
    return 2.0 * inner_product(w, wv) + inner_product(local, v)


# ===== operator-form assembly ================================================


def _cov_linear(domain, a_comps, phi_arr, k):
    # linearized transport 1 + i h a in place of the link exponential
    h = domain.h
    lead = (slice(None),) * k
    u = (1.0 + 1j * h * a_comps[k])[..., np.newaxis]
    return (u * phi_arr[lead + (slice(1, None),)] - phi_arr[lead + (slice(None, -1),)]) / h

def _cov_linear_transpose(domain, a_comps, w_comps, out):
    h = domain.h
    for k in range(4):
        lead = (slice(None),) * k
        uc = (1.0 - 1j * h * a_comps[k])[..., np.newaxis]
        out[lead + (slice(None, -1),)] -= w_comps[k] / h
        out[lead + (slice(1, None),)] += uc * w_comps[k] / h
    return out


def operator_gradient(domain, a: Form, phi: Form, transport: str = "compact"):
    """Gradient rows assembled from the named operator pieces.

    A row: A_ROW_SCALE * (codifferential(F) + 4 * current), phi row:
    PHI_ROW_SCALE * (laplacian + (|phi|^2 + kg)/4 * phi).  With
    transport="compact" the pieces are the exact ones and the result matches
    sw_gradient on interior degrees of freedom to round-off; with
    transport="linear" the covariant pieces use 1 + i*h*a and the mismatch is
    O(h), measured by the refinement study.
    """
    _check_pair(domain, a, phi)
    if transport not in ("compact", "linear"):
        raise MismatchError(f"transport must be 'compact' or 'linear', got {transport!r}")
    a_comps = [a[(k,)] for k in range(4)]
    phi_arr = phi[()]
    f = d(a)

    if transport == "compact":
        current = gauge_current(a, phi)
        w = covariant_derivative(a, phi)
        lap = covariant_derivative_transpose(a, w)[()]
    else:
        w_comps = [_cov_linear(domain, a_comps, phi_arr, k) for k in range(4)]
        cur_comps = {}
        for k in range(4):
            lead_all = tuple(slice(None, -1) if i == k else slice(None) for i in range(4))
            base = phi_arr[lead_all]
            cur_comps[(k,)] = np.sum((np.conj(base) * w_comps[k]).imag, axis=-1)
        current = Form(domain, 1, "real", cur_comps)
        lap = np.zeros(domain.dims + (2,), dtype=np.complex128)
        _cov_linear_transpose(domain, a_comps, w_comps, lap)

    dstar_f = codifferential(f)
    grad_a = Form(
        domain, 1, "real",
        {(k,): A_ROW_SCALE * (dstar_f[(k,)] + 4.0 * current[(k,)]) for k in range(4)},
    )
    n2 = np.sum(np.abs(phi_arr) ** 2, axis=-1)
    row = lap + (0.25 * (n2 + domain.kg))[..., np.newaxis] * phi_arr
    grad_phi = Form(domain, 0, "spinor", {(): PHI_ROW_SCALE * row})
    return grad_a, grad_phi
