"""Cubic-root machinery and a priori estimate verifiers.

The depressed cubic x^3 + p x + q splits on the sign of D = p^3/27 + q^2/4.
For D >= 0 the real Cardano branch is evaluated cancellation-free by taking
the cube root whose radicand adds in magnitude and recovering its partner
from z1*z2 = -p/3.  For D < 0 all three roots are real and come from the
trigonometric substitution; the complex Cardano form is still evaluated and
the two must agree to 1e-9, which is asserted rather than assumed.

The closed-form bounds on |root| in the sector p < 0, q < 0 are evaluated
verbatim, including the signed p^3/81 term whose sector soundness the
brute-force property tests adjudicate.  The field-level verifiers translate
the per-site spinor bound (|phi|^2 + kg)|phi| < 4|sigma| and the elliptic
estimate (1-eps^2)|lap phi|^2 + ((|phi|^2+kg)/4)|cov phi|^2 <= (1/eps^2)|sigma|^2
into reports on solved configurations; both are claims about solutions only,
so the regularity report gates itself on the interior residual before
asserting anything.
"""

import cmath
import math
from dataclasses import dataclass

import numpy as np

from . import fields
from . import solver as solver_mod
from .errors import MismatchError, OutOfSectorError, ParameterError
from .lattice import Form, d, inner_product, lp_norm

_LAMBDA = complex(-0.5, math.sqrt(3.0) / 2.0)  # primitive cube root of unity
_AGREE_TOL = 1e-9


@dataclass(frozen=True)
class CubicSolution:
    roots: tuple
    discriminant: float
    bound: float
    branch: str


def _cardano_complex(p, q, disc):
    """Roots by the complex Cardano form, any sign of D."""
    s = cmath.sqrt(complex(disc, 0.0))
    u3 = -q / 2.0 + s
    if abs(u3) == 0.0:
        u3 = -q / 2.0 - s
    z1 = u3 ** (1.0 / 3.0)
    z2 = -p / (3.0 * z1) if z1 != 0 else 0.0
    return tuple(z1 * _LAMBDA**k + z2 * (_LAMBDA**k).conjugate() for k in range(3))


def cubic_solve(p, q) -> CubicSolution:
    """All three roots of x^3 + p x + q, paired so that z1*z2 = -p/3."""
    if not (math.isfinite(p) and math.isfinite(q)):
        raise ParameterError("cubic coefficients must be finite")
    disc = p**3 / 27.0 + q**2 / 4.0
    branch = "D>=0" if disc >= 0 else "D<0"

    if p == 0.0 and q == 0.0:
        roots = (0j, 0j, 0j)
    elif disc >= 0.0:
        t = math.sqrt(disc)
        u3 = -q / 2.0 - t if q > 0 else -q / 2.0 + t
        if u3 == 0.0:
            # q = 0 with p^3 underflowing to zero: x (x^2 + p) = 0 directly
            r = cmath.sqrt(complex(-p))
            roots = (r, -r, 0j)
        else:
            z1 = math.copysign(abs(u3) ** (1.0 / 3.0), u3)
            z2 = -p / (3.0 * z1)
            roots = tuple(
                z1 * _LAMBDA**k + z2 * (_LAMBDA**k).conjugate() for k in range(3)
            )
    else:
        m = 2.0 * math.sqrt(-p / 3.0)
        c = max(-1.0, min(1.0, -4.0 * q / m**3))
        theta = math.acos(c) / 3.0
        roots = tuple(
            complex(m * math.cos(theta - 2.0 * math.pi * k / 3.0)) for k in range(3)
        )
        cardano = _cardano_complex(p, q, disc)
        scale = _AGREE_TOL * (1.0 + abs(p) + abs(q)) * max(
            1.0, max(abs(r) for r in roots) ** 3
        )
        for r in roots:
            assert min(abs(r - rc) for rc in cardano) <= scale, (
                f"trigonometric and Cardano roots disagree at (p,q)=({p},{q})"
            )

    if p < 0.0 and q < 0.0:
        bound = cubic_bound(p, q)[0]
    else:
        bound = math.nan
    return CubicSolution(roots=roots, discriminant=disc, bound=bound, branch=branch)


def cubic_bound(p, q):
    """Closed-form |root| bound in the sector p < 0, q < 0; returns (bound, branch)."""
    if not (math.isfinite(p) and math.isfinite(q)):
        raise ParameterError("cubic coefficients must be finite")
    if p >= 0.0 or q >= 0.0:
        raise OutOfSectorError(
            f"bound is only claimed for p < 0 and q < 0, got (p,q)=({p},{q})"
        )
    disc = p**3 / 27.0 + q**2 / 4.0
    if disc >= 0.0:
        return 8.0 / 3.0 + abs(q) / 3.0 + q**2 / 12.0 + p**3 / 81.0, "D>=0"
    return 3.0 + q**2 / 6.0 + abs(p) ** 3 / 81.0, "D<0"


def largest_positive_root(kg, sigma_abs):
    """Largest sign-change root of Q(w) = w^3 + kg*w - 4*sigma_abs on (0, inf).

    Returns None when Q stays positive there (the bound then forces |phi| = 0).
    """
    if not (math.isfinite(kg) and math.isfinite(sigma_abs)):
        raise ParameterError("arguments must be finite")
    if sigma_abs < 0.0:
        raise ParameterError("sigma_abs must be non-negative")
    q = -4.0 * sigma_abs
    sol = cubic_solve(kg, q)
    scale = 1.0 + max(abs(r) for r in sol.roots)

    def Q(w):
        return w**3 + kg * w + q

    for r in sorted((r.real for r in sol.roots if abs(r.imag) <= 1e-12 * scale),
                    reverse=True):
        if r <= 1e-12 * scale:
            continue
        delta = 1e-7 * (1.0 + abs(r))
        if Q(r - delta) < 0.0 < Q(r + delta):
            return r
    return None


@dataclass(frozen=True)
class PhiBoundReport:
    """Per-interior-site check of |phi| against the root bound."""

    checked_sites: int
    violating_fraction: float
    max_violation: float
    max_q: float
    sup_phi: float
    zero_sigma_cap: float
    slack: float

    def to_keyvalues(self) -> str:
        return "\n".join(
            [
                f"checked_sites={self.checked_sites}",
                f"violating_fraction={self.violating_fraction!r}",
                f"max_violation={self.max_violation!r}",
                f"max_q={self.max_q!r}",
                f"sup_phi={self.sup_phi!r}",
                f"zero_sigma_cap={self.zero_sigma_cap!r}",
                f"slack={self.slack!r}",
            ]
        )


def _site_mags(form):
    return np.sqrt(np.sum(np.abs(form[()]) ** 2, axis=-1))


def phi_bound_check(domain, phi: Form, sigma: Form, slack=0.0) -> PhiBoundReport:
    """Evaluate the spinor a priori bound sitewise on a solved configuration.

    Checks interior sites: boundary values are data, not solution rows, and
    the bound says nothing about them.  With sigma identically zero the report
    additionally carries the flat-cap value k_{X,g} * vol, against which
    sup|phi| is compared; for kg >= 0 that cap is zero and phi must vanish.
    """
    if not (phi.degree == 0 and phi.kind == "spinor"):
        raise MismatchError("phi must be a degree-0 spinor form")
    if not (sigma.degree == 0 and sigma.kind == "spinor"):
        raise MismatchError("sigma must be a degree-0 spinor form")
    if phi.domain != domain or sigma.domain != domain:
        raise MismatchError("fields live on a different domain")

    mask = domain.interior_mask
    pm = _site_mags(phi)[mask]
    sm = _site_mags(sigma)[mask]
    kg = np.broadcast_to(domain.kg, domain.dims)[mask]

    max_violation = -math.inf
    max_q = -math.inf
    violations = 0
    for pmag, smag, k in zip(pm, sm, kg):
        rho = largest_positive_root(float(k), float(smag))
        cap = 0.0 if rho is None else rho
        gap = float(pmag) - cap
        max_violation = max(max_violation, gap)
        max_q = max(max_q, float(pmag) ** 3 + float(k) * float(pmag) - 4.0 * float(smag))
        if gap > slack:
            violations += 1

    if np.all(sm == 0.0):
        kxg = math.sqrt(max(0.0, -float(np.min(kg))))
        zero_sigma_cap = kxg * domain.volume
    else:
        zero_sigma_cap = math.nan
    return PhiBoundReport(
        checked_sites=int(pm.size),
        violating_fraction=violations / pm.size,
        max_violation=max_violation,
        max_q=max_q,
        sup_phi=float(_site_mags(phi).max()),
        zero_sigma_cap=zero_sigma_cap,
        slack=slack,
    )


@dataclass(frozen=True)
class RegularityReport:
    """Norms and inequality checks of the second-order estimates.

    `applicable` records whether the fields pass the interior-residual gate;
    the inequality flags are only claims when it is True.  The Hoelder bound
    is an exact discrete inequality and carries no slack; the elliptic
    estimate carries the caller's slack because it holds exactly only for
    exact solutions.
    """

    applicable: bool
    interior_residual: float
    elliptic_ok: bool
    elliptic_lhs: float
    elliptic_rhs: float
    holder_ok: bool
    holder_lhs: float
    holder_rhs: float
    delta_phi_p: float
    cov_phi_p: float
    f_phi_p: float
    f_cov_phi_p: float
    adjointness_defect: float
    multiplication_defect: float
    fa_l2: float
    fa_l4: float
    fa_l8: float
    eps: float
    p: float
    slack: float

    def to_keyvalues(self) -> str:
        lines = []
        for name in (
            "applicable", "interior_residual", "elliptic_ok", "elliptic_lhs", "elliptic_rhs",
            "holder_ok", "holder_lhs", "holder_rhs", "delta_phi_p", "cov_phi_p",
            "f_phi_p", "f_cov_phi_p", "adjointness_defect", "multiplication_defect",
            "fa_l2", "fa_l4", "fa_l8", "eps", "p", "slack",
        ):
            v = getattr(self, name)
            lines.append(f"{name}={v}" if isinstance(v, bool) else f"{name}={v!r}")
        return "\n".join(lines)


_RESIDUAL_GATE = 1e-4


def _common_cells(domain, arr, axes_already_short):
    sl = []
    for i in range(4):
        if i in axes_already_short:
            sl.append(slice(None))
        else:
            sl.append(slice(0, domain.dims[i] - 1))
    if arr.ndim == 5:
        sl.append(slice(None))
    return arr[tuple(sl)]


def regularity_report(domain, a: Form, phi: Form, sigma: Form, theta: Form,
                      eps, p, slack=0.0) -> RegularityReport:
    """Second-order estimate report at a claimed solution.

    All product norms are taken over the common truncated cell grid so the
    pointwise Cauchy-Schwarz step behind the Hoelder bound is exact.
    """
    if not 0.0 < eps < 1.0:
        raise ParameterError("eps must lie in (0, 1)")
    if not 1.0 < p < 2.0:
        raise ParameterError("p must lie in (1, 2)")
    if theta is None:
        theta = Form.zeros(domain, 1)

    src = solver_mod.SourcePair(theta, sigma)
    _, _, norms = solver_mod.residual(
        domain, "dirichlet", a, phi, src,
        boundary=solver_mod.BoundaryData.from_fields(a, phi),
    )
    source_scale = 1.0 + lp_norm(theta, 2) + lp_norm(sigma, 2)
    applicable = norms.l2 <= _RESIDUAL_GATE * source_scale
    kg_ok = float(np.min(np.broadcast_to(domain.kg, domain.dims))) >= 0.0

    w = fields.covariant_derivative(a, phi)
    lap = fields.laplacian(a, phi)
    f = fields.curvature(a)
    h4 = domain.h**4

    site_factor = (np.sum(np.abs(phi[()]) ** 2, axis=-1)
                   + np.broadcast_to(domain.kg, domain.dims)) / 4.0
    middle = 0.0
    for k in range(4):
        wk = w[(k,)]
        base = site_factor[tuple(
            slice(0, -1) if i == k else slice(None) for i in range(4)
        )]
        middle += float(np.sum(base * np.sum(np.abs(wk) ** 2, axis=-1)))
    middle *= h4
    elliptic_lhs = (1.0 - eps**2) * lp_norm(lap, 2) ** 2 + middle
    elliptic_rhs = (1.0 / eps**2) * lp_norm(sigma, 2) ** 2
    elliptic_ok = bool(applicable and kg_ok and elliptic_lhs <= elliptic_rhs + slack)

    # truncated cell magnitudes for the product inequalities
    fmag_sq = np.zeros(tuple(n - 1 for n in domain.dims))
    for combo in f.comps:
        fmag_sq += _common_cells(domain, f[combo], combo) ** 2
    fmag = np.sqrt(2.0 * fmag_sq)
    wcells = [_common_cells(domain, w[(k,)], (k,)) for k in range(4)]
    wmag = np.sqrt(sum(np.sum(np.abs(c) ** 2, axis=-1) for c in wcells))
    phimag = np.sqrt(np.sum(np.abs(_common_cells(domain, phi[()], ())) ** 2, axis=-1))

    contraction = np.zeros(fmag.shape)
    for k in range(4):
        acc = np.zeros(fmag.shape + (2,), dtype=np.complex128)
        for l in range(4):
            if l == k:
                continue
            combo = (l, k) if l < k else (k, l)
            comp = _common_cells(domain, f[combo], combo)
            sign = 1.0 if l < k else -1.0
            acc += sign * comp[..., np.newaxis] * wcells[l]
        contraction += np.sum(np.abs(acc) ** 2, axis=-1)
    contraction = np.sqrt(contraction)

    def cell_norm(mag, q):
        return float((h4 * np.sum(mag**q)) ** (1.0 / q))

    q_conj = 2.0 * p / (2.0 - p)
    holder_lhs = cell_norm(contraction, p)
    holder_rhs = cell_norm(fmag, q_conj) * cell_norm(wmag, 2.0)

    n2 = Form(domain, 0, "real",
              {(): np.sum(np.abs(phi[()]) ** 2, axis=-1)})
    mult_defect = lp_norm(fields.phi_star(w, phi) - 0.5 * d(n2), 2)

    return RegularityReport(
        applicable=applicable,
        interior_residual=norms.l2,
        elliptic_ok=elliptic_ok,
        elliptic_lhs=elliptic_lhs,
        elliptic_rhs=elliptic_rhs,
        holder_ok=bool(holder_lhs <= holder_rhs),
        holder_lhs=holder_lhs,
        holder_rhs=holder_rhs,
        delta_phi_p=lp_norm(lap, p),
        cov_phi_p=lp_norm(w, p),
        f_phi_p=cell_norm(fmag * phimag, p),
        f_cov_phi_p=holder_lhs,
        adjointness_defect=inner_product(lap, phi) - lp_norm(w, 2) ** 2,
        multiplication_defect=mult_defect,
        fa_l2=lp_norm(f, 2),
        fa_l4=lp_norm(f, 4),
        fa_l8=lp_norm(f, 8),
        eps=eps,
        p=p,
        slack=slack,
    )
