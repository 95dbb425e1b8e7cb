"""Descent solver for the sourced boundary value problems grad E = (Theta, sigma).

Two problem modes share one loop.  In dirichlet mode the boundary trace (links
with both endpoints on the boundary, spinor values at boundary sites) is frozen
to the given data and only the remaining degrees of freedom move; updates are
masked in place, so the trace of every iterate equals the data bitwise.  In
neumann mode every degree of freedom moves and the natural boundary conditions
are exactly the boundary rows of the gradient going to zero.

The iteration is plain gradient descent with Armijo backtracking on the
objective E(A, phi) - <Theta, A> - <sigma, phi>; the logged `energy` column is
this objective, which the backtracking contract makes non-increasing row by
row.  The physical energy breakdown is logged alongside for the compactness
monitor.  Monitored rows carry in-memory field snapshots, which is what makes
the monitor's sups and pairings recomputable from the trace.

The solver itself consumes no randomness; the only seeded object is the basket
of test directions the monitor pairs the final residual against.
"""

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import fields
from .errors import AbortedRunError, MismatchError, ParameterError
from .functional import _energy_terms, _gradient_arrays
from .gauge import coercivity_report, coulomb_fix, apply_gauge
from .lattice import Form, inner_product

TRACE_CSV_HEADER = ("iter", "energy", "residual_l2", "phi_sup", "coercivity", "step")
WEAK_TEST_DIRECTIONS = 16


@dataclass(frozen=True)
class SourcePair:
    """Right-hand side (Theta, sigma) of the sourced gradient equation."""

    theta: Form
    sigma: Form

    def __post_init__(self):
        if not (self.theta.degree == 1 and self.theta.kind == "real"):
            raise MismatchError("theta must be a degree-1 real form")
        if not (self.sigma.degree == 0 and self.sigma.kind == "spinor"):
            raise MismatchError("sigma must be a degree-0 spinor form")
        if self.theta.domain != self.sigma.domain:
            raise MismatchError("source components live on different domains")

    @classmethod
    def zero(cls, domain):
        return cls(Form.zeros(domain, 1), Form.zeros(domain, 0, "spinor"))


def free_link_masks(domain):
    """Per-axis boolean link arrays, True where a link touches an interior site."""
    imask = domain.interior_mask
    out = []
    for k in range(4):
        lo = imask[tuple(slice(None, -1) if i == k else slice(None) for i in range(4))]
        hi = imask[tuple(slice(1, None) if i == k else slice(None) for i in range(4))]
        out.append(lo | hi)
    return out


class BoundaryData:
    """Trace values: link data on frozen links, spinor data at boundary sites.

    Stored canonically with everything off the trace set zeroed, so two data
    objects describing the same trace compare equal array-wise.
    """

    def __init__(self, domain, a0, phi0):
        self.domain = domain
        self.frozen_masks = [~m for m in free_link_masks(domain)]
        self.site_mask = domain.boundary_mask
        a0 = [np.ascontiguousarray(c, dtype=np.float64) for c in a0]
        if len(a0) != 4 or any(
            a0[k].shape != domain.comp_shape((k,)) for k in range(4)
        ):
            raise MismatchError("a0 must be four full-shape link arrays")
        phi0 = np.ascontiguousarray(phi0, dtype=np.complex128)
        if phi0.shape != domain.dims + (2,):
            raise MismatchError("phi0 must be a full-shape spinor site array")
        if any(not np.isfinite(c).all() for c in a0) or not np.isfinite(phi0).all():
            raise ParameterError("boundary data must be finite")
        self.a0 = []
        for k in range(4):
            keep = np.zeros_like(a0[k])
            keep[self.frozen_masks[k]] = a0[k][self.frozen_masks[k]]
            self.a0.append(keep)
        keep = np.zeros_like(phi0)
        keep[self.site_mask] = phi0[self.site_mask]
        self.phi0 = keep

    @classmethod
    def from_fields(cls, a: Form, phi: Form):
        """Trace of a configuration."""
        if not (a.degree == 1 and a.kind == "real"):
            raise MismatchError("A must be a degree-1 real form")
        if not (phi.degree == 0 and phi.kind == "spinor"):
            raise MismatchError("phi must be a degree-0 spinor form")
        if a.domain != phi.domain:
            raise MismatchError("fields live on different domains")
        return cls(a.domain, [a[(k,)] for k in range(4)], phi[()])

    def apply_to(self, a_comps, phi_arr):
        """Overwrite the trace entries of the given arrays in place."""
        for k in range(4):
            a_comps[k][self.frozen_masks[k]] = self.a0[k][self.frozen_masks[k]]
        phi_arr[self.site_mask] = self.phi0[self.site_mask]

    def matches(self, a_comps, phi_arr) -> bool:
        """Bitwise equality of the trace entries."""
        for k in range(4):
            m = self.frozen_masks[k]
            if not np.array_equal(a_comps[k][m], self.a0[k][m]):
                return False
        return np.array_equal(phi_arr[self.site_mask], self.phi0[self.site_mask])


@dataclass(frozen=True)
class SolverConfig:
    """Descent parameters; `mode` picks the boundary value problem."""

    mode: str
    tol: float = 1e-6
    max_iters: int = 5000
    step_init: float = 1.0
    shrink: float = 0.5
    decrease: float = 1e-4
    monitor_cadence: int = 1
    seed: int = 0
    energy_cap: float = math.inf
    sup_cap: float = math.inf

    def __post_init__(self):
        if self.mode not in ("dirichlet", "neumann"):
            raise ParameterError(f"mode must be 'dirichlet' or 'neumann', got {self.mode!r}")
        if not self.tol > 0:
            raise ParameterError("tol must be positive")
        if not 0 < self.shrink < 1:
            raise ParameterError("shrink must lie in (0, 1)")
        if not 0 < self.decrease < 1:
            raise ParameterError("decrease must lie in (0, 1)")
        if self.max_iters < 0:
            raise ParameterError("max_iters must be non-negative")
        if self.step_init <= 0:
            raise ParameterError("step_init must be positive")
        if self.monitor_cadence < 1:
            raise ParameterError("monitor_cadence must be at least 1")


@dataclass(frozen=True)
class ResidualNorms:
    l2: float
    sup: float


@dataclass
class TraceRow:
    """One monitored iterate; snapshot arrays back the compactness monitor."""

    iteration: int
    energy: float
    residual_l2: float
    phi_sup: float
    coercivity: float
    step: float
    sw_total: float
    a_comps: tuple
    phi: np.ndarray

    def csv_values(self):
        return (
            self.iteration,
            repr(self.energy),
            repr(self.residual_l2),
            repr(self.phi_sup),
            repr(self.coercivity),
            repr(self.step),
        )


@dataclass(frozen=True)
class HConditionReport:
    """Compactness diagnostics of a descent run.

    `weak_convergence_gap` pairs the final restricted residual against a fixed
    seeded basket of unit test directions; `concentration_trace` is the pairing
    of each monitored iterate's adjoint-multiplication term against the offset
    from the final gauge field.
    """

    energy_bound_ok: bool
    energy_sup: float
    sup_norm_ok: bool
    phi_sup_max: float
    weak_convergence_gap: float
    concentration_trace: tuple

    def to_keyvalues(self) -> str:
        lines = [
            f"energy_bound_ok={self.energy_bound_ok}",
            f"energy_sup={self.energy_sup!r}",
            f"sup_norm_ok={self.sup_norm_ok}",
            f"phi_sup_max={self.phi_sup_max!r}",
            f"weak_convergence_gap={self.weak_convergence_gap!r}",
            "concentration_trace=" + ",".join(repr(v) for v in self.concentration_trace),
        ]
        return "\n".join(lines)


@dataclass
class Solution:
    """Outcome of one descent run.

    `a`, `phi` are the raw final iterate (trace guarantees and the
    concentration pairing refer to these); `a_fixed`, `phi_fixed` are the
    Coulomb representative reported for norms and downstream analysis.
    """

    mode: str
    converged: bool
    iterations: int
    a: Form
    phi: Form
    a_fixed: Form
    phi_fixed: Form
    gauge: Form
    coulomb_report: object
    residual: ResidualNorms
    trace: list
    h_report: HConditionReport
    config: SolverConfig


def _phi_sup(phi_arr) -> float:
    mags = np.sqrt(np.sum(np.abs(phi_arr) ** 2, axis=-1))
    return float(mags.max()) if mags.size else 0.0


def _restricted_residual(domain, mode, a_comps, phi_arr, theta_arrs, sigma_arr,
                         link_masks, site_mask):
    ga, gphi = _gradient_arrays(domain, a_comps, phi_arr)
    ra = []
    for k in range(4):
        r = ga[k] - theta_arrs[k]
        if mode == "dirichlet":
            r[~link_masks[k]] = 0.0
        ra.append(r)
    rphi = gphi - sigma_arr
    if mode == "dirichlet":
        rphi[~site_mask] = 0.0
    h4 = domain.h**4
    sq = sum(float(np.sum(r * r)) for r in ra) + float(np.sum(np.abs(rphi) ** 2))
    l2 = math.sqrt(h4 * sq)
    sup = max(max((float(np.max(np.abs(r))) if r.size else 0.0) for r in ra), _phi_sup(rphi))
    return ra, rphi, l2, sup


def residual(domain, mode, a: Form, phi: Form, source: SourcePair,
             boundary: BoundaryData = None):
    """Restricted gradient defect (grad E - source) for the given mode.

    Dirichlet mode zeroes the rows of frozen degrees of freedom and requires
    boundary data; neumann mode keeps every row.
    """
    if mode not in ("dirichlet", "neumann"):
        raise ParameterError(f"mode must be 'dirichlet' or 'neumann', got {mode!r}")
    if mode == "dirichlet" and boundary is None:
        raise ParameterError("dirichlet residual needs boundary data")
    a_comps = [a[(k,)].copy() for k in range(4)]
    phi_arr = phi[()].copy()
    masks = free_link_masks(domain)
    ra, rphi, l2, sup = _restricted_residual(
        domain, mode, a_comps, phi_arr,
        [source.theta[(k,)] for k in range(4)], source.sigma[()],
        masks, domain.interior_mask,
    )
    return (
        Form(domain, 1, "real", {(k,): ra[k] for k in range(4)}),
        Form(domain, 0, "spinor", {(): rphi}),
        ResidualNorms(l2, sup),
    )


def manufacture(domain, a_star: Form, phi_star: Form, mode: str):
    """Source and boundary data that make (a_star, phi_star) an optimum.

    The source is the exact gradient at the seed, restricted to the mode's
    free rows; the boundary data is the seed's trace.  In dirichlet mode the
    residual at the seed is exactly zero by construction.
    """
    if mode not in ("dirichlet", "neumann"):
        raise ParameterError(f"mode must be 'dirichlet' or 'neumann', got {mode!r}")
    ga, gphi = _gradient_arrays(
        domain, [a_star[(k,)] for k in range(4)], phi_star[()]
    )
    if mode == "dirichlet":
        masks = free_link_masks(domain)
        for k in range(4):
            ga[k][~masks[k]] = 0.0
        gphi[~domain.interior_mask] = 0.0
    source = SourcePair(
        Form(domain, 1, "real", {(k,): ga[k] for k in range(4)}),
        Form(domain, 0, "spinor", {(): gphi}),
    )
    return source, BoundaryData.from_fields(a_star, phi_star)


def solve(domain, mode, source: SourcePair, boundary: BoundaryData = None,
          config: SolverConfig = None, initial=None) -> Solution:
    """Descend the sourced energy to a critical point of the chosen problem.

    Stops at residual L2 <= tol (converged) or after max_iters / a stalled
    line search (best-residual iterate returned, flagged).  A non-finite
    objective at an accepted iterate aborts the run; a non-finite trial is
    just backtracked over.
    """
    if config is None:
        config = SolverConfig(mode=mode)
    if config.mode != mode:
        raise MismatchError(f"config mode {config.mode!r} does not match {mode!r}")
    if mode == "dirichlet":
        if boundary is None:
            raise ParameterError("dirichlet solve needs boundary data")
        if boundary.domain != domain:
            raise MismatchError("boundary data lives on a different domain")
    elif boundary is not None:
        raise ParameterError("neumann solve takes no boundary data")
    if source.theta.domain != domain:
        raise MismatchError("source lives on a different domain")

    theta_arrs = [source.theta[(k,)] for k in range(4)]
    sigma_arr = source.sigma[()]
    link_masks = free_link_masks(domain)
    site_mask = domain.interior_mask
    h4 = domain.h**4

    if initial is not None:
        if initial[0].domain != domain or initial[1].domain != domain:
            raise MismatchError("initial iterate lives on a different domain")
        a_cur = [initial[0][(k,)].copy() for k in range(4)]
        phi_cur = initial[1][()].copy()
    else:
        a_cur = [np.zeros(domain.comp_shape((k,))) for k in range(4)]
        phi_cur = np.zeros(domain.dims + (2,), dtype=np.complex128)
    if mode == "dirichlet":
        boundary.apply_to(a_cur, phi_cur)

    def objective(ac, pc):
        sw = sum(_energy_terms(domain, ac, pc))
        pair = h4 * (
            sum(float(np.sum(theta_arrs[k] * ac[k])) for k in range(4))
            + float(np.sum((np.conj(sigma_arr) * pc).real))
        )
        return sw, sw - pair

    sw_cur, obj_cur = objective(a_cur, phi_cur)
    prev_snapshot = (tuple(c.copy() for c in a_cur), phi_cur.copy())
    step_prev = config.step_init
    last_step = 0.0
    best = None  # (res_l2, a copies, phi copy, iteration)
    trace = []
    converged = False
    it = 0

    while True:
        ra, rphi, res_l2, res_sup = _restricted_residual(
            domain, mode, a_cur, phi_cur, theta_arrs, sigma_arr, link_masks, site_mask
        )
        if not (math.isfinite(obj_cur) and math.isfinite(res_l2)):
            raise AbortedRunError(
                f"non-finite state at iteration {it}",
                last_iterate=(
                    Form(domain, 1, "real", {(k,): prev_snapshot[0][k] for k in range(4)}),
                    Form(domain, 0, "spinor", {(): prev_snapshot[1]}),
                ),
                iteration=it,
            )
        prev_snapshot = (tuple(c.copy() for c in a_cur), phi_cur.copy())
        if best is None or res_l2 < best[0]:
            best = (res_l2, tuple(c.copy() for c in a_cur), phi_cur.copy(), it)

        if it % config.monitor_cadence == 0:
            trace.append(_monitor_row(domain, it, obj_cur, sw_cur, res_l2, last_step,
                                      a_cur, phi_cur))
        if res_l2 <= config.tol:
            converged = True
            break
        if it >= config.max_iters:
            break

        gsq = res_l2 * res_l2
        s = min(2.0 * step_prev, config.step_init)
        accepted = False
        while s >= 1e-20:
            a_t = [c.copy() for c in a_cur]
            for k in range(4):
                m = link_masks[k] if mode == "dirichlet" else slice(None)
                a_t[k][m] -= s * ra[k][m]
            phi_t = phi_cur.copy()
            ms = site_mask if mode == "dirichlet" else slice(None)
            phi_t[ms] -= s * rphi[ms]
            sw_t, obj_t = objective(a_t, phi_t)
            if math.isfinite(obj_t) and obj_t <= obj_cur - config.decrease * s * gsq:
                a_cur, phi_cur = a_t, phi_t
                sw_cur, obj_cur = sw_t, obj_t
                step_prev = s
                last_step = s
                accepted = True
                break
            s *= config.shrink
        if not accepted:
            break
        it += 1

    if trace[-1].iteration != it:
        trace.append(_monitor_row(domain, it, obj_cur, sw_cur,
                                  res_l2, last_step, a_cur, phi_cur))

    if not converged and best is not None and best[3] != it:
        a_cur = [c.copy() for c in best[1]]
        phi_cur = best[2].copy()

    a_final = Form(domain, 1, "real", {(k,): a_cur[k] for k in range(4)})
    phi_final = Form(domain, 0, "spinor", {(): phi_cur})
    _, _, norms = residual(domain, mode, a_final, phi_final, source, boundary)

    a_fixed, g, coul = coulomb_fix(domain, a_final, mode)
    _, phi_fixed = apply_gauge(g, a_final, phi_final)
    h_report = h_condition_monitor(
        domain, mode, trace, (a_final, phi_final), source, config
    )
    return Solution(
        mode=mode,
        converged=converged,
        iterations=it,
        a=a_final,
        phi=phi_final,
        a_fixed=a_fixed,
        phi_fixed=phi_fixed,
        gauge=g,
        coulomb_report=coul,
        residual=norms,
        trace=trace,
        h_report=h_report,
        config=config,
    )


def _monitor_row(domain, it, obj, sw, res_l2, step, a_comps, phi_arr):
    a_form = Form(domain, 1, "real", {(k,): a_comps[k].copy() for k in range(4)})
    phi_form = Form(domain, 0, "spinor", {(): phi_arr.copy()})
    coer = coercivity_report(domain, a_form, phi_form)
    return TraceRow(
        iteration=it,
        energy=obj,
        residual_l2=res_l2,
        phi_sup=_phi_sup(phi_arr),
        coercivity=coer,
        step=step,
        sw_total=sw,
        a_comps=tuple(a_form[(k,)] for k in range(4)),
        phi=phi_form[()],
    )


def h_condition_monitor(domain, mode, trace, final, source: SourcePair,
                        config: SolverConfig) -> HConditionReport:
    """Evaluate the three compactness clauses on a monitored trace.

    Bound clauses compare the trace sups of physical energy and spinor sup
    norm against the config caps.  The weak clause pairs the final restricted
    residual with WEAK_TEST_DIRECTIONS seeded unit directions supported on the
    mode's free rows.  The concentration sequence pairs each iterate's
    adjoint-multiplication term with its gauge-field offset from the final
    iterate; on a converged run it has to die out.
    """
    if not trace:
        raise ParameterError("empty trace")
    a_final, phi_final = final

    energy_sup = max(row.sw_total for row in trace)
    phi_sup_max = max(row.phi_sup for row in trace)

    link_masks = free_link_masks(domain)
    site_mask = domain.interior_mask
    a_comps = [a_final[(k,)].copy() for k in range(4)]
    phi_arr = phi_final[()].copy()
    ra, rphi, _, _ = _restricted_residual(
        domain, mode, a_comps, phi_arr,
        [source.theta[(k,)] for k in range(4)], source.sigma[()],
        link_masks, site_mask,
    )
    h4 = domain.h**4
    rng = np.random.Generator(np.random.Philox(config.seed))
    gap = 0.0
    for _ in range(WEAK_TEST_DIRECTIONS):
        xa = [rng.normal(size=domain.comp_shape((k,))) for k in range(4)]
        xp = rng.normal(size=domain.dims + (2,)) + 1j * rng.normal(size=domain.dims + (2,))
        if mode == "dirichlet":
            for k in range(4):
                xa[k][~link_masks[k]] = 0.0
            xp[~site_mask] = 0.0
        nrm = math.sqrt(h4 * (
            sum(float(np.sum(c * c)) for c in xa) + float(np.sum(np.abs(xp) ** 2))
        ))
        pair = h4 * (
            sum(float(np.sum(ra[k] * xa[k])) for k in range(4))
            + float(np.sum((np.conj(rphi) * xp).real))
        )
        gap = max(gap, abs(pair) / nrm)

    concentration = []
    for row in trace:
        a_n = Form(domain, 1, "real", {(k,): row.a_comps[k] for k in range(4)})
        phi_n = Form(domain, 0, "spinor", {(): row.phi})
        term = fields.phi_star(fields.covariant_derivative(a_n, phi_n), phi_n)
        concentration.append(inner_product(term, a_n - a_final))

    return HConditionReport(
        energy_bound_ok=energy_sup <= config.energy_cap,
        energy_sup=energy_sup,
        sup_norm_ok=phi_sup_max <= config.sup_cap,
        phi_sup_max=phi_sup_max,
        weak_convergence_gap=gap,
        concentration_trace=tuple(concentration),
    )


def write_trace_csv(path, trace):
    """Write the scalar trace columns; snapshots stay in memory."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_CSV_HEADER)
        for row in trace:
            writer.writerow(row.csv_values())
