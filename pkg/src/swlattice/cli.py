"""Command line front end.

Seven subcommands: `solve` and `manufacture` drive the descent problem from
field files, `gauge-fix` applies the Coulomb projection to a stored gauge
field, and `gradcheck`, `verify-bounds`, `cubic`, `refine-study` run the
self checks.  All numeric output is repr-formatted key=value lines so two
runs can be compared with diff.

Exit codes: 0 on success, 1 for bad input of any kind (unreadable or
malformed files, inconsistent parameters), 2 when a computation ran to
completion but missed its target (non-convergence, a failed gauge fix, a
check that does not hold).
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

import numpy as np

from .bounds import cubic_solve, phi_bound_check, regularity_report
from .config import RunConfig
from .errors import (
    AbortedRunError,
    GaugeFixFailedError,
    ParameterError,
    SwLatticeError,
)
from .functional import sw_energy, sw_gradient
from .gauge import coulomb_fix
from .io import (
    peek_header,
    read_boundary,
    read_field,
    write_boundary,
    write_field,
)
from .lattice import Form, build_domain, inner_product
from .refine import STUDY_NAMES, refine_study
from .solver import SourcePair, manufacture, solve, write_trace_csv

GRADCHECK_TOL = 1e-6
BOUND_FRACTION = 0.01  # tolerated share of interior sites above the bound


class _Parser(argparse.ArgumentParser):
    # usage problems are input errors; keep exit status 2 for missed targets
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _prefixed(prefix, keyvalues):
    return "\n".join(prefix + line for line in keyvalues.split("\n"))


def _cmd_solve(ns):
    cfg = RunConfig.load(ns.config)
    domain = cfg.domain()
    scfg = dataclasses.replace(cfg.solver_config(), mode=ns.mode)
    source = SourcePair(read_field(ns.theta, domain), read_field(ns.sigma, domain))
    boundary = read_boundary(ns.boundary, domain) if ns.boundary else None
    sol = solve(domain, ns.mode, source, boundary=boundary, config=scfg)

    write_field(f"{ns.out}.A", sol.a_fixed)
    write_field(f"{ns.out}.phi", sol.phi_fixed)
    write_trace_csv(f"{ns.out}.trace.csv", sol.trace)

    energy = sw_energy(domain, sol.a_fixed, sol.phi_fixed)
    phi_sup = float(np.sqrt((np.abs(sol.phi_fixed[()]) ** 2).sum(axis=-1)).max())
    lines = [
        f"mode={sol.mode}",
        f"converged={sol.converged}",
        f"iterations={sol.iterations}",
        f"residual_l2={sol.residual.l2!r}",
        f"residual_sup={sol.residual.sup!r}",
        f"phi_sup={phi_sup!r}",
        f"energy_total={energy.total!r}",
        f"energy_curvature={energy.curvature_term!r}",
        f"energy_dirichlet={energy.dirichlet_term!r}",
        f"energy_quartic={energy.quartic_term!r}",
        f"energy_coupling={energy.curvature_coupling_term!r}",
        f"energy_topological={energy.topological_term!r}",
        _prefixed("coulomb_", sol.coulomb_report.to_keyvalues()),
        sol.h_report.to_keyvalues(),
    ]
    text = "\n".join(lines) + "\n"
    with open(f"{ns.out}.report", "w") as fh:
        fh.write(text)
    sys.stdout.write(text)
    return 0 if sol.converged else 2


def _cmd_manufacture(ns):
    cfg = RunConfig.load(ns.config)
    domain = cfg.domain()
    a_star = read_field(ns.a, domain)
    phi_star = read_field(ns.phi, domain)
    source, boundary = manufacture(domain, a_star, phi_star, ns.mode)
    write_field(f"{ns.out}.theta", source.theta)
    write_field(f"{ns.out}.sigma", source.sigma)
    if boundary is not None:
        write_boundary(f"{ns.out}.boundary", boundary)
    print(f"mode={ns.mode}")
    print(f"theta_l2={inner_product(source.theta, source.theta) ** 0.5!r}")
    print(f"sigma_l2={inner_product(source.sigma, source.sigma) ** 0.5!r}")
    return 0


def _cmd_gauge_fix(ns):
    kind, dims, h = peek_header(ns.a)
    if kind != "oneform":
        raise ParameterError(f"gauge-fix expects a oneform file, got kind={kind!r}")
    domain = build_domain(dims, h)
    a = read_field(ns.a, domain)
    a_fixed, theta, report = coulomb_fix(domain, a, ns.mode)
    write_field(f"{ns.out}.A", a_fixed)
    write_field(f"{ns.out}.theta", theta)
    text = report.to_keyvalues() + "\n"
    with open(f"{ns.out}.report", "w") as fh:
        fh.write(text)
    sys.stdout.write(text)
    return 0


def _cmd_gradcheck(ns):
    domain = build_domain(ns.dims, ns.h, kg_spec=ns.kg, alpha_sq=ns.alpha_sq)
    rng = np.random.Generator(np.random.Philox(ns.seed))

    def one_form(scale):
        return Form(domain, 1, "real", {
            (k,): scale * rng.standard_normal(domain.comp_shape((k,)))
            for k in range(4)
        })

    def spinor(scale):
        shape = domain.dims + (2,)
        return Form(domain, 0, "spinor", {
            (): scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
        })

    a, phi = one_form(0.5), spinor(0.5)
    grad_a, grad_phi = sw_gradient(domain, a, phi)
    worst = 0.0
    for _ in range(ns.directions):
        lam, v = one_form(1.0), spinor(1.0)
        exact = inner_product(grad_a, lam) + inner_product(grad_phi, v)
        shifted = []
        for sign in (1.0, -1.0):
            a_s = Form(domain, 1, "real",
                       {c: a[c] + sign * ns.step * lam[c] for c in a.comps})
            p_s = Form(domain, 0, "spinor", {(): phi[()] + sign * ns.step * v[()]})
            shifted.append(sw_energy(domain, a_s, p_s).total)
        fd = (shifted[0] - shifted[1]) / (2.0 * ns.step)
        worst = max(worst, abs(fd - exact) / max(1.0, abs(exact)))
    print(f"directions={ns.directions}")
    print(f"step={ns.step!r}")
    print(f"max_rel_error={worst!r}")
    return 0 if worst <= GRADCHECK_TOL else 2


def _cmd_verify_bounds(ns):
    cfg = RunConfig.load(ns.config)
    domain = cfg.domain()
    phi = read_field(ns.phi, domain)
    sigma = read_field(ns.sigma, domain)
    rep = phi_bound_check(domain, phi, sigma, slack=ns.slack)
    sys.stdout.write(rep.to_keyvalues() + "\n")
    failed = rep.violating_fraction > BOUND_FRACTION
    if ns.a:
        a = read_field(ns.a, domain)
        theta = read_field(ns.theta, domain) if ns.theta else None
        reg = regularity_report(domain, a, phi, sigma, theta, ns.eps, ns.p,
                                slack=ns.slack)
        sys.stdout.write(_prefixed("regularity_", reg.to_keyvalues()) + "\n")
        if reg.applicable and not (reg.elliptic_ok and reg.holder_ok):
            failed = True
    return 2 if failed else 0


def _cmd_cubic(ns):
    sol = cubic_solve(ns.p, ns.q)
    for i, r in enumerate(sol.roots):
        print(f"root{i}={r.real!r}" if r.imag == 0.0 else f"root{i}={r!r}")
    print(f"discriminant={sol.discriminant!r}")
    print(f"branch={sol.branch}")
    print(f"bound={sol.bound!r}")
    return 0


def _cmd_refine_study(ns):
    result = refine_study(ns.check, base_h=ns.base_h, levels=ns.levels)
    sys.stdout.write(result.to_keyvalues() + "\n")
    return 0 if all(o >= 1.0 for o in result.orders) else 2


def _dims(text):
    parts = tuple(int(t) for t in text.split(","))
    if len(parts) != 4:
        raise ValueError("need four comma separated extents")
    return parts


def build_parser() -> _Parser:
    parser = _Parser(prog="swlattice", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run the descent solver from field files")
    p.add_argument("--mode", choices=("dirichlet", "neumann"), required=True)
    p.add_argument("--config", required=True, help="key=value run configuration")
    p.add_argument("--theta", required=True, help="oneform source file")
    p.add_argument("--sigma", required=True, help="spinor source file")
    p.add_argument("--boundary", help="boundary trace file (dirichlet only)")
    p.add_argument("--out", required=True,
                   help="prefix for .A/.phi/.trace.csv/.report outputs")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("manufacture",
                       help="sources and trace that make stored fields critical")
    p.add_argument("--mode", choices=("dirichlet", "neumann"), required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--a", required=True, help="oneform file for the optimum")
    p.add_argument("--phi", required=True, help="spinor file for the optimum")
    p.add_argument("--out", required=True,
                   help="prefix for .theta/.sigma[/.boundary] outputs")
    p.set_defaults(func=_cmd_manufacture)

    p = sub.add_parser("gauge-fix", help="Coulomb projection of a stored field")
    p.add_argument("--mode", choices=("dirichlet", "neumann"), required=True)
    p.add_argument("--a", required=True, help="oneform file")
    p.add_argument("--out", required=True,
                   help="prefix for .A/.theta/.report outputs")
    p.set_defaults(func=_cmd_gauge_fix)

    p = sub.add_parser("gradcheck",
                       help="finite difference audit of the energy gradient")
    p.add_argument("--dims", type=_dims, default=(3, 3, 3, 3))
    p.add_argument("--h", type=float, default=0.5)
    p.add_argument("--kg", type=float, default=0.2)
    p.add_argument("--alpha-sq", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--directions", type=int, default=20)
    p.add_argument("--step", type=float, default=1e-5)
    p.set_defaults(func=_cmd_gradcheck)

    p = sub.add_parser("verify-bounds",
                       help="pointwise root bound, optionally the energy estimates")
    p.add_argument("--config", required=True)
    p.add_argument("--phi", required=True)
    p.add_argument("--sigma", required=True)
    p.add_argument("--a", help="oneform file; enables the estimate checks")
    p.add_argument("--theta", help="oneform source entering the residual gate")
    p.add_argument("--eps", type=float, default=0.5)
    p.add_argument("--p", type=float, default=1.5)
    p.add_argument("--slack", type=float, default=0.0)
    p.set_defaults(func=_cmd_verify_bounds)

    p = sub.add_parser("cubic", help="roots and bound for x^3 + p*x + q")
    p.add_argument("p", type=float)
    p.add_argument("q", type=float)
    p.set_defaults(func=_cmd_cubic)

    p = sub.add_parser("refine-study", help="observed defect orders under refinement")
    p.add_argument("--check", choices=STUDY_NAMES, required=True)
    p.add_argument("--base-h", type=float, default=0.2)
    p.add_argument("--levels", type=int, default=3)
    p.set_defaults(func=_cmd_refine_study)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return ns.func(ns)
    except (AbortedRunError, GaugeFixFailedError) as e:
        print(f"swlattice: {e}", file=sys.stderr)
        return 2
    except SwLatticeError as e:
        print(f"swlattice: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"swlattice: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
