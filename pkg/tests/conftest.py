"""Shared fixtures: random field builders and the reference descent run.

The reference run (4^4 Dirichlet manufactured problem, smooth seed, 10%
perturbed start) is session scoped because four acceptance checks interrogate
the same solution and it costs about a second to produce.
"""

import dataclasses
import time

import numpy as np
import pytest

from swlattice import (
    BoundaryData,
    Form,
    SolverConfig,
    build_domain,
    manufacture,
    solve,
    sw_energy,
    write_trace_csv,
)

RUN_TOL = 1e-6


def make_rng(seed):
    return np.random.Generator(np.random.Philox(seed))


def random_one_form(domain, rng, scale=1.0):
    return Form(domain, 1, "real", {
        (k,): scale * rng.standard_normal(domain.comp_shape((k,)))
        for k in range(4)
    })


def random_two_form(domain, rng, scale=1.0):
    from swlattice import COMBOS
    return Form(domain, 2, "real", {
        c: scale * rng.standard_normal(domain.comp_shape(c))
        for c in COMBOS[2]
    })


def random_spinor(domain, rng, scale=1.0):
    shape = domain.dims + (2,)
    return Form(domain, 0, "spinor", {
        (): scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
    })


def random_scalar(domain, rng, scale=1.0):
    return Form(domain, 0, "real", {(): scale * rng.standard_normal(domain.dims)})


def smooth_seed(domain, amp):
    """Low-frequency trigonometric (A, phi) pair.

    Chosen so the manufactured problem is a strict local minimum: white-noise
    seeds make the quartic coupling of the manufactured source indefinite and
    descent stalls on a saddle.
    """
    def grids(shape):
        return np.meshgrid(*[np.arange(n) for n in shape], indexing="ij")

    a_comps = {}
    for k in range(4):
        x = grids(domain.comp_shape((k,)))
        a_comps[(k,)] = amp * np.cos(0.4 * x[k] + 0.2 * k) * np.sin(
            0.3 * x[(k + 1) % 4] + 0.1
        )
    x = grids(domain.dims)
    ph = np.empty(domain.dims + (2,), dtype=np.complex128)
    ph[..., 0] = amp * (np.cos(0.3 * x[0]) + 0.5j * np.sin(0.2 * x[1] + 0.3))
    ph[..., 1] = amp * (np.sin(0.25 * x[2] + 0.1) + 0.4j * np.cos(0.2 * x[3]))
    return Form(domain, 1, "real", a_comps), Form(domain, 0, "spinor", {(): ph})


def fd_directional(domain, a, phi, lam, v, step=1e-5):
    """Central finite difference of the energy along (lam, v)."""
    vals = []
    for sign in (1.0, -1.0):
        a_s = Form(domain, 1, "real",
                   {c: a[c] + sign * step * lam[c] for c in a.comps})
        p_s = Form(domain, 0, "spinor", {(): phi[()] + sign * step * v[()]})
        vals.append(sw_energy(domain, a_s, p_s).total)
    return (vals[0] - vals[1]) / (2.0 * step)


@dataclasses.dataclass(frozen=True)
class ReferenceRun:
    domain: object
    a_star: Form
    phi_star: Form
    source: object
    boundary: BoundaryData
    solution: object
    tol: float
    trace_path: str
    report_path: str
    solve_seconds: float


@pytest.fixture(scope="session")
def reference_run(tmp_path_factory):
    domain = build_domain((4, 4, 4, 4), 1.0, kg_spec=1.0, alpha_sq=0.25)
    amp = 0.8
    a_star, phi_star = smooth_seed(domain, amp)
    source, boundary = manufacture(domain, a_star, phi_star, "dirichlet")

    rng = make_rng(3)
    a0 = Form(domain, 1, "real", {
        (k,): a_star[(k,)] + 0.1 * amp * rng.standard_normal(domain.comp_shape((k,)))
        for k in range(4)
    })
    shape = domain.dims + (2,)
    p0 = Form(domain, 0, "spinor", {
        (): phi_star[()] + 0.1 * amp * (
            rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        )
    })
    config = SolverConfig(mode="dirichlet", tol=RUN_TOL, max_iters=20000,
                          monitor_cadence=25)
    t0 = time.perf_counter()
    solution = solve(domain, "dirichlet", source, boundary=boundary,
                     config=config, initial=(a0, p0))
    solve_seconds = time.perf_counter() - t0

    out = tmp_path_factory.mktemp("reference_run")
    trace_path = str(out / "run.trace.csv")
    report_path = str(out / "run.report")
    write_trace_csv(trace_path, solution.trace)
    with open(report_path, "w") as fh:
        fh.write(solution.h_report.to_keyvalues() + "\n")
    return ReferenceRun(domain, a_star, phi_star, source, boundary, solution,
                        RUN_TOL, trace_path, report_path, solve_seconds)
