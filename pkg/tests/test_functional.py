"""Energy and gradient: loop oracle for the summands, finite differences for
the derivative, and the two assembly routes against each other."""

import itertools
import math

import numpy as np
import pytest

from swlattice import (
    EnergyBreakdown,
    Form,
    MismatchError,
    build_domain,
    curvature,
    inner_product,
    manufacture,
    operator_gradient,
    sw_energy,
    sw_gradient,
)
from swlattice.functional import ENERGY_CSV_HEADER, d1, d2

from conftest import (
    fd_directional,
    make_rng,
    random_one_form,
    random_spinor,
)

DIMS = (3, 3, 4, 3)
H = 0.8
KG = 0.3
ALPHA_SQ = 0.2


@pytest.fixture()
def domain():
    rng = make_rng(99)
    kg = KG + 0.1 * rng.standard_normal(DIMS)
    return build_domain(DIMS, H, kg_spec=kg, alpha_sq=ALPHA_SQ)


def loop_energy(domain, a, phi):
    """Every summand by explicit per-cell loops."""
    h = domain.h
    f = curvature(a)
    curv = 0.0
    for c in f.comps:
        for x in itertools.product(*[range(n) for n in domain.comp_shape(c)]):
            curv += 0.25 * h**4 * f[c][x] ** 2
    site = phi[()]
    diri = 0.0
    for k in range(4):
        for x in itertools.product(*[range(n) for n in domain.comp_shape((k,))]):
            xp = list(x)
            xp[k] += 1
            wk = (np.exp(1j * h * a[(k,)][x]) * site[tuple(xp)] - site[x]) / h
            diri += h**4 * float(np.sum(np.abs(wk) ** 2))
    quart = coup = 0.0
    for x in itertools.product(*[range(n) for n in domain.dims]):
        n2 = float(np.sum(np.abs(site[x]) ** 2))
        quart += 0.125 * h**4 * n2 * n2
        coup += 0.25 * h**4 * domain.kg[x] * n2
    return curv, diri, quart, coup, math.pi**2 * domain.alpha_sq


def test_energy_matches_loops(domain):
    rng = make_rng(0)
    a = random_one_form(domain, rng, 0.7)
    phi = random_spinor(domain, rng, 0.7)
    e = sw_energy(domain, a, phi)
    curv, diri, quart, coup, topo = loop_energy(domain, a, phi)
    assert e.curvature_term == pytest.approx(curv, rel=1e-11)
    assert e.dirichlet_term == pytest.approx(diri, rel=1e-11)
    assert e.quartic_term == pytest.approx(quart, rel=1e-11)
    assert e.curvature_coupling_term == pytest.approx(coup, rel=1e-10, abs=1e-12)
    assert e.topological_term == topo
    assert e.total == pytest.approx(curv + diri + quart + coup + topo, rel=1e-11)


def test_energy_of_vacuum(domain):
    e = sw_energy(domain, Form.zeros(domain, 1), Form.zeros(domain, 0, "spinor"))
    assert e.curvature_term == 0.0
    assert e.dirichlet_term == 0.0
    assert e.quartic_term == 0.0
    assert e.curvature_coupling_term == 0.0
    assert e.total == math.pi**2 * ALPHA_SQ


def test_energy_gauge_invariance(domain):
    from swlattice import apply_gauge
    from conftest import random_scalar
    rng = make_rng(1)
    a = random_one_form(domain, rng)
    phi = random_spinor(domain, rng)
    theta = random_scalar(domain, rng, 2.0)
    e = sw_energy(domain, a, phi)
    a2, phi2 = apply_gauge(theta, a, phi)
    e2 = sw_energy(domain, a2, phi2)
    assert abs(e2.total - e.total) <= 1e-12 * (1.0 + abs(e.total))


def test_csv_row_shape():
    e = EnergyBreakdown(1.0, 2.0, 3.0, 4.0, 5.0, 15.0)
    assert len(e.csv_row().split(",")) == len(ENERGY_CSV_HEADER.split(","))


def test_gradient_matches_finite_differences(domain):
    rng = make_rng(2)
    a = random_one_form(domain, rng, 0.5)
    phi = random_spinor(domain, rng, 0.5)
    ga, gp = sw_gradient(domain, a, phi)
    for trial in range(8):
        lam = random_one_form(domain, rng)
        v = random_spinor(domain, rng)
        exact = inner_product(ga, lam) + inner_product(gp, v)
        fd = fd_directional(domain, a, phi, lam, v)
        assert abs(fd - exact) <= 1e-6 * max(1.0, abs(exact))


def test_gradient_single_dof_derivative(domain):
    # one-hot directions exercise boundary rows that random directions average out
    rng = make_rng(3)
    a = random_one_form(domain, rng, 0.5)
    phi = random_spinor(domain, rng, 0.5)
    ga, gp = sw_gradient(domain, a, phi)
    step = 1e-6
    lam = Form.zeros(domain, 1)
    lam.comps[(2,)][0, 0, 0, 0] = 1.0  # boundary link
    fd = fd_directional(domain, a, phi, lam, Form.zeros(domain, 0, "spinor"), step)
    assert abs(fd - inner_product(ga, lam)) <= 1e-5 * max(1.0, abs(fd))
    v = Form.zeros(domain, 0, "spinor")
    v.comps[()][0, 1, 1, 1, 0] = 1.0 + 0.0j  # boundary site, first component
    fd = fd_directional(domain, a, phi, Form.zeros(domain, 1), v, step)
    assert abs(fd - inner_product(gp, v)) <= 1e-5 * max(1.0, abs(fd))


def test_directional_derivative_forms(domain):
    rng = make_rng(4)
    a = random_one_form(domain, rng, 0.5)
    phi = random_spinor(domain, rng, 0.5)
    ga, gp = sw_gradient(domain, a, phi)
    for trial in range(5):
        lam = random_one_form(domain, rng)
        v = random_spinor(domain, rng)
        assert d1(domain, a, phi, lam) == pytest.approx(
            inner_product(ga, lam), rel=1e-11, abs=1e-12
        )
        assert d2(domain, a, phi, v) == pytest.approx(
            inner_product(gp, v), rel=1e-11, abs=1e-12
        )
    with pytest.raises(MismatchError):
        d1(domain, a, phi, v)
    with pytest.raises(MismatchError):
        d2(domain, a, phi, lam)


def test_operator_gradient_matches_on_interior(domain):
    rng = make_rng(5)
    a = random_one_form(domain, rng, 0.5)
    phi = random_spinor(domain, rng, 0.5)
    ga, gp = sw_gradient(domain, a, phi)
    oa, op = operator_gradient(domain, a, phi, transport="compact")
    interior = domain.interior_mask
    for k in range(4):
        # interior links: both endpoints interior sites
        lead = tuple(slice(None, -1) if i == k else slice(None) for i in range(4))
        lift = tuple(slice(1, None) if i == k else slice(None) for i in range(4))
        mask = interior[lead] & interior[lift]
        diff = np.abs(ga[(k,)] - oa[(k,)])[mask]
        if diff.size:
            assert diff.max() <= 1e-11
    dphi = np.abs(gp[()] - op[()])[interior]
    assert dphi.max() <= 1e-11
    with pytest.raises(MismatchError):
        operator_gradient(domain, a, phi, transport="midpoint")


def test_manufactured_constant_spinor(domain):
    # at A = 0 and constant phi = c the phi row is (|c|^2 + kg)/2 * c at
    # interior sites; adjudicated by the finite-difference oracle above
    flat = build_domain(DIMS, H, kg_spec=KG, alpha_sq=0.0)
    c = np.array([0.3 + 0.1j, -0.2j])
    phi = Form(flat, 0, "spinor", {(): np.broadcast_to(c, DIMS + (2,)).copy()})
    source, boundary = manufacture(flat, Form.zeros(flat, 1), phi, "dirichlet")
    want = 0.5 * (float(np.sum(np.abs(c) ** 2)) + KG) * c
    sig = source.sigma[()]
    interior = flat.interior_mask
    assert np.allclose(sig[interior], want, rtol=1e-12, atol=1e-13)
    theta = source.theta
    for k in range(4):
        assert np.max(np.abs(theta[(k,)])) <= 1e-13
