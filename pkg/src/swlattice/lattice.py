"""4D box lattices and the discrete differential-forms calculus on them.

Sites live on a regular grid with ``dims[i]`` points along axis ``i`` and
spacing ``h``.  A degree-r form carries one coefficient per oriented r-cell;
the component array for an axis combination ``T`` is shortened by one along
every axis in ``T``.  Array axis ``i`` is coordinate ``x_{i+1}``, and the
serial order of sites is lexicographic with ``x_1`` fastest,

    index = x1 + dims1*(x2 + dims2*(x3 + dims3*x4)),

which is Fortran raveling of the arrays.

The exterior derivative ``d`` uses forward differences over ``h``.  Two
adjoints of it appear and must not be confused:

* ``d_transpose`` is the exact matrix transpose under the uniform cell
  measure (zero extension past the array ends).  Gradient assembly uses it so
  that directional-derivative identities hold to round-off.
* ``codifferential`` is the interior formula that drops the extreme layers of
  each backward difference.  It agrees with ``d_transpose`` on interior cells
  and is the operator meant by "d*" in divergence conditions.

``boundary_defect`` measures the gap between the two pairings and is the
discrete stand-in for every boundary integral in the estimates.
"""

import itertools
import math

import numpy as np

from . import _backend
from .errors import InvalidDomainError, MismatchError, ParameterError

#: Axis combinations per degree, in the fixed component order used everywhere.
COMBOS: dict[int, tuple[tuple[int, ...], ...]] = {
    r: tuple(itertools.combinations(range(4), r)) for r in range(5)
}


def insertion_sign(axis: int, target: tuple[int, ...]) -> int:
    """Sign (-1)**k where k is the position of `axis` inside the sorted combo."""
    return -1 if target.index(axis) % 2 else 1


class LatticeDomain:
    """Regular 4D box of sites with spacing h and per-site curvature samples.

    Parameters
    ----------
    dims : tuple of 4 ints
        Sites per axis, each at least 3 so an interior slab exists.
    h : float
        Lattice spacing, positive.
    kg : ndarray
        Scalar curvature samples, one per site (shape ``dims``).
    alpha_sq : float
        Coefficient of the constant pi^2 * alpha_sq energy term.
    """

    def __init__(self, dims, h, kg, alpha_sq):
        dims = tuple(int(n) for n in dims)
        if len(dims) != 4:
            raise InvalidDomainError(f"need four axis lengths, got {len(dims)}")
        if any(n < 3 for n in dims):
            raise InvalidDomainError(f"every axis needs at least 3 sites, got {dims}")
        h = float(h)
        if not math.isfinite(h) or h <= 0.0:
            raise InvalidDomainError(f"spacing must be a positive finite number, got {h}")
        kg = np.ascontiguousarray(kg, dtype=np.float64)
        if kg.shape != dims:
            raise InvalidDomainError(f"kg table has shape {kg.shape}, domain is {dims}")
        if not np.isfinite(kg).all():
            raise InvalidDomainError("kg samples must be finite")
        alpha_sq = float(alpha_sq)
        if not math.isfinite(alpha_sq):
            raise InvalidDomainError("alpha_sq must be finite")

        self.dims = dims
        self.h = h
        self.kg = kg
        self.alpha_sq = alpha_sq
        self.site_count = math.prod(dims)
        self.volume = h**4 * self.site_count
        interior = np.zeros(dims, dtype=bool)
        interior[1:-1, 1:-1, 1:-1, 1:-1] = True
        self.interior_mask = interior

    @property
    def boundary_mask(self):
        return ~self.interior_mask

    def comp_shape(self, combo: tuple[int, ...]) -> tuple[int, ...]:
        """Grid shape of the component array for one axis combination."""
        return tuple(n - 1 if i in combo else n for i, n in enumerate(self.dims))

    def __eq__(self, other):
        if not isinstance(other, LatticeDomain):
            return NotImplemented
        return (
            self.dims == other.dims
            and self.h == other.h
            and self.alpha_sq == other.alpha_sq
            and np.array_equal(self.kg, other.kg)
        )

    def __hash__(self):
        return hash((self.dims, self.h, self.alpha_sq))

    def __repr__(self):
        return f"LatticeDomain(dims={self.dims}, h={self.h}, alpha_sq={self.alpha_sq})"


def build_domain(dims, h, kg_spec=0.0, alpha_sq=0.0) -> LatticeDomain:
    """Build a classified domain from axis lengths, spacing and coefficient data.

    `kg_spec` is either a constant (broadcast to every site) or a full table of
    per-site values with shape ``dims``.
    """
    dims = tuple(int(n) for n in dims)
    if len(dims) != 4:
        raise InvalidDomainError(f"need four axis lengths, got {len(dims)}")
    if np.isscalar(kg_spec):
        kg = np.full(dims, float(kg_spec), dtype=np.float64)
    else:
        kg = np.ascontiguousarray(kg_spec, dtype=np.float64)
    return LatticeDomain(dims, h, kg, alpha_sq)


class Form:
    """Degree-r form with one compact component array per axis combination.

    `kind` is "real" (float64 coefficients) or "spinor" (complex128 with a
    trailing length-2 component axis).  Coefficients must be finite; arithmetic
    revalidates through the constructor.
    """

    __slots__ = ("domain", "degree", "kind", "comps")

    def __init__(self, domain, degree, kind, comps):
        if degree not in COMBOS:
            raise MismatchError(f"degree must be 0..4, got {degree}")
        if kind not in ("real", "spinor"):
            raise MismatchError(f"kind must be 'real' or 'spinor', got {kind!r}")
        dtype = np.complex128 if kind == "spinor" else np.float64
        trail = (2,) if kind == "spinor" else ()
        clean = {}
        for combo in COMBOS[degree]:
            if combo not in comps:
                raise MismatchError(f"missing component {combo} for degree {degree}")
            arr = np.ascontiguousarray(comps[combo], dtype=dtype)
            want = domain.comp_shape(combo) + trail
            if arr.shape != want:
                raise MismatchError(
                    f"component {combo} has shape {arr.shape}, expected {want}"
                )
            if not np.isfinite(arr).all():
                raise ParameterError(f"component {combo} has non-finite coefficients")
            clean[combo] = arr
        if len(comps) != len(COMBOS[degree]):
            raise MismatchError(f"degree {degree} takes exactly {len(COMBOS[degree])} components")
        self.domain = domain
        self.degree = degree
        self.kind = kind
        self.comps = clean

    @classmethod
    def zeros(cls, domain, degree, kind="real"):
        dtype = np.complex128 if kind == "spinor" else np.float64
        trail = (2,) if kind == "spinor" else ()
        comps = {
            combo: np.zeros(domain.comp_shape(combo) + trail, dtype=dtype)
            for combo in COMBOS[degree]
        }
        return cls(domain, degree, kind, comps)

    def copy(self):
        return Form(
            self.domain, self.degree, self.kind,
            {combo: arr.copy() for combo, arr in self.comps.items()},
        )

    def __getitem__(self, key):
        if isinstance(key, int):
            key = (key,)
        return self.comps[tuple(key)]

    def _check_compatible(self, other):
        if not isinstance(other, Form):
            raise TypeError(f"expected a Form, got {type(other).__name__}")
        if self.degree != other.degree or self.kind != other.kind:
            raise MismatchError(
                f"cannot combine degree {self.degree} {self.kind} with "
                f"degree {other.degree} {other.kind}"
            )
        if self.domain != other.domain:
            raise MismatchError("forms live on different domains")

    def __add__(self, other):
        self._check_compatible(other)
        return Form(
            self.domain, self.degree, self.kind,
            {c: self.comps[c] + other.comps[c] for c in self.comps},
        )

    def __sub__(self, other):
        self._check_compatible(other)
        return Form(
            self.domain, self.degree, self.kind,
            {c: self.comps[c] - other.comps[c] for c in self.comps},
        )

    def __mul__(self, scalar):
        s = float(scalar)
        return Form(
            self.domain, self.degree, self.kind,
            {c: arr * s for c, arr in self.comps.items()},
        )

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def __repr__(self):
        return f"Form(degree={self.degree}, kind={self.kind!r}, dims={self.domain.dims})"


# ===== exterior calculus =====================================================


def d(form: Form) -> Form:
    """Exterior derivative by forward differences over h."""
    if form.degree >= 4:
        raise MismatchError("d is undefined on degree-4 forms")
    dom = form.domain
    out = {}
    for target in COMBOS[form.degree + 1]:
        acc = None
        for axis in target:
            src = tuple(a for a in target if a != axis)
            term = _backend.forward_diff(form.comps[src], axis, dom.h)
            if insertion_sign(axis, target) < 0:
                term = -term
            acc = term if acc is None else acc + term
        out[target] = acc
    return Form(dom, form.degree + 1, form.kind, out)


def d_transpose(form: Form) -> Form:
    """Exact transpose of d under the uniform cell measure.

    Backward differences with zero extension past the array ends; the extreme
    layers carry the half-stencil contributions that make this the literal
    adjoint on the whole box.
    """
    if form.degree == 0:
        raise MismatchError("d_transpose is undefined on 0-forms")
    dom = form.domain
    out = {}
    for target in COMBOS[form.degree - 1]:
        acc = None
        for axis in range(4):
            if axis in target:
                continue
            src = tuple(sorted(target + (axis,)))
            term = _backend.forward_diff_transpose(form.comps[src], axis, dom.h)
            if insertion_sign(axis, src) < 0:
                term = -term
            acc = term if acc is None else acc + term
        out[target] = acc
    return Form(dom, form.degree - 1, form.kind, out)


def codifferential(form: Form) -> Form:
    """Adjoint of d as seen by interior-supported test forms.

    Same backward differences as `d_transpose` but each directional term is
    zeroed on its two extreme layers, so only full stencils survive.  Pairing
    against a form that vanishes near the boundary cannot tell the two apart.
    """
    if form.degree == 0:
        raise MismatchError("codifferential is undefined on 0-forms")
    dom = form.domain
    out = {}
    for target in COMBOS[form.degree - 1]:
        acc = None
        for axis in range(4):
            if axis in target:
                continue
            src = tuple(sorted(target + (axis,)))
            term = _backend.forward_diff_transpose(form.comps[src], axis, dom.h)
            lead = (slice(None),) * axis
            term[lead + (0,)] = 0.0
            term[lead + (-1,)] = 0.0
            if insertion_sign(axis, src) < 0:
                term = -term
            acc = term if acc is None else acc + term
        out[target] = acc
    return Form(dom, form.degree - 1, form.kind, out)


# ===== pairings and norms ====================================================


def inner_product(a: Form, b: Form) -> float:
    """Cell-measure inner product h^4 * sum over cells.

    Spinor forms pair through the real part of the hermitian product, so the
    result is always real.
    """
    a._check_compatible(b)
    total = 0.0
    for combo in COMBOS[a.degree]:
        x, y = a.comps[combo], b.comps[combo]
        if a.kind == "spinor":
            total += float(np.sum((np.conj(x) * y).real))
        else:
            total += float(np.sum(x * y))
    return a.domain.h**4 * total


def _cell_magnitudes(arr, kind):
    # spinor cells hold a C^2 coefficient; its size is the euclidean norm
    if kind == "spinor":
        return np.sqrt(np.sum(np.abs(arr) ** 2, axis=-1))
    return np.abs(arr)


def lp_norm(form: Form, p) -> float:
    """L^p norm of the cell coefficients under the h^4 measure; p >= 1 or inf."""
    if p != math.inf and not p >= 1.0:
        raise ParameterError(f"p must be >= 1 or inf, got {p}")
    mags = [_cell_magnitudes(form.comps[c], form.kind) for c in COMBOS[form.degree]]
    if p == math.inf:
        return max(float(m.max()) if m.size else 0.0 for m in mags)
    total = sum(float(np.sum(m**p)) for m in mags)
    return (form.domain.h**4 * total) ** (1.0 / p)


def sobolev_norm(form: Form, k: int, p) -> float:
    """Flat Sobolev norm (sum_{i<=k} ||D^i a||_p^p)^(1/p), inf as the max.

    D is the plain forward-difference gradient of every component array along
    every axis, ignoring any gauge field.  Levels up to k = 2; the h^4 cell
    measure weights every derivative grid.
    """
    if k not in (0, 1, 2):
        raise ParameterError(f"k must be 0, 1 or 2, got {k}")
    if p != math.inf and not p >= 1.0:
        raise ParameterError(f"p must be >= 1 or inf, got {p}")
    h = form.domain.h
    level = [form.comps[c] for c in COMBOS[form.degree]]
    total = 0.0
    sup = 0.0
    for i in range(k + 1):
        if i > 0:
            level = [
                _backend.forward_diff(arr, axis, h)
                for arr in level
                for axis in range(4)
            ]
        for arr in level:
            m = _cell_magnitudes(arr, form.kind)
            if m.size == 0:
                continue
            if p == math.inf:
                sup = max(sup, float(m.max()))
            else:
                total += float(np.sum(m**p))
    if p == math.inf:
        return sup
    return (h**4 * total) ** (1.0 / p)


def boundary_defect(omega: Form, eta: Form) -> float:
    """<d omega, eta> - <omega, d* eta>; the discrete boundary integral.

    Evaluated literally from the two pairings.  Zero to round-off whenever
    `omega` is supported on interior cells.
    """
    if eta.degree != omega.degree + 1:
        raise MismatchError(
            f"defect needs degrees (r, r+1), got ({omega.degree}, {eta.degree})"
        )
    return inner_product(d(omega), eta) - inner_product(omega, codifferential(eta))
