"""Text serialization of fields and boundary data.

A field file is a one-line header

    swfield v1 kind=<scalar|oneform|twoform|spinor> dims=d1,d2,d3,d4 h=<real>

followed by one line per cell in lexicographic order, x1 fastest.  Real forms
carry one decimal float per line; spinor files carry four per line
(re1 im1 re2 im2).  Forms of degree above 0 list their components in the
fixed combination order, each component block again x1 fastest.  Floats are
written with repr, so write -> read is bitwise.

Boundary data uses the same cell layout under a `swboundary v1` header: first
the four link blocks, then the spinor sites.  Off-trace entries are written as
the zeros the canonical representation stores.
"""

import numpy as np

from .errors import FieldFormatError, MismatchError, ParameterError
from .lattice import COMBOS, Form
from .solver import BoundaryData

_KIND_BY_FORM = {
    (0, "real"): "scalar",
    (1, "real"): "oneform",
    (2, "real"): "twoform",
    (0, "spinor"): "spinor",
}
_FORM_BY_KIND = {v: k for k, v in _KIND_BY_FORM.items()}


def _header(tag, kind, domain):
    dims = ",".join(str(n) for n in domain.dims)
    if kind:
        return f"{tag} v1 kind={kind} dims={dims} h={domain.h!r}"
    return f"{tag} v1 dims={dims} h={domain.h!r}"


def _real_lines(comps, degree):
    lines = []
    for combo in COMBOS[degree]:
        for v in comps[combo].ravel(order="F"):
            lines.append(repr(float(v)))
    return lines


def _spinor_lines(arr):
    flat = arr.reshape(-1, 2, order="F")  # trailing component axis kept
    lines = []
    for row in flat:
        vals = (row[0].real, row[0].imag, row[1].real, row[1].imag)
        lines.append(" ".join(repr(float(v)) for v in vals))
    return lines


def write_field(path, form: Form):
    """Serialize a form; only the four file kinds are representable."""
    key = (form.degree, form.kind)
    if key not in _KIND_BY_FORM:
        raise ParameterError(
            f"no file kind for degree {form.degree} {form.kind} forms"
        )
    kind = _KIND_BY_FORM[key]
    if kind == "spinor":
        lines = _spinor_lines(form[()])
    else:
        lines = _real_lines(form.comps, form.degree)
    with open(path, "w") as fh:
        fh.write(_header("swfield", kind, form.domain) + "\n")
        fh.write("\n".join(lines))
        fh.write("\n")


def _parse_header(path, line, tag, expect_kind=True):
    parts = line.split()
    want = 5 if expect_kind else 4
    if len(parts) != want or parts[0] != tag or parts[1] != "v1":
        raise FieldFormatError(path, 1, f"malformed {tag} header")
    fields = {}
    for part in parts[2:]:
        if "=" not in part:
            raise FieldFormatError(path, 1, f"malformed header token {part!r}")
        k, v = part.split("=", 1)
        fields[k] = v
    keys = {"kind", "dims", "h"} if expect_kind else {"dims", "h"}
    if set(fields) != keys:
        raise FieldFormatError(path, 1, f"header must carry exactly {sorted(keys)}")
    try:
        dims = tuple(int(t) for t in fields["dims"].split(","))
        h = float(fields["h"])
    except ValueError as e:
        raise FieldFormatError(path, 1, str(e)) from None
    return fields.get("kind"), dims, h


def _check_domain(path, domain, dims, h):
    if domain.dims != dims or domain.h != h:
        raise FieldFormatError(
            path, 1,
            f"header dims={dims} h={h!r} does not match the domain "
            f"dims={domain.dims} h={domain.h!r}",
        )


def _floats(path, lineno, line, count):
    parts = line.split()
    if len(parts) != count:
        raise FieldFormatError(
            path, lineno, f"expected {count} values, found {len(parts)}"
        )
    try:
        return [float(p) for p in parts]
    except ValueError:
        raise FieldFormatError(path, lineno, f"unparsable value in {line!r}") from None


def _body_lines(path, text):
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    for i, line in enumerate(lines[1:], start=2):
        if not line.strip():
            raise FieldFormatError(path, i, "blank record line")
    return lines


def peek_header(path):
    """Header fields (kind, dims, h) without reading the body."""
    with open(path) as fh:
        first = fh.readline().rstrip("\n")
    return _parse_header(path, first, "swfield")


def read_field(path, domain) -> Form:
    """Parse a field file into a form on the given domain.

    The header must agree with the domain's dims and spacing exactly.
    """
    with open(path) as fh:
        text = fh.read()
    lines = _body_lines(path, text)
    if not lines:
        raise FieldFormatError(path, 1, "empty file")
    kind, dims, h = _parse_header(path, lines[0], "swfield")
    if kind not in _FORM_BY_KIND:
        raise FieldFormatError(path, 1, f"unknown kind {kind!r}")
    _check_domain(path, domain, dims, h)
    degree, value_kind = _FORM_BY_KIND[kind]

    if value_kind == "spinor":
        expect = domain.site_count
        if len(lines) - 1 != expect:
            raise FieldFormatError(
                path, len(lines), f"expected {expect} records, found {len(lines) - 1}"
            )
        flat = np.empty((expect, 2), dtype=np.complex128)
        for i, line in enumerate(lines[1:]):
            v = _floats(path, i + 2, line, 4)
            flat[i, 0] = complex(v[0], v[1])
            flat[i, 1] = complex(v[2], v[3])
        arr = np.empty(domain.dims + (2,), dtype=np.complex128)
        for c in range(2):
            arr[..., c] = flat[:, c].reshape(domain.dims, order="F")
        return Form(domain, 0, "spinor", {(): arr})

    shapes = [domain.comp_shape(c) for c in COMBOS[degree]]
    counts = [int(np.prod(s)) for s in shapes]
    expect = sum(counts)
    if len(lines) - 1 != expect:
        raise FieldFormatError(
            path, len(lines), f"expected {expect} records, found {len(lines) - 1}"
        )
    comps = {}
    pos = 1
    for combo, shape, count in zip(COMBOS[degree], shapes, counts):
        vals = np.empty(count)
        for i in range(count):
            vals[i] = _floats(path, pos + i + 1, lines[pos + i], 1)[0]
        comps[combo] = vals.reshape(shape, order="F")
        pos += count
    return Form(domain, degree, "real", comps)


def write_boundary(path, boundary: BoundaryData):
    lines = _real_lines({(k,): boundary.a0[k] for k in range(4)}, 1)
    lines += _spinor_lines(boundary.phi0)
    with open(path, "w") as fh:
        fh.write(_header("swboundary", None, boundary.domain) + "\n")
        fh.write("\n".join(lines))
        fh.write("\n")


def read_boundary(path, domain) -> BoundaryData:
    with open(path) as fh:
        text = fh.read()
    lines = _body_lines(path, text)
    if not lines:
        raise FieldFormatError(path, 1, "empty file")
    _, dims, h = _parse_header(path, lines[0], "swboundary", expect_kind=False)
    _check_domain(path, domain, dims, h)
    shapes = [domain.comp_shape((k,)) for k in range(4)]
    counts = [int(np.prod(s)) for s in shapes]
    expect = sum(counts) + domain.site_count
    if len(lines) - 1 != expect:
        raise FieldFormatError(
            path, len(lines), f"expected {expect} records, found {len(lines) - 1}"
        )
    a0 = []
    pos = 1
    for shape, count in zip(shapes, counts):
        vals = np.empty(count)
        for i in range(count):
            vals[i] = _floats(path, pos + i + 1, lines[pos + i], 1)[0]
        a0.append(vals.reshape(shape, order="F"))
        pos += count
    flat = np.empty((domain.site_count, 2), dtype=np.complex128)
    for i in range(domain.site_count):
        v = _floats(path, pos + i + 1, lines[pos + i], 4)
        flat[i, 0] = complex(v[0], v[1])
        flat[i, 1] = complex(v[2], v[3])
    phi0 = np.empty(domain.dims + (2,), dtype=np.complex128)
    for c in range(2):
        phi0[..., c] = flat[:, c].reshape(domain.dims, order="F")
    return BoundaryData(domain, a0, phi0)
