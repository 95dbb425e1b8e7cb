"""Plain-text run configuration: one `key=value` per line, `#` comments.

The normalized form fixes key order and uses repr for floats, so
serialize(parse(text)) is a projection and serialize(parse(serialize(c))) is
the identity.  Every numeric field is validated here with the same rules the
target modules enforce, so a config that parses will also build.
"""

import math
from dataclasses import dataclass, fields as dataclass_fields

from .errors import ParameterError
from .lattice import build_domain
from .solver import SolverConfig


def parse_keyvalues(text, path="<config>"):
    """Raw key=value lines -> dict, preserving first-seen order."""
    out = {}
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParameterError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        value = value.strip()
        if not key:
            raise ParameterError(f"{path}:{lineno}: empty key")
        if key in out:
            raise ParameterError(f"{path}:{lineno}: duplicate key {key!r}")
        out[key] = value
    return out


@dataclass(frozen=True)
class RunConfig:
    """Domain and solver parameters for one command-line run."""

    dims: tuple = (4, 4, 4, 4)
    h: float = 1.0
    kg: float = 0.0
    alpha_sq: float = 0.0
    mode: str = "neumann"
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
        self.domain()
        self.solver_config()

    @classmethod
    def parse(cls, text, path="<config>"):
        raw = parse_keyvalues(text, path)
        known = {f.name: f for f in dataclass_fields(cls)}
        values = {}
        for key, value in raw.items():
            if key not in known:
                raise ParameterError(f"{path}: unknown key {key!r}")
            try:
                if key == "dims":
                    values[key] = tuple(int(t) for t in value.split(","))
                elif key == "mode":
                    values[key] = value
                elif known[key].type is int or isinstance(known[key].default, int):
                    values[key] = int(value)
                else:
                    values[key] = float(value)
            except ValueError:
                raise ParameterError(
                    f"{path}: bad value {value!r} for key {key!r}"
                ) from None
        return cls(**values)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.parse(fh.read(), path=str(path))

    def serialize(self) -> str:
        lines = []
        for f in dataclass_fields(self):
            v = getattr(self, f.name)
            if f.name == "dims":
                lines.append("dims=" + ",".join(str(n) for n in v))
            elif isinstance(v, float):
                lines.append(f"{f.name}={v!r}")
            else:
                lines.append(f"{f.name}={v}")
        return "\n".join(lines) + "\n"

    def domain(self):
        return build_domain(self.dims, self.h, kg_spec=self.kg,
                            alpha_sq=self.alpha_sq)

    def solver_config(self) -> SolverConfig:
        return SolverConfig(
            mode=self.mode,
            tol=self.tol,
            max_iters=self.max_iters,
            step_init=self.step_init,
            shrink=self.shrink,
            decrease=self.decrease,
            monitor_cadence=self.monitor_cadence,
            seed=self.seed,
            energy_cap=self.energy_cap,
            sup_cap=self.sup_cap,
        )
