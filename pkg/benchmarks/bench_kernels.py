"""Timing comparison of the compiled and pure-numpy array kernels.

Runs each hot kernel on both backends at a few grid sizes and prints the
median per-call time and the speedup.  Numbers are wall clock on whatever
machine this runs on; the point is the ratio, not the absolute figures.

    python3 benchmarks/bench_kernels.py [--sizes 8,16,24] [--repeats 30]

An end-to-end descent comparison is available with --solve; it runs the same
small manufactured problem twice in subprocesses with SWLATTICE_BACKEND
forced, so the whole pipeline (not just the kernels) is measured.
"""

import argparse
import os
import statistics
import subprocess
import sys
import time

import numpy as np

from swlattice import _kernels_np as knp

try:
    from swlattice import _kernels_cy as kcy
except ImportError:
    kcy = None


def timed(fn, repeats):
    best = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best.append(time.perf_counter() - t0)
    return statistics.median(best)


def bench_size(n, repeats):
    dims = (n, n, n, n)
    rng = np.random.Generator(np.random.Philox(0))
    u = rng.standard_normal(dims)
    phi = rng.standard_normal(dims + (2,)) + 1j * rng.standard_normal(dims + (2,))
    axis = 1
    link = tuple(m - 1 if k == axis else m for k, m in enumerate(dims))
    a = rng.standard_normal(link)
    w = rng.standard_normal(link + (2,)) + 1j * rng.standard_normal(link + (2,))
    out = np.zeros(dims + (2,), dtype=np.complex128)

    cases = [
        ("forward_diff", lambda k: k.forward_diff(u, axis, 0.5)),
        ("forward_diff_T", lambda k: k.forward_diff_transpose(a, axis, 0.5)),
        ("cov_forward", lambda k: k.cov_forward(a, phi, axis, 0.5)),
        ("cov_forward_T", lambda k: k.cov_forward_transpose(a, w, axis, 0.5, out)),
    ]
    for name, call in cases:
        t_np = timed(lambda: call(knp), repeats)
        if kcy is None:
            print(f"{n:>4}^4  {name:<16} python {t_np * 1e6:9.1f} us   (no extension)")
            continue
        t_cy = timed(lambda: call(kcy), repeats)
        ratio = t_np / t_cy if t_cy > 0 else float("inf")
        print(f"{n:>4}^4  {name:<16} python {t_np * 1e6:9.1f} us   "
              f"cython {t_cy * 1e6:9.1f} us   x{ratio:5.2f}")


SOLVE_SNIPPET = """
import time
import numpy as np
from swlattice import SolverConfig, SourcePair, build_domain, manufacture, solve, backend_name
from swlattice.lattice import Form

domain = build_domain((6, 6, 6, 6), 1.0, kg_spec=1.0, alpha_sq=0.25)
rng = np.random.Generator(np.random.Philox(1))
a = Form(domain, 1, "real", {(k,): 0.3 * rng.standard_normal(domain.comp_shape((k,))) for k in range(4)})
shape = domain.dims + (2,)
phi = Form(domain, 0, "spinor", {(): 0.3 * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))})
source, boundary = manufacture(domain, a, phi, "dirichlet")
# fixed iteration budget so both backends do identical work
cfg = SolverConfig(mode="dirichlet", tol=1e-14, max_iters=2000, monitor_cadence=100)
t0 = time.perf_counter()
sol = solve(domain, "dirichlet", source, boundary=boundary, config=cfg)
print(f"{backend_name()}: {time.perf_counter() - t0:.2f}s ({sol.iterations} iterations)")
"""


def bench_solve():
    for backend in ("python", "cython"):
        env = dict(os.environ, SWLATTICE_BACKEND=backend)
        subprocess.run([sys.executable, "-c", SOLVE_SNIPPET], env=env, check=True)


def main():
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--sizes", default="8,16,24")
    parser.add_argument("--repeats", type=int, default=30)
    parser.add_argument("--solve", action="store_true",
                        help="also time a full small descent per backend")
    ns = parser.parse_args()
    if kcy is None:
        print("compiled extension not available; showing python timings only")
    for n in (int(s) for s in ns.sizes.split(",")):
        bench_size(n, ns.repeats)
    if ns.solve:
        bench_solve()


if __name__ == "__main__":
    main()
