"""Compare the compiled and numpy kernel back ends.

    python3 benchmarks/bench_kernels.py [--sizes 32,64] [--repeat 5] [--step]

Prints the best-of-N wall time per kernel and the speed-up of the
compiled path; ``--step`` also times one full integrator step.
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from fluxlim import _kernels as K
from fluxlim.fluid import Potential
from fluxlim.grid import GridSpec, ScalarField, StateSnapshot, VectorField
from fluxlim.integrator import SchemeConfig, step
from fluxlim.sensitivity import FluxLimiter


def kernels(grid: GridSpec, rng):
    f = rng.random(grid.shape)
    c = rng.random(grid.shape)
    u = VectorField(grid, [rng.standard_normal(grid.face_shape(a)) for a in range(grid.dim)]).enforce_no_slip()
    lim = FluxLimiter()
    return {
        "laplacian": lambda: K.laplacian(f, grid),
        "advect": lambda: K.advect(f, u.components, grid),
        "chemo_div": lambda: K.chemo_div(f, c, lim, grid),
        "face_speeds": lambda: K.face_speeds(c, u.components, lim, grid),
        "mac_laplacian": lambda: K.mac_laplacian(u.components[0], 0, grid),
    }


def full_step(grid: GridSpec, rng):
    x = rng.random(grid.shape)
    st = StateSnapshot(
        ScalarField(grid, 1 + x), ScalarField(grid, x), ScalarField(grid, 1 - 0.5 * x),
        VectorField(grid), ScalarField.zeros(grid), 0.0,
    )
    cfg = SchemeConfig(dt=1e-3, diffusion="implicit-be")
    phi = Potential("linear", (0.0,) * (grid.dim - 1) + (-1.0,))
    return lambda: step(st, cfg, FluxLimiter(), phi)


def best(fn, repeat: int) -> float:
    fn()
    number = max(1, int(0.05 / max(timeit.timeit(fn, number=1), 1e-6)))
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def main(argv=None) -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sizes", default="32,64")
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--step", action="store_true")
    args = p.parse_args(argv)
    backends = K.available_backends()
    if "cython" not in backends:
        print("compiled kernels not built; only the numpy back end is available")
    print(f"{'grid':<10}{'kernel':<16}" + "".join(f"{b:>12}" for b in backends) + f"{'speed-up':>10}")
    for N in (int(s) for s in args.sizes.split(",")):
        grid = GridSpec((N, N, N))
        cases = kernels(grid, np.random.default_rng(0))
        if args.step:
            cases["step"] = full_step(grid, np.random.default_rng(0))
        for name, fn in cases.items():
            times = {}
            for b in backends:
                prev = K.set_backend(b)
                times[b] = best(fn, args.repeat)
                K.set_backend(prev)
            cols = "".join(f"{times[b] * 1e3:>10.3f}ms" for b in backends)
            speed = f"{times['numpy'] / times['cython']:>9.2f}x" if "cython" in times else ""
            print(f"{N}^3{'':<{7 - len(str(N))}}{name:<16}{cols}{speed}")


if __name__ == "__main__":
    main()
