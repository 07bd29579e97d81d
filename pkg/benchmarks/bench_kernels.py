"""Time the compiled and numpy element-stiffness kernels on identical inputs.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Both kernels receive the same precomputed gradients and weights, so only the
kernel itself is timed. Results are checked for agreement before timing.
"""
import argparse
import time

import numpy as np

from casiga import benchmarks as bm
from casiga import kernels
from casiga.assembly import Mesh, _coefficients, interpolated_gradients
from casiga.quadrature import QuadratureRule
from casiga.splines import element_scaling


def kernel_inputs(mesh, material, technology, quad):
    rule = QuadratureRule(quad, mesh.dim)
    elements = np.arange(mesh.n_el)
    pd = mesh.evaluate(elements, rule=rule)
    wq = rule.weights * element_scaling(mesh.patch, mesh.elements)[:, None] * pd.detJ
    Gt = interpolated_gradients(mesh, elements, [rule.points_1d] * mesh.dim)
    c_interp, c_comp = _coefficients(technology, material, mesh.dim)
    return pd.dNdx, Gt, wq, c_interp, c_comp, material.mu


def best_time(fn, args, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    if "cython" not in kernels.BACKENDS:
        raise SystemExit("compiled extension not built; run `pip install -e . --no-build-isolation`")
    cases = [("cook 32x32", Mesh(bm.cook_patch(32)), bm.COOK_MATERIAL, 2),
             ("plate 64x64", Mesh(bm.plate_patch(64)), bm.PLATE_MATERIAL, 2),
             ("block 8^3", Mesh(bm.block_patch(8)), bm.BLOCK_MATERIAL, 3)]
    print("%-12s %-5s %-4s %10s %10s %8s" % ("mesh", "tech", "quad", "numpy [s]", "cython [s]", "speedup"))
    for name, mesh, material, d in cases:
        for tech in ("cs", "cas1", "cas2"):
            for quad in (2, 3):
                inputs = kernel_inputs(mesh, material, tech, quad)
                py, cy = kernels.get_kernel("python"), kernels.get_kernel("cython")
                ref = py(*inputs)
                assert np.abs(cy(*inputs) - ref).max() <= 1e-13 * np.abs(ref).max()
                t_py = best_time(py, inputs, args.repeat)
                t_cy = best_time(cy, inputs, args.repeat)
                print("%-12s %-5s %-4d %10.4f %10.4f %7.2fx" % (name, tech, quad, t_py, t_cy, t_py / t_cy))


if __name__ == "__main__":
    main()
