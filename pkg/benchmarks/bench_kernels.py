"""Time the compiled and pure-Python kernels on representative inputs.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--nodes 4096]

Prints one line per (kernel, backend) with the best wall time and the
speed-up of the compiled backend.
"""
import argparse
import timeit

import numpy as np

from quasiground import kernels
from quasiground.field import Geometry


def cases(nodes):
    g = Geometry.radial(1, 3.0, nodes)
    u = np.ascontiguousarray(np.exp(-g.x ** 2))
    u[-1] = 0.0
    V = np.ascontiguousarray(g.x ** 2)
    out = np.empty(nodes)
    h_shoot = 2.1636817347480775 / (nodes - 1)
    return {
        "shoot": lambda k: k.shoot(1.5874010519682022, 1, 6.0, h_shoot, 100.0, True),
        "energy_terms": lambda k: k.energy_terms(u, V, g.node_weights, g.cell_weights, g.h, 8.0,
                                                 out, 6.0, 1.0, True),
        "precond_solve": lambda k: k.precond_solve(u, u, V, g.node_weights, g.cell_weights, g.h,
                                                   2.0, True, out),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--nodes", type=int, default=4096)
    args = ap.parse_args(argv)
    backends = kernels.backends()
    if "cython" not in backends:
        print("compiled extension not built; timing the Python fallback only")
    print(f"{'kernel':<15}{'backend':<9}{'best [ms]':>12}{'speed-up':>10}")
    for name, fn in cases(args.nodes).items():
        times = {}
        for bname, mod in backends.items():
            number = 1 if bname == "python" else 20
            t = min(timeit.repeat(lambda: fn(mod), number=number, repeat=args.repeat)) / number
            times[bname] = t
        for bname, t in times.items():
            gain = times["python"] / t if bname != "python" else 1.0
            print(f"{name:<15}{bname:<9}{1e3 * t:>12.4f}{gain:>9.1f}x")


if __name__ == "__main__":
    main()
