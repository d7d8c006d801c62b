"""Area error of the equator minimiser against the closed-form cap as the mesh is refined."""

import argparse
import json
import math

from hplateau.curves import latitude_circle
from hplateau.domain import Ball
from hplateau.scenarios import spherical_cap
from hplateau.solver import SolveOptions, initialize_sweep, minimize_ih


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--H", type=float, default=0.5)
    p.add_argument("--resolutions", type=int, nargs="+", default=[250, 500, 1000, 2000, 4000])
    args = p.parse_args()
    ball = Ball(1.0)
    exact = spherical_cap(0.0, 1.0, args.H).area if args.H > 0 else math.pi
    rows = []
    for res in args.resolutions:
        c = latitude_circle(0.0, res)
        disk, rep = minimize_ih(initialize_sweep(c, ball), c, ball, args.H, SolveOptions())
        err = abs(rep.energies.area - exact) / exact
        rows.append({"resolution": res, "vertices": disk.n_vertices, "area": rep.energies.area,
                     "relative_error": err, "iterations": rep.iterations, "converged": rep.converged})
        print(f"{res:6d} {disk.n_vertices:6d} area={rep.energies.area:.8f} rel_err={err:.3e} iters={rep.iterations}")
    print(json.dumps({"H": args.H, "exact_area": exact, "rows": rows}, indent=2))


if __name__ == "__main__":
    main()
