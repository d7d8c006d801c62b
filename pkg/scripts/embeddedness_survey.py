"""Solve every test curve over a grid of H and report embeddedness and H-concavity violations."""

import argparse
import math

from hplateau.curves import bridged_circles, latitude_circle, symmetric_chain
from hplateau.domain import Ball
from hplateau.solver import SolveOptions, initialize_sweep, minimize_ih

CURVES = {
    "equator": lambda r: latitude_circle(0.0, r),
    "rho09": lambda r: latitude_circle(-math.sqrt(0.19), r),
    "gamma1": lambda r: bridged_circles(resolution=r),
    "gamma2": lambda r: symmetric_chain(resolution=r),
}


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--H", type=float, nargs="+", default=[0.25, 0.5, 0.75])
    p.add_argument("--side", choices=("minus", "plus"), default="minus")
    p.add_argument("--resolution", type=int, default=2000)
    args = p.parse_args()
    ball = Ball(1.0)
    for name, make in CURVES.items():
        c = make(args.resolution)
        for H in args.H:
            _, rep = minimize_ih(initialize_sweep(c, ball, args.side), c, ball, H, SolveOptions(side=args.side))
            print(f"{name:8s} H={H:<5g} converged={rep.converged} embedded={rep.embedded} "
                  f"violations={rep.violations} residual={rep.residual:.2e}")


if __name__ == "__main__":
    main()
