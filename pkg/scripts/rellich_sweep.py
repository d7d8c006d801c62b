"""Distance between the two equator minimisers across H, against twice the cap sagitta."""

import argparse
import math

import numpy as np

from hplateau.curves import latitude_circle
from hplateau.domain import Ball
from hplateau.solver import rellich_pair


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--H", type=float, nargs="+", default=[0.0, 0.1, 0.25, 0.5, 0.75, 0.9])
    p.add_argument("--resolution", type=int, default=2000)
    p.add_argument("--jobs", type=int, default=2)
    args = p.parse_args()
    c = latitude_circle(0.0, args.resolution)
    mirror = np.diag([1.0, 1.0, -1.0])
    for H in args.H:
        _, _, rep = rellich_pair(c, Ball(1.0), H, mirror=mirror, jobs=args.jobs)
        exact = 0.0 if H == 0 else 2.0 * (1.0 / H - math.sqrt(1.0 / H**2 - 1.0))
        print(f"H={H:<5g} hausdorff={rep.hausdorff:.6f} exact={exact:.6f} "
              f"mirror_error={rep.mirror_error:.2e} embedded={rep.minus.embedded and rep.plus.embedded}")


if __name__ == "__main__":
    main()
