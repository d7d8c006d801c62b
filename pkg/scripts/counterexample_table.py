"""Tabulate I_hat(E_n) for the straight and slanted cylinder families and fit the slope in n."""

import argparse

from hplateau.scenarios import energy_slope


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--H", type=float, nargs="+", default=[0.5, 1.0, 1.5])
    p.add_argument("--n-max", type=int, default=10)
    p.add_argument("--eps", type=float, default=0.05)
    p.add_argument("--delta", type=float, default=0.0, help="wall slant; 0 gives the straight family")
    args = p.parse_args()
    for H in args.H:
        fit = energy_slope(H, range(1, args.n_max + 1), args.eps, args.delta)
        print(f"H={H:g} slope={fit['slope']:.10f} expected={fit['expected_slope']:.10f} "
              f"fit_residual={fit['fit_residual']:.2e}")
        for n, v in zip(fit["n"], fit["i_hat"]):
            print(f"  n={n:3d} I_hat={v:.10f}")


if __name__ == "__main__":
    main()
