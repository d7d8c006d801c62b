"""Command-line runner: solves, Rellich pairs, the cylinder energy law, verification and oracles.

Exit status: 0 success, 1 a verification check failed, 2 invalid input,
3 the solver did not converge.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .curves import BoundaryCurve, CurveError, bridged_circles, latitude_circle, symmetric_chain
from .domain import AmbientDomain, Ball, ModifiedCylinder
from .hpmesh import HpmeshFormatError, read_hpmesh, write_hpmesh
from .mesh import MeshError

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_INVALID = 2
EXIT_NOT_CONVERGED = 3

COMMANDS = ("solve", "rellich", "counterexample", "verify", "oracle")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    domain: AmbientDomain
    curve: str
    H: float
    side: str = "minus"
    resolution: int = 2000
    tol: float = 1e-3
    max_iters: int = 2000
    seed: int = 0
    out: str = "out"
    jobs: int = 1
    n_max: int = 10
    delta: float = 0.0
    extra: Dict[str, str] = field(default_factory=dict)


def parse_domain(spec: str) -> AmbientDomain:
    """``ball:R`` or ``modcyl:eps``."""
    kind, _, value = spec.partition(":")
    try:
        if kind == "ball":
            return Ball(float(value) if value else 1.0)
        if kind == "modcyl":
            return ModifiedCylinder(float(value) if value else 0.05)
    except ValueError as exc:
        raise ConfigError(f"invalid domain {spec!r}: {exc}") from None
    raise ConfigError(f"unknown domain {spec!r}; use ball:R or modcyl:eps")


CURVES: Dict[str, Callable[[int], BoundaryCurve]] = {
    "equator": lambda res: latitude_circle(0.0, res),
    "equator_cap": lambda res: latitude_circle(0.0, res),
    "rho09": lambda res: latitude_circle(-math.sqrt(0.19), res),
    "gamma1": lambda res: bridged_circles(resolution=res),
    "gamma1_bridge": lambda res: bridged_circles(resolution=res),
    "gamma2": lambda res: symmetric_chain(resolution=res),
    "gamma2_symmetric": lambda res: symmetric_chain(resolution=res),
}


def curve_from_directory(path: str) -> BoundaryCurve:
    """Curve given by ``cap_minus.hpmesh`` and ``cap_plus.hpmesh`` in ``path``."""
    try:
        minus = read_hpmesh(os.path.join(path, "cap_minus.hpmesh"))
        plus = read_hpmesh(os.path.join(path, "cap_plus.hpmesh"))
    except (OSError, HpmeshFormatError, MeshError) as exc:
        raise ConfigError(f"cannot read curve caps from {path!r}: {exc}") from None
    radius = float(np.median(np.linalg.norm(minus.vertices[minus.boundary_loop], axis=1)))
    return BoundaryCurve(minus.vertices[minus.boundary_loop], minus, plus, radius=radius,
                         name=os.path.basename(os.path.normpath(path)))


def resolve_curve(spec: str, resolution: int) -> BoundaryCurve:
    """Named curve, ``circle:z0`` or a directory holding the two cap meshes."""
    if spec in CURVES:
        return CURVES[spec](resolution)
    if spec.startswith("circle:"):
        try:
            z0 = float(spec.split(":", 1)[1])
            return latitude_circle(z0, resolution)
        except (ValueError, CurveError) as exc:
            raise ConfigError(f"invalid curve {spec!r}: {exc}") from None
    if os.path.isdir(spec):
        return curve_from_directory(spec)
    known = ", ".join(sorted(CURVES))
    raise ConfigError(f"unknown curve {spec!r}; known: {known}, circle:z0, or a directory with cap meshes")


# ---------------------------------------------------------------- config handling


def read_config_file(path: str) -> Dict[str, str]:
    """Flat ``key = value`` file; ``#`` starts a comment. Keys are flag names without dashes."""
    out: Dict[str, str] = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from None
    for num, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}:{num}: expected key = value")
        out[key.strip().lstrip("-").replace("_", "-")] = value.strip()
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hplateau", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="flat key = value file; flags override it")
    p.add_argument("--domain", default="ball:1", help="ball:R or modcyl:eps")
    p.add_argument("--curve", default="equator", help="curve id, circle:z0 or a directory with cap meshes")
    p.add_argument("--H", type=float, default=0.5, dest="H")
    p.add_argument("--side", choices=("minus", "plus"), default="minus")
    p.add_argument("--resolution", type=int, default=2000)
    p.add_argument("--tol", type=float, default=1e-3, help="residual tolerance (1/length)")
    p.add_argument("--max-iters", type=int, default=2000, dest="max_iters")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="out")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--n-max", type=int, default=10, dest="n_max")
    p.add_argument("--delta", type=float, default=0.0, help="slant of the cylinder family (0 = straight)")
    return p


def parse_config(argv: Sequence[str]) -> RunConfig:
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if known.config:
        values = read_config_file(known.config)
        dests = {a.option_strings[0].lstrip("-"): a.dest for a in parser._actions if a.option_strings}
        defaults = {}
        for key, value in values.items():
            if key not in dests or key in ("config", "help"):
                raise ConfigError(f"unknown config key {key!r}")
            defaults[dests[key]] = value
        parser.set_defaults(**defaults)
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        if exc.code == 0:
            raise
        raise ConfigError("invalid command line") from None
    domain = parse_domain(ns.domain)
    if ns.jobs < 1:
        raise ConfigError("--jobs must be at least 1")
    if ns.tol <= 0:
        raise ConfigError("--tol must be positive")
    if ns.max_iters < 1:
        raise ConfigError("--max-iters must be at least 1")
    return RunConfig(
        command=ns.command, domain=domain, curve=ns.curve, H=float(ns.H), side=ns.side,
        resolution=int(ns.resolution), tol=float(ns.tol), max_iters=int(ns.max_iters), seed=int(ns.seed),
        out=ns.out, jobs=int(ns.jobs), n_max=int(ns.n_max), delta=float(ns.delta),
    )


# ---------------------------------------------------------------- outputs


def _config_dict(cfg: RunConfig) -> dict:
    return {
        "command": cfg.command, "domain": cfg.domain.describe(), "curve": cfg.curve, "H": cfg.H,
        "side": cfg.side, "resolution": cfg.resolution, "tol": cfg.tol, "max_iters": cfg.max_iters,
        "seed": cfg.seed, "n_max": cfg.n_max, "delta": cfg.delta,
    }


def _write_outputs(cfg: RunConfig, report: dict, summary: List[str], meshes: Dict[str, object]) -> None:
    os.makedirs(cfg.out, exist_ok=True)
    for name, mesh in meshes.items():
        write_hpmesh(mesh, os.path.join(cfg.out, name))
    payload = {"config": _config_dict(cfg), "report": report}
    with open(os.path.join(cfg.out, "report.json"), "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(os.path.join(cfg.out, "summary.txt"), "w") as fh:
        fh.write("\n".join(summary) + "\n")
    print("\n".join(summary))


def _solve_options(cfg: RunConfig, side: str):
    from .solver import SolveOptions

    return SolveOptions(max_iterations=cfg.max_iters, residual_tol=cfg.tol, side=side, seed=cfg.seed)


def _check_h(cfg: RunConfig) -> None:
    from .solver import check_feasible

    check_feasible(cfg.domain, cfg.H)


def _require_ball(cfg: RunConfig) -> None:
    if not isinstance(cfg.domain, Ball):
        raise ConfigError("disk minimisation runs in ball domains only; the cylinder supports 'counterexample'")


def cmd_solve(cfg: RunConfig) -> int:
    from .solver import initialize_sweep, minimize_ih

    _require_ball(cfg)
    _check_h(cfg)
    curve = resolve_curve(cfg.curve, cfg.resolution)
    opts = _solve_options(cfg, cfg.side)
    disk, rep = minimize_ih(initialize_sweep(curve, cfg.domain, cfg.side), curve, cfg.domain, cfg.H, opts)
    summary = [
        f"solve {cfg.curve} H={cfg.H:g} side={cfg.side}: converged={rep.converged} "
        f"iterations={rep.iterations} residual={rep.residual:.3e}",
        f"area={rep.energies.area:.9g} volume={rep.energies.volume:.9g} I_H={rep.energies.i_h:.9g}",
        f"embedded={rep.embedded} h_concavity_violations={rep.violations}",
    ]
    _write_outputs(cfg, rep.to_dict(), summary, {f"disk_{cfg.side}.hpmesh": disk})
    return EXIT_OK if rep.converged else EXIT_NOT_CONVERGED


def cmd_rellich(cfg: RunConfig) -> int:
    from .solver import rellich_pair

    _require_ball(cfg)
    _check_h(cfg)
    curve = resolve_curve(cfg.curve, cfg.resolution)
    mirror = np.diag([1.0, 1.0, -1.0]) if cfg.curve in ("equator", "equator_cap") else None
    dm, dp, rep = rellich_pair(curve, cfg.domain, cfg.H, _solve_options(cfg, "minus"), mirror=mirror, jobs=cfg.jobs)
    summary = [
        f"rellich {cfg.curve} H={cfg.H:g}: hausdorff={rep.hausdorff:.6g} opposite_signs={rep.opposite_signs}",
        f"minus: converged={rep.minus.converged} embedded={rep.minus.embedded} residual={rep.minus.residual:.3e}",
        f"plus: converged={rep.plus.converged} embedded={rep.plus.embedded} residual={rep.plus.residual:.3e}",
    ]
    _write_outputs(cfg, rep.to_dict(), summary, {"disk_minus.hpmesh": dm, "disk_plus.hpmesh": dp})
    ok = rep.minus.converged and rep.plus.converged
    return EXIT_OK if ok else EXIT_NOT_CONVERGED


def cmd_counterexample(cfg: RunConfig) -> int:
    from .scenarios import energy_slope

    if not 0.0 < cfg.H < 2.0:
        raise ConfigError(f"H={cfg.H:g} must lie in (0, 2) for the cylinder family")
    eps = cfg.domain.eps if isinstance(cfg.domain, ModifiedCylinder) else 0.05
    if cfg.n_max < 2:
        raise ConfigError("--n-max must be at least 2 to fit a slope")
    fit = energy_slope(cfg.H, range(1, cfg.n_max + 1), eps, cfg.delta)
    expected = fit["expected_slope"]
    # a zero expected slope is measured against 2 pi
    fit["relative_slope_error"] = abs(fit["slope"] - expected) / (abs(expected) if expected != 0 else 2.0 * np.pi)
    summary = [
        f"counterexample H={cfg.H:g} n=1..{cfg.n_max} eps={eps:g} delta={cfg.delta:g}: "
        f"slope={fit['slope']:.12g} expected={fit['expected_slope']:.12g}",
    ]
    _write_outputs(cfg, fit, summary, {})
    return EXIT_OK


def cmd_oracle(cfg: RunConfig) -> int:
    from .scenarios import SCENARIOS, emit_scenario

    if cfg.curve not in SCENARIOS:
        raise ConfigError(f"unknown scenario {cfg.curve!r}; known: {', '.join(sorted(SCENARIOS))}")
    params: Dict[str, object] = {}
    if cfg.curve in ("equator_cap", "gamma1_bridge", "gamma2_symmetric"):
        params["resolution"] = cfg.resolution
    if cfg.curve in ("equator_cap", "gamma1_bridge", "counterexample_straight", "counterexample_slanted"):
        params["H"] = cfg.H
    if cfg.curve == "counterexample_straight":
        params["n_max"] = cfg.n_max
    if cfg.curve == "counterexample_slanted" and cfg.delta > 0:
        params["delta"] = cfg.delta
    paths = emit_scenario(cfg.curve, cfg.out, **params)
    print(f"oracle {cfg.curve}: wrote {len(paths)} files to {cfg.out}")
    return EXIT_OK


# ---------------------------------------------------------------- verify


def _check_equivalence(seed: int) -> Tuple[str, bool, dict]:
    from .verification import functional_equivalence

    res = functional_equivalence(n_maps=20, seed=seed)
    return "functional_equivalence", res["passed"], res


def _check_intersections(seed: int) -> Tuple[str, bool, dict]:
    from .verification import intersection_oracle

    res = intersection_oracle(n_fixtures=5, seed=seed)
    return "intersection_oracle", res["passed"], res


def _check_surgery(seed: int) -> Tuple[str, bool, dict]:
    from .verification import surgery_contract

    res = surgery_contract()
    return "surgery_contract", res["passed"], res


def _check_slope(seed: int) -> Tuple[str, bool, dict]:
    from .verification import counterexample_slopes

    res = counterexample_slopes()
    return "counterexample_slope", res["passed"], res


VERIFY_CHECKS = (_check_equivalence, _check_intersections, _check_surgery, _check_slope)


def cmd_verify(cfg: RunConfig) -> int:
    if cfg.jobs > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as ex:
            results = list(ex.map(lambda f: f(cfg.seed), VERIFY_CHECKS))
    else:
        results = [f(cfg.seed) for f in VERIFY_CHECKS]
    report = {name: {"passed": bool(ok), "details": details} for name, ok, details in results}
    summary = [f"{'PASS' if ok else 'FAIL'} {name}" for name, ok, _ in results]
    _write_outputs(cfg, report, summary, {})
    return EXIT_OK if all(ok for _, ok, _ in results) else EXIT_CHECK_FAILED


HANDLERS = {
    "solve": cmd_solve,
    "rellich": cmd_rellich,
    "counterexample": cmd_counterexample,
    "verify": cmd_verify,
    "oracle": cmd_oracle,
}


def run(cfg: RunConfig) -> int:
    from .solver import InfeasibleCurvatureError

    try:
        return HANDLERS[cfg.command](cfg)
    except (ConfigError, InfeasibleCurvatureError, CurveError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        cfg = parse_config(argv)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
