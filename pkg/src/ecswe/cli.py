"""Command-line entry point: run a scenario or verify solver properties.

Run configuration comes from an optional flat key=value file plus command
line overrides; unset values fall back to the scenario defaults.  A run
writes diagnostics.csv (fixed header), legacy-VTK field snapshots and a
run_manifest.txt echoing the resolved configuration.

Exit codes: 0 success, 1 verification failure, 2 config error,
3 solver failure, 4 depth-positivity failure.
"""

import argparse
import sys
import time
import warnings
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__, operators as ops
from .assembly import Discretization
from .diagnostics import DiagnosticsCollector, depth_jump_seminorm
from .errors import ConfigError, PositivityError, SolverError
from .mesh import build_icosahedral_sphere, build_periodic_square
from .operators import Variant
from .scenarios import SCENARIO_NAMES, make_scenario
from .stepping import Scheme, StepConfig, Stepper
from .vtk_io import write_vtk

CSV_HEADER = "step,time,energy,rel_energy_err,mass,enstrophy,rel_enstrophy_err"
CSV_HEADER_L2 = CSV_HEADER + ",l2_err_u,l2_err_D"


@dataclass
class RunConfig:
    scenario: str
    refinement: int = 3
    n: int = 32
    variant: str = "full_upwind"
    scheme: str = "poisson"
    dt: float = None
    steps: int = None
    picard: int = None
    mode: str = None
    picard_rtol: float = None
    out: str = "run_output"
    snapshot_every: int = 0
    diag_every: int = 1
    quad_degree: int = 8
    seed: int = 0
    dump_mesh: bool = False


_INT_KEYS = {"refinement", "n", "steps", "picard", "snapshot_every",
             "diag_every", "quad_degree", "seed"}
_FLOAT_KEYS = {"dt", "picard_rtol"}
_BOOL_KEYS = {"dump_mesh"}


def load_config_file(path):
    values = {}
    known = {f.name for f in fields(RunConfig)}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key not in known:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = val
    return values


def resolve_config(args):
    values = {}
    if args.config:
        values.update(load_config_file(args.config))
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            values[f.name] = v
    if "scenario" not in values:
        raise ConfigError("no scenario given (config file or --scenario)")
    try:
        for key in list(values):
            if isinstance(values[key], str):
                if key in _INT_KEYS:
                    values[key] = int(values[key])
                elif key in _FLOAT_KEYS:
                    values[key] = float(values[key])
                elif key in _BOOL_KEYS:
                    values[key] = values[key].lower() in ("1", "true", "yes")
        cfg = RunConfig(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad configuration value: {exc}") from exc
    if cfg.scenario not in SCENARIO_NAMES:
        raise ConfigError(f"unknown scenario {cfg.scenario!r}")
    try:
        Variant(cfg.variant)
        Scheme(cfg.scheme)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if cfg.mode is not None and cfg.mode not in ("explicit", "implicit"):
        raise ConfigError(f"unknown picard mode {cfg.mode!r}")
    if cfg.steps is not None and cfg.steps < 0:
        raise ConfigError("steps must be >= 0")
    return cfg


def _csv_row(rec, with_l2):
    cols = [rec.time, rec.energy, rec.rel_energy_err, rec.mass,
            rec.enstrophy, rec.rel_enstrophy_err]
    if with_l2:
        cols += [rec.l2_err_u, rec.l2_err_D]
    return str(rec.step) + "," + ",".join(repr(float(c)) for c in cols)


def cmd_run(cfg):
    sc = make_scenario(cfg.scenario, refinement=cfg.refinement, n=cfg.n,
                       quad_degree=cfg.quad_degree)
    dt = cfg.dt if cfg.dt is not None else sc.dt
    steps = cfg.steps if cfg.steps is not None else sc.steps
    picard = cfg.picard if cfg.picard is not None else sc.picard_iterations
    mode = cfg.mode if cfg.mode is not None else sc.picard_mode
    step_cfg = StepConfig(dt=dt, scheme=cfg.scheme, picard_iterations=picard,
                          picard_mode=mode, picard_rtol=cfg.picard_rtol,
                          reference_height=sc.reference_height)
    ctx = sc.ctx
    stepper = Stepper(ctx, sc.physics, cfg.variant, step_cfg)
    collector = DiagnosticsCollector(ctx, sc.physics, sc.analytic_u, sc.analytic_D)

    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    if cfg.dump_mesh:
        ctx.mesh.dump_text(out / "mesh.txt")
    with_l2 = sc.analytic_D is not None

    def snapshot(step, u, D):
        q = ops.potential_vorticity(ctx, u, D, sc.physics)
        write_vtk(out / f"snap_{step:06d}.vtk", ctx, D, u, q,
                  title=f"{cfg.scenario} step {step}")

    u, D = sc.u0.copy(), sc.D0.copy()
    final_res = 0.0
    max_iters = 0
    t_wall = time.time()
    with open(out / "diagnostics.csv", "w") as csv:
        csv.write((CSV_HEADER_L2 if with_l2 else CSV_HEADER) + "\n")
        csv.write(_csv_row(collector.record(0, 0.0, u, D), with_l2) + "\n")
        csv.flush()
        snapshot(0, u, D)
        for step in range(1, steps + 1):
            u, D, stats = stepper.step(u, D)
            final_res = stats.residuals[-1]
            max_iters = max(max_iters, stats.iterations)
            if step % cfg.diag_every == 0 or step == steps:
                csv.write(_csv_row(collector.record(step, step * dt, u, D),
                                   with_l2) + "\n")
                csv.flush()
            if cfg.snapshot_every and step % cfg.snapshot_every == 0:
                snapshot(step, u, D)
        if steps > 0:
            snapshot(steps, u, D)
    jump = depth_jump_seminorm(ctx, D)

    with open(out / "run_manifest.txt", "w") as fh:
        fh.write(f"ecswe {__version__}\n")
        fh.write(f"timestamp: {time.strftime('%Y-%m-%dT%H:%M:%S')}\n")
        for f in fields(RunConfig):
            fh.write(f"{f.name} = {getattr(cfg, f.name)}\n")
        fh.write(f"resolved_dt = {dt!r}\n")
        fh.write(f"resolved_steps = {steps}\n")
        fh.write(f"resolved_picard = {picard}\n")
        fh.write(f"resolved_mode = {mode}\n")
        fh.write(f"final_picard_residual = {final_res!r}\n")
        fh.write(f"max_picard_iterations = {max_iters}\n")
        fh.write(f"depth_jump_seminorm = {jump!r}\n")
        fh.write(f"wall_seconds = {time.time() - t_wall:.1f}\n")
    print(f"run complete: {steps} steps, outputs in {out}")
    print(f"depth_jump_seminorm = {jump!r}")
    return 0


# -- verify -------------------------------------------------------------------


def _verify_meshes(quad_degree=8):
    return [("torus-8", Discretization(build_periodic_square(2, 1.0), quad_degree),
             ops.Physics(g=5.0, f_constant=5.0)),
            ("sphere-20", Discretization(build_icosahedral_sphere(0, 1.0), quad_degree),
             ops.Physics(g=5.0, omega=1.0))]


def _rand_fields(ctx, rng):
    u = rng.normal(size=ctx.W1.dim)
    D = 0.8 + rng.random(ctx.W2.dim)
    return u, D


def cmd_verify(seed, instances=5):
    rng = np.random.default_rng(seed)
    failures = 0

    def report(ok, name, detail):
        nonlocal failures
        print(f"{'PASS' if ok else 'FAIL'}  {name}  ({detail})")
        failures += 0 if ok else 1

    for name, ctx, phys in _verify_meshes():
        u, D = _rand_fields(ctx, rng)

        worst = 0.0
        for _ in range(instances):
            uu, DD = _rand_fields(ctx, rng)
            F = ops.variation_u(ctx, uu, DD)
            U = ops.recover_velocity(ctx, DD, F)
            worst = max(worst, float(np.sqrt(
                (U - uu) @ ctx.M1 @ (U - uu) / (uu @ ctx.M1 @ uu))))
        report(worst <= 1e-10, f"velocity recovery [{name}]", f"max {worst:.2e}")

        for variant in ops.EC_VARIANTS:
            worst = 0.0
            for _ in range(instances):
                x = _rand_fields(ctx, rng)
                y = _rand_fields(ctx, rng)
                Bxy = ops.bracket_apply(ctx, variant, u, D, phys, x, y)
                Byx = ops.bracket_apply(ctx, variant, u, D, phys, y, x)
                worst = max(worst, abs(Bxy + Byx) / max(abs(Bxy), abs(Byx)))
            report(worst <= 1e-11, f"antisymmetry {variant.value} [{name}]",
                   f"max {worst:.2e}")

        hits = 0
        for _ in range(instances):
            x = _rand_fields(ctx, rng)
            y = _rand_fields(ctx, rng)
            Bxy = ops.bracket_apply(ctx, Variant.NON_EC, u, D, phys, x, y)
            Byx = ops.bracket_apply(ctx, Variant.NON_EC, u, D, phys, y, x)
            if abs(Bxy + Byx) / max(abs(Bxy), abs(Byx)) >= 1e-6:
                hits += 1
        report(hits == instances, f"non-EC asymmetry detected [{name}]",
               f"{hits}/{instances} instances")

        ones = np.zeros(ctx.W2.dim)
        ones[ctx.W2.cell_dofs] = 1.0
        worst = 0.0
        for variant in list(ops.EC_VARIANTS) + [Variant.NON_EC]:
            _, rD = ops.bracket_rhs(ctx, variant, u, D, phys)
            scale = max(np.abs(rD).max(), 1e-300)
            worst = max(worst, abs(ones @ rD) / scale)
        report(worst <= 1e-12, f"mass-flux telescoping [{name}]", f"max {worst:.2e}")

        P = ctx.project_W1(ctx.eval_vec(u))
        err = np.abs(P - u).max() / np.abs(u).max()
        report(err <= 1e-12, f"projection identity [{name}]", f"{err:.2e}")

        jp = ctx.feval_vec(u, 0)
        jm = ctx.feval_vec(u, 1)
        jump = np.einsum("fqd,fd->fq", jp, ctx.fnormal_plus) \
            + np.einsum("fqd,fd->fq", jm, ctx.fnormal_minus)
        scale = max(np.abs(jp).max(), 1e-300)
        report(np.abs(jump).max() / scale <= 1e-10,
               f"normal continuity [{name}]",
               f"{np.abs(jump).max() / scale:.2e}")

    print(f"{failures} failure(s)")
    return 1 if failures else 0


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="ecswe",
        description="Energy-conserving compatible finite element shallow "
                    "water solver")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario")
    p_run.add_argument("--config", help="key=value configuration file")
    p_run.add_argument("--scenario", choices=SCENARIO_NAMES)
    p_run.add_argument("--variant", choices=[v.value for v in Variant])
    p_run.add_argument("--scheme", choices=[s.value for s in Scheme])
    p_run.add_argument("--dt", type=float)
    p_run.add_argument("--steps", type=int)
    p_run.add_argument("--picard", type=int)
    p_run.add_argument("--mode", choices=["explicit", "implicit"])
    p_run.add_argument("--picard-rtol", type=float, dest="picard_rtol")
    p_run.add_argument("--refinement", type=int)
    p_run.add_argument("--n", type=int)
    p_run.add_argument("--out")
    p_run.add_argument("--snapshot-every", type=int, dest="snapshot_every")
    p_run.add_argument("--diag-every", type=int, dest="diag_every")
    p_run.add_argument("--quad-degree", type=int, dest="quad_degree")
    p_run.add_argument("--seed", type=int)
    p_run.add_argument("--dump-mesh", action="store_const", const=True,
                       dest="dump_mesh")

    p_ver = sub.add_parser("verify", help="run the solver property suites")
    p_ver.add_argument("--seed", type=int, default=0)
    p_ver.add_argument("--instances", type=int, default=5)

    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(resolve_config(args))
        return cmd_verify(args.seed, args.instances)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except PositivityError as exc:
        print(f"positivity failure: {exc}", file=sys.stderr)
        return 4
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
