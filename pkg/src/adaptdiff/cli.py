"""Command-line interface: ``adaptdiff <subcommand> [options]``.

Exit codes: 0 success, 1 usage or configuration error, 2 validation
failure, 3 numeric abort.
"""
import argparse
import os
import sys
import time
from typing import List, Optional

import numpy as np

from . import __version__
from .config import ConfigError, build_model, load_config
from .csvio import write_csv
from .diffusion import NumericAbort, biased_ode, build_coefficients, euler_maruyama
from .fixation import (FixationProblem, TruncationError, default_n_max, invasion_fitness,
                       solve_fixation)
from .invasibility import ConvergenceError, Invasibility
from .population import (EventCapExceeded, InvalidRates, PopulationState, first_substitutions,
                         gillespie_run, stationary_law)
from .rng import stream
from .validation import run_validation, write_report
from .tss import (ClosedFormFitness, MonteCarloFitness, SolverFitness, TssConfig,
                  fitness_n_max, simulate_tss)

__all__ = ["main", "build_parser", "EXIT_OK", "EXIT_USAGE", "EXIT_VALIDATION", "EXIT_NUMERIC"]

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_NUMERIC = 0, 1, 2, 3
NUMERIC_ERRORS = (NumericAbort, EventCapExceeded, InvalidRates, ConvergenceError,
                  TruncationError, FloatingPointError)
SUBCOMMANDS = ("simulate-micro", "fixation", "invasibility", "tss", "diffusion", "validate")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="adaptdiff", description="Logistic populations, trait substitution "
                "sequences and the canonical diffusion of adaptive dynamics.")
    p.add_argument("--version", action="version", version=f"adaptdiff {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in SUBCOMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="YAML configuration (defaults are used when omitted)")
        s.add_argument("--seed", type=int, help="override run.seed")
        s.add_argument("--out", help="output directory (overrides run.out)")
        s.add_argument("--jobs", type=int, help="worker processes (results do not depend on it)")
        s.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                       help="set a dotted configuration key, e.g. model.mutation.mu=0.2")
    return p


# ---------------------------------------------------------------------------
# subcommands: each returns (artifacts, report lines, exit code); nothing is
# written until the computation has finished
# ---------------------------------------------------------------------------

def _traits(values, dim):
    return np.atleast_1d(np.asarray(values, float)).reshape(dim)


def cmd_simulate_micro(cfg, seed, jobs):
    s = cfg.data["simulate_micro"]
    model = build_model(cfg.section("model"))
    x0 = _traits(cfg.data["run"]["initial_trait"], model.dim)
    rng = stream(seed, 1)
    size0 = int(s["initial_size"])
    if size0 <= 0:
        law = stationary_law(model.theta(x0))
        size0 = int(rng.choice(law.probs.size, p=law.probs / law.probs.sum()) + 1)
    horizon = float(s["horizon"])
    step = float(s["sample_interval"])
    samples = np.arange(0.0, horizon + 0.5 * step, step)
    g = float(s["gamma"])
    log = gillespie_run(PopulationState.monomorphic(x0, size0), model, g, horizon, rng=rng,
                        sample_times=samples)
    k = model.dim
    ev_rows = [(t, log.KIND_NAMES[kind], *x) for t, kind, x in
               zip(log.times, log.kinds, log.traits)]
    smp_rows = [(t, n, nt, *x) for t, n, nt, x in
                zip(log.sample_times, log.sample_sizes, log.sample_ntypes, log.sample_traits)]
    reps = int(s["first_substitution_replicates"])
    rho, V = first_substitutions(model, x0, g, reps, seed, jobs=jobs, tag=1)
    sub_rows = [(i, r, g * r, *v) for i, (r, v) in enumerate(zip(rho, V))]
    coords = [f"x{j}" for j in range(k)]
    meta = {"seed": seed, "gamma": g, "initial_size": size0}
    arts = {
        "micro_events.csv": (["time", "kind"] + coords, ev_rows, meta),
        "micro_samples.csv": (["time", "size", "n_types"] + [f"first_{c}" for c in coords],
                              smp_rows, meta),
        "first_substitutions.csv": (["replicate", "time", "scaled_time"]
                                    + [f"new_{c}" for c in coords], sub_rows, meta),
    }
    lines = [f"events: {log.n_events}", f"final size: {log.final.size}",
             f"time-averaged size: {log.size_integral / horizon:.6g}",
             f"mean scaled first-substitution time: {np.nanmean(g * rho):.6g} "
             f"({reps} replicates)"]
    return arts, lines, EXIT_OK


def _n_max(cfg, theta, req):
    n = int(cfg.data["solver"]["n_max"])
    return n if n > 0 else default_n_max(theta, req)


def cmd_fixation(cfg, seed, jobs):
    f = cfg.data["fixation"]
    model = build_model(cfg.section("model"))
    x = _traits(f["resident"], model.dim)
    y = _traits(f["mutant"], model.dim)
    params = model.two_type(x, y)
    theta = model.theta(x)
    S = int(f["max_size"])
    N = _n_max(cfg, theta, max(S, fitness_n_max(theta)))
    table = solve_fixation(FixationProblem(params, N, float(cfg.data["solver"]["tol"])),
                           requested=max(S, fitness_n_max(theta)))
    chi = invasion_fitness(theta, table.column(1))
    rows = [(n, s - n, table.u[n, s - n]) for s in range(1, S + 1) for n in range(0, s + 1)]
    meta = {"seed": seed, "n_max": N, "residual": table.residual,
            "sensitivity": table.sensitivity, "invasion_fitness": chi}
    lines = [f"rates: {params}", f"n_max: {N}", f"residual: {table.residual:.3g}",
             f"truncation sensitivity: {table.sensitivity:.3g}", f"invasion fitness: {chi:.12g}"]
    return {"fixation.csv": (["n", "m", "u"], rows, meta)}, lines, EXIT_OK


def cmd_invasibility(cfg, seed, jobs):
    f = cfg.data["invasibility"]
    b, c, d = float(f["b"]), float(f["c"]), float(f["d"])
    inv = Invasibility(b, c, d, k_max=int(cfg.data["solver"]["k_max"]))
    ns = list(range(2, int(f["max_size"]) + 1))
    iotas = ("lambda", "alpha", "sigma") if d != 0 else ("lambda", "delta", "alpha",
                                                          "epsilon", "sigma")
    rows = inv.table(ns, iotas)
    meta = {"b": b, "c": c, "d": d}
    arts = {"invasibility.csv": (["coefficient", "n", "g"], rows, meta)}
    lines = [f"resident b={b} c={c} d={d}"]
    if d == 0:
        slopes = [(i, inv.slope(i)) for i in ("lambda", "delta", "alpha")]
        arts["slopes.csv"] = (["coefficient", "slope"], slopes, meta)
        lines += [f"adaptive slope {i}: {s:.12g}" for i, s in slopes]
    return arts, lines, EXIT_OK


def _fitness_provider(cfg, model, seed):
    kind = cfg.data["tss"]["fitness"]
    if kind == "solver":
        n = int(cfg.data["solver"]["n_max"])
        return SolverFitness(model, n_max=n or None)
    if kind == "closed_form":
        return ClosedFormFitness(model, k_max=int(cfg.data["solver"]["k_max"]))
    if kind == "monte_carlo":
        return MonteCarloFitness(model, int(cfg.data["tss"]["mc_replicates"]), seed=seed)
    raise ConfigError(f"tss.fitness must be solver, closed_form or monte_carlo, got {kind!r}",
                      cfg.position(("tss", "fitness")))


def cmd_tss(cfg, seed, jobs):
    t = cfg.data["tss"]
    model = build_model(cfg.section("model"))
    x0 = _traits(cfg.data["run"]["initial_trait"], model.dim)
    fit = _fitness_provider(cfg, model, seed)
    horizon = float(cfg.data["run"]["horizon"])
    rows = []
    jumps = []
    for i in range(int(t["paths"])):
        tc = TssConfig(x0, model, fit, horizon, mode=t["mode"], eps=float(t["eps"]))
        path = simulate_tss(tc, stream(seed, 2, i))
        rows += [(i, *r) for r in path.rows()]
        jumps.append(path.accepted)
    coords = [f"x{j}" for j in range(model.dim)]
    meta = {"seed": seed, "mode": t["mode"], "fitness": t["fitness"], "eps": t["eps"]}
    lines = [f"paths: {len(jumps)}", f"mean accepted jumps: {np.mean(jumps):.6g}"]
    return {"tss_paths.csv": (["path", "time"] + coords + ["event"], rows, meta)}, lines, EXIT_OK


def cmd_diffusion(cfg, seed, jobs):
    dcfg = cfg.data["diffusion"]
    model = build_model(cfg.section("model"))
    x0 = _traits(cfg.data["run"]["initial_trait"], model.dim)
    co = build_coefficients(model, dcfg["slope_source"], k_max=int(cfg.data["solver"]["k_max"]))
    dt, horizon = float(dcfg["dt"]), float(dcfg["horizon"])
    rows = []
    ensemble = []
    for i in range(int(dcfg["paths"])):
        p = euler_maruyama(co, x0, dt, horizon, rng=stream(seed, 3, i))
        rows += [(i, *r) for r in p.rows()]
        ensemble.append(p.states)
    ensemble = np.array(ensemble)
    mean = ensemble.mean(axis=0)
    var = ensemble.var(axis=0, ddof=1) if len(ensemble) > 1 else np.full_like(mean, np.nan)
    summary = [(t, *m, *v) for t, m, v in zip(p.times, mean, var)]
    times, states = biased_ode(model, x0, dt, horizon)
    coords = [f"x{j}" for j in range(model.dim)]
    meta = {"seed": seed, "dt": dt, "slope_source": dcfg["slope_source"]}
    drift = co.drift(x0[None, :])[0]
    lines = [f"drift at start: {drift.tolist()}",
             f"noise scale at start: {float(co.noise_scale(x0[None, :])[0]):.12g}"]
    return {"diffusion_paths.csv": (["path", "time"] + coords, rows, meta),
            "diffusion_summary.csv": (["time"] + [f"mean_{c}" for c in coords]
                                      + [f"var_{c}" for c in coords], summary, meta),
            "biased_ode.csv": (["time"] + coords, [(t, *z) for t, z in zip(times, states)],
                               meta)}, lines, EXIT_OK


COMMANDS = {"simulate-micro": cmd_simulate_micro, "fixation": cmd_fixation,
            "invasibility": cmd_invasibility, "tss": cmd_tss, "diffusion": cmd_diffusion}


def _write(out, arts, lines, command, cfg, elapsed):
    os.makedirs(out, exist_ok=True)
    for name, (header, rows, meta) in arts.items():
        write_csv(os.path.join(out, name), header, rows, meta)
    with open(os.path.join(out, "resolved_config.yaml"), "w", encoding="utf-8") as f:
        f.write(cfg.dump())
    with open(os.path.join(out, "report.txt"), "w", encoding="utf-8") as f:
        f.write(f"adaptdiff {command}\n" + "\n".join(lines)
                + f"\nruntime: {elapsed:.2f}s\n")


def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.config is not None and not os.path.isfile(args.config):
            print(f"adaptdiff: config file not found: {args.config}", file=sys.stderr)
            return EXIT_USAGE
        cfg = load_config(args.config, args.override)
        run = cfg.data["run"]
        if args.seed is not None:
            run["seed"] = args.seed
        if args.out is not None:
            run["out"] = args.out
        if args.jobs is not None:
            if args.jobs < 1:
                raise ConfigError("--jobs must be at least 1")
            run["jobs"] = args.jobs
        seed, out, jobs = int(run["seed"]), str(run["out"]), int(run["jobs"])
    except ConfigError as exc:
        print(f"adaptdiff: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    t0 = time.perf_counter()
    try:
        if args.command == "validate":
            rep = run_validation(cfg, jobs=jobs, seed=seed)
            os.makedirs(out, exist_ok=True)
            write_report(rep, out, seed)
            with open(os.path.join(out, "resolved_config.yaml"), "w", encoding="utf-8") as f:
                f.write(cfg.dump())
            n_pass = sum(c.passed for c in rep.checks)
            print(f"{n_pass}/{len(rep.checks)} checks passed; report in "
                  f"{os.path.join(out, 'report.txt')}")
            return EXIT_OK if rep.passed else EXIT_VALIDATION
        arts, lines, code = COMMANDS[args.command](cfg, seed, jobs)
    except ConfigError as exc:
        print(f"adaptdiff: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NUMERIC_ERRORS as exc:
        print(f"adaptdiff: numeric abort: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"adaptdiff: invalid input: {exc}", file=sys.stderr)
        return EXIT_USAGE
    _write(out, arts, lines, args.command, cfg, time.perf_counter() - t0)
    print("\n".join(lines))
    return code


def entry_point():
    sys.exit(main())


if __name__ == "__main__":
    entry_point()
