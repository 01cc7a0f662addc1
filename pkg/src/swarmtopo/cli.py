"""Command-line front end.

Every randomized command prints its effective root seed. Values come from
field defaults, then ``--config``, then explicit flags.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from .config import RunConfig
from .metrics import (
    FAMILY_TARGETS,
    ScenarioGenerationError,
    beta_sweep,
    diversity,
    gen_scenario,
)
from .netmodel import NetworkSnapshot, build_link_index
from .offline import CandidateSet, DiversityConfig, generate_candidates
from .pipeline import build_problem, pr_experiment, run_offline, throughput_band
from .qubo import ObjectiveParams, from_exchange
from .remote import ENDPOINT_ENV, RemoteError, RemoteSampler
from .samplers import (
    SamplerConfig,
    SAParams,
    brute_force_sample,
    sa_sample,
)
from .sim import sampler_seed

log = logging.getLogger("swarmtopo")

EXIT_VALIDATION = 2
EXIT_FAILURE = 1
EXIT_TRANSPORT = 3

_DEFAULTS = RunConfig()


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_FAILURE):
        super().__init__(message)
        self.code = code


def write_atomic(path: str | Path, text: str) -> None:
    """Write via a temp file in the target directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _json(data) -> str:
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def _load_snapshot(path) -> NetworkSnapshot:
    try:
        return NetworkSnapshot.from_dict(json.loads(Path(path).read_text()))
    except (OSError, ValueError) as exc:
        raise CliError(f"cannot read snapshot {path}: {exc}", EXIT_VALIDATION) from exc


def _config(args) -> RunConfig:
    try:
        cfg = RunConfig.load(getattr(args, "config", None))
    except (OSError, ValueError) as exc:
        raise CliError(f"invalid config: {exc}", EXIT_VALIDATION) from exc
    seed = getattr(args, "seed", None)
    jobs = getattr(args, "jobs", None)
    try:
        cfg = cfg.override("scenario", seed=seed)
        return cfg.override("experiment", jobs=jobs)
    except ValueError as exc:
        raise CliError(f"invalid option: {exc}", EXIT_VALIDATION) from exc


def _override(cfg: RunConfig, section: str, **values) -> RunConfig:
    try:
        return cfg.override(section, **values)
    except ValueError as exc:
        raise CliError(f"invalid option: {exc}", EXIT_VALIDATION) from exc


def _sampler(solver: str, endpoint: str | None):
    if solver == "sa":
        return sa_sample
    if solver == "brute":
        return brute_force_sample
    try:
        return RemoteSampler(endpoint)
    except RemoteError as exc:
        raise CliError(f"transport error: {exc}", EXIT_TRANSPORT) from exc


def _print_seed(seed: int) -> None:
    print(f"seed: {seed}")


# ---------------------------------------------------------------- commands

def cmd_scenario(args) -> None:
    cfg = _config(args)
    cfg = _override(cfg, "scenario", family=args.family, n=args.n)
    sc = cfg.scenario
    _print_seed(sc.seed)
    try:
        snap, report = gen_scenario(sc.family, sc.n, sc.seed, radio=sc.radio())
    except ScenarioGenerationError as exc:
        raise CliError(str(exc)) from exc
    write_atomic(args.out, _json(snap.to_dict()))
    if args.report:
        write_atomic(args.report, _json(report))
    print(f"max_betweenness: {report['max_betweenness']:.6f} (attempts {report['attempts']})")


def cmd_offline(args) -> None:
    cfg = _config(args)
    cfg = _override(
        cfg, "offline", solver=args.solver, endpoint=args.endpoint, lam=args.lam,
        rounds=args.rounds, samples_per_round=args.samples, portfolio_size=args.portfolio,
        sweeps=args.sweeps,
    )
    cfg = _override(cfg, "objective", beta=args.beta)
    snap = _load_snapshot(args.snapshot)
    off = cfg.offline
    seed = cfg.scenario.seed
    _print_seed(seed)
    sampler = _sampler(off.solver, off.endpoint)
    try:
        result = run_offline(
            snap, cfg.objective.params(), off.diversity(),
            off.sampler_config(sampler_seed(seed)), off.portfolio_size, sampler,
        )
    except RemoteError as exc:
        raise CliError(f"transport error: {exc}", EXIT_TRANSPORT) from exc
    write_atomic(args.out, _json(result.portfolio.to_dict()))
    print(f"candidates: {len(result.candidates)} distinct, portfolio {len(result.portfolio)}")


def cmd_online(args) -> None:
    cfg = _config(args)
    cfg = _override(cfg, "experiment", num_runs=args.runs, output_dir=args.out_dir)
    if args.no_disturbance:
        cfg = _override(cfg, "scenario", disturbance_times_s=[])
    if args.freeze:
        cfg = _override(cfg, "scenario", freeze=True)
    snap = _load_snapshot(args.snapshot)
    try:
        cset = CandidateSet.from_dict(json.loads(Path(args.candidates).read_text()))
    except (OSError, ValueError, KeyError) as exc:
        raise CliError(f"cannot read candidates {args.candidates}: {exc}", EXIT_VALIDATION) from exc
    m = build_link_index(snap).num_links
    if len(cset) == 0 or cset.num_links != m:
        raise CliError(
            f"candidate/snapshot mismatch: candidates have {cset.num_links} links, "
            f"snapshot indexes {m}", EXIT_VALIDATION,
        )
    if cset.snapshot_id and cset.snapshot_id != snap.snapshot_id:
        log.warning("candidate set was built for snapshot %s, not %s",
                    cset.snapshot_id, snap.snapshot_id)
    seed = cfg.scenario.seed
    _print_seed(seed)
    exp = pr_experiment(
        cfg.scenario.spec(snap, seed), cset.topologies, runs=cfg.experiment.num_runs,
        weights=cfg.online.weights(), policy=cfg.online.policy(), jobs=cfg.experiment.jobs,
    )
    name = args.name or Path(args.snapshot).stem
    out = Path(cfg.experiment.output_dir)
    for arm, traces in (("dynamic", exp.dynamic), ("static", exp.static)):
        for s, trace in zip(exp.seeds, traces):
            write_atomic(out / f"{name}_{arm}_{s}.csv", trace.to_csv())
        if len(traces) > 1:
            rows = throughput_band(traces)
            write_atomic(out / f"{name}_{arm}_band.csv",
                         _csv(["t", "mean_thr", "ci_lo", "ci_hi"], rows))
    summary = exp.summary()
    summary["runs"] = {
        arm: [t.summary() for t in traces]
        for arm, traces in (("dynamic", exp.dynamic), ("static", exp.static))
    }
    write_atomic(out / f"{name}_summary.json", _json(summary))
    print(
        f"PR dynamic {exp.pr_dynamic.mean:.4f}  static {exp.pr_static.mean:.4f}  "
        f"relative improvement {exp.relative_improvement:+.2%}"
    )


def cmd_sweep_beta(args) -> None:
    cfg = _config(args)
    snap = _load_snapshot(args.snapshot)
    seed = cfg.scenario.seed
    _print_seed(seed)
    scfg = SamplerConfig(1, 0, SAParams(sweeps=args.sweeps))
    rows = beta_sweep(
        snap, sorted(args.betas), seeds=range(seed, seed + args.seeds),
        alpha=cfg.objective.alpha, scfg=scfg,
    )
    write_atomic(args.out, _csv(
        ["beta", "mean_throughput", "mean_load_std"],
        [(r.beta, r.mean_throughput, r.mean_load_std) for r in rows],
    ))
    for r in rows:
        print(f"beta {r.beta:g}: throughput {r.mean_throughput:.4f}, load_std {r.mean_load_std:.4f}")


def bench_diversity(snapshot, seeds, rounds, samples, lam, sweeps, beta=0.01):
    """Per-seed diversity of the full sample set, penalised vs. ``lam = 0``."""
    q0 = build_problem(snapshot, ObjectiveParams(beta=beta))
    rows = []
    for s in seeds:
        scfg = SamplerConfig(samples, s, SAParams(sweeps=sweeps))
        div = []
        for lam_value in (lam, 0.0):
            dcfg = DiversityConfig(rounds, samples, lam_value, dedupe=False)
            div.append(diversity(generate_candidates(q0, sa_sample, dcfg, scfg).topologies))
        rows.append((int(s), div[0], div[1]))
    return rows


def cmd_bench_diversity(args) -> None:
    cfg = _config(args)
    snap = _load_snapshot(args.snapshot)
    seed = cfg.scenario.seed
    _print_seed(seed)
    rows = bench_diversity(
        snap, range(seed, seed + args.runs), args.rounds, args.samples, args.lam,
        args.sweeps, cfg.objective.beta,
    )
    write_atomic(args.out, _csv(["seed", "diversity_lambda", "diversity_zero"], rows))
    pen = np.mean([r[1] for r in rows])
    base = np.mean([r[2] for r in rows])
    gain = pen / base - 1 if base > 0 else float("inf")
    print(f"mean diversity {pen:.4f} vs {base:.4f} at lambda=0 ({gain:+.1%})")


def cmd_solve(args) -> None:
    try:
        q = from_exchange(json.loads(Path(args.qubo).read_text()))
    except (OSError, ValueError, KeyError) as exc:
        raise CliError(f"cannot read QUBO {args.qubo}: {exc}", EXIT_VALIDATION) from exc
    _print_seed(args.seed)
    cfg = SamplerConfig(args.num_samples, args.seed, SAParams(args.sweeps, restarts_per_sample=args.restarts))
    sampler = _sampler(args.solver, args.endpoint)
    try:
        batch = sampler(q, cfg)
    except RemoteError as exc:
        raise CliError(f"transport error: {exc}", EXIT_TRANSPORT) from exc
    write_atomic(args.out, _json({
        "topologies": [[int(b) for b in x] for x in batch.topologies],
        "energies": [float(e) for e in batch.energies],
    }))
    print(f"best energy: {min(batch.energies):.10g}")
    log.info("wall time %.3f s", batch.wall_time_s)


# ------------------------------------------------------------------ parser

def _fmt(section, name):
    return getattr(getattr(_DEFAULTS, section), name)


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    p = argparse.ArgumentParser(prog="swarmtopo", description=__doc__, formatter_class=fmt)
    p.add_argument("-v", "--verbose", action="count", default=0, help="more logging")
    sub = p.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--seed", type=int,
                        help=f"root seed (config default {_fmt('scenario', 'seed')})")

    s = sub.add_parser("scenario", parents=[common], formatter_class=fmt,
                       help="generate a centralisation-controlled snapshot")
    s.add_argument("--family", choices=sorted(FAMILY_TARGETS),
                   help=f"scenario family (config default {_fmt('scenario', 'family')})")
    s.add_argument("--n", type=int, help=f"number of UAVs (config default {_fmt('scenario', 'n')})")
    s.add_argument("--out", required=True, help="snapshot JSON path")
    s.add_argument("--report", help="optional centrality report JSON path")
    s.epilog = (
        f"Radio defaults: capacity gap {_fmt('scenario', 'capacity_gap')}, "
        f"bandwidth {_fmt('scenario', 'bandwidth_hz')} (normalised), "
        f"tx {_fmt('scenario', 'tx_power_dbm')} dBm, noise {_fmt('scenario', 'noise_dbm')} dBm."
    )
    s.set_defaults(func=cmd_scenario)

    o = sub.add_parser("offline", parents=[common], formatter_class=fmt,
                       help="sample a diverse candidate portfolio")
    o.add_argument("--snapshot", required=True)
    o.add_argument("--out", required=True, help="candidate-set JSON path")
    o.add_argument("--solver", choices=["sa", "brute", "remote"],
                   help=f"sampler backend (config default {_fmt('offline', 'solver')})")
    o.add_argument("--endpoint", default=None,
                   help=f"remote URL or job directory (falls back to ${ENDPOINT_ENV})")
    o.add_argument("--lambda", dest="lam", type=float,
                   help="frequency penalty weight (config default: 0.5 * mean |diag Q|)")
    o.add_argument("--rounds", type=int, help=f"rounds R (config default {_fmt('offline', 'rounds')})")
    o.add_argument("--samples", type=int,
                   help=f"samples per round k (config default {_fmt('offline', 'samples_per_round')})")
    o.add_argument("--portfolio", type=int,
                   help=f"candidates kept (config default {_fmt('offline', 'portfolio_size')})")
    o.add_argument("--sweeps", type=int,
                   help=f"SA sweeps per sample (config default {_fmt('offline', 'sweeps')})")
    o.add_argument("--beta", type=float,
                   help=f"fragility weight (config default {_fmt('objective', 'beta')})")
    o.set_defaults(func=cmd_offline)

    n = sub.add_parser("online", parents=[common], formatter_class=fmt,
                       help="paired dynamic vs. static retention experiment")
    n.add_argument("--snapshot", required=True)
    n.add_argument("--candidates", required=True)
    n.add_argument("--out-dir", help=f"output directory (config default {_fmt('experiment', 'output_dir')})")
    n.add_argument("--runs", type=int, help=f"runs (config default {_fmt('experiment', 'num_runs')})")
    n.add_argument("--jobs", type=int, help="worker processes (config default 1)")
    n.add_argument("--name", help="file prefix (default: snapshot file stem)")
    n.add_argument("--no-disturbance", action="store_true", help="drop scheduled disturbances")
    n.add_argument("--freeze", action="store_true", help="no motion and no shadowing")
    n.epilog = (
        f"Protocol defaults: horizon {_fmt('scenario', 'horizon_s')} s, step "
        f"{_fmt('scenario', 'step_s')} s, disturbances at {_fmt('scenario', 'disturbance_times_s')} s, "
        f"hysteresis {_fmt('online', 'hysteresis_margin')}, dwell {_fmt('online', 'min_dwell_s')} s, "
        f"switch outage {_fmt('online', 'switch_outage_steps')} steps."
    )
    n.set_defaults(func=cmd_online)

    w = sub.add_parser("sweep-beta", parents=[common], formatter_class=fmt,
                       help="throughput / load-balance trade-off over beta")
    w.add_argument("--snapshot", required=True)
    w.add_argument("--out", required=True, help="CSV path")
    w.add_argument("--betas", type=float, nargs="+", default=[0.0, 1e-3, 1e-2, 1e-1])
    w.add_argument("--seeds", type=int, default=20, help="number of seeds per beta")
    w.add_argument("--sweeps", type=int, default=SAParams().sweeps)
    w.set_defaults(func=cmd_sweep_beta)

    b = sub.add_parser("bench-diversity", parents=[common], formatter_class=fmt,
                       help="sample-set diversity with and without the frequency penalty")
    b.add_argument("--snapshot", required=True)
    b.add_argument("--out", required=True, help="CSV path")
    b.add_argument("--runs", type=int, default=20, help="number of seeds")
    b.add_argument("--rounds", type=int, default=5)
    b.add_argument("--samples", type=int, default=10)
    b.add_argument("--lambda", dest="lam", type=float, default=None,
                   help="penalty weight; default 0.5 * mean |diag Q|")
    b.add_argument("--sweeps", type=int, default=_fmt("offline", "sweeps"))
    b.set_defaults(func=cmd_bench_diversity)

    v = sub.add_parser("solve", formatter_class=fmt, help="one-shot QUBO solve")
    v.add_argument("--qubo", required=True, help="exchange-format JSON {dim, entries}")
    v.add_argument("--out", required=True)
    v.add_argument("--solver", choices=["sa", "brute", "remote"], default="sa")
    v.add_argument("--endpoint", default=None, help=f"falls back to ${ENDPOINT_ENV}")
    v.add_argument("--num-samples", type=int, default=10)
    v.add_argument("--sweeps", type=int, default=SAParams().sweeps)
    v.add_argument("--restarts", type=int, default=1)
    v.add_argument("--seed", type=int, default=0)
    v.set_defaults(func=cmd_solve)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    return 0


if __name__ == "__main__":
    sys.exit(main())
