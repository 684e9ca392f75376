"""Command-line surface: config ingestion, run orchestration, persistence.

One JSON config document drives every subcommand; each key can be
overridden by an environment variable ``FBLV_<SECTION>_<KEY>``.  Exit
codes: 0 ok, 2 numerical failure, 3 config error, 4 no result.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import pickle
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, barriers, classifier, odelimits, plots, steady
from .core import (
    InitSpec,
    InitialData,
    ModelParams,
    ProblemKind,
    classify_regime,
    coexistence_limit,
    lambda_threshold,
    make_initial_data,
)
from .errors import ConfigError, NoResultError, SolverError, UncoveredRegimeError
from .solver import GridSpec, RunRecord, extend_run, load_record, simulate, write_record

log = logging.getLogger("fblv")

EXIT_OK = 0
EXIT_SOLVER = 2
EXIT_CONFIG = 3
EXIT_NO_RESULT = 4

ENV_PREFIX = "FBLV"

#: every recognized config key; also drives the env-override scan
_SCHEMA = {
    "problem": ("kind",),
    "params": ("k", "h", "r", "D", "mu", "rho", "s0"),
    "init": ("preset", "amplitude_u", "amplitude_v", "table_path"),
    "grid": ("n_cells", "dt", "t_max", "snapshot_stride"),
    "classify": ("tol_vanish", "tol_stall", "stop_on_spreading"),
    "output": ("dir", "plots"),
    "threshold": ("bracket", "rel_tol", "max_escalations"),
    "steady": ("L", "m", "window", "slack", "run_dir"),
    "ode": ("u0", "v0", "t_max", "dt", "sample_stride", "iteration_terms"),
    "barrier": ("deltas", "gammas", "k_factors", "t_check", "nt", "nx"),
    "sweep": ("plan", "stop_on_spreading"),
}

_PARAM_DEFAULTS = {"k": 0.5, "h": 0.5, "r": 1.0, "D": 1.0, "mu": 1.0, "rho": 1.0, "s0": 2.0}


def apply_env_overrides(raw: dict, env=None) -> dict:
    """Override config leaves from FBLV_<SECTION>_<KEY> variables.

    Values are parsed as JSON where possible, else taken as strings.
    """
    env = os.environ if env is None else env
    for section, keys in _SCHEMA.items():
        for key in keys:
            name = f"{ENV_PREFIX}_{section}_{key}".upper()
            if name in env:
                try:
                    value = json.loads(env[name])
                except json.JSONDecodeError:
                    value = env[name]
                raw.setdefault(section, {})[key] = value
    return raw


def _section(raw: dict, name: str) -> dict:
    section = raw.get(name, {})
    if not isinstance(section, dict):
        raise ConfigError(f"config section {name!r} must be an object")
    unknown = set(section) - set(_SCHEMA.get(name, ()))
    if unknown:
        raise ConfigError(f"unknown keys in config section {name!r}: {sorted(unknown)}")
    return section


@dataclass
class RunConfig:
    """Validated configuration; rejects bad inputs before any compute."""

    kind: ProblemKind
    params: ModelParams
    init_spec: InitSpec
    grid: GridSpec
    tol_vanish: float
    tol_stall: float | None
    stop_on_spreading: bool
    out_dir: Path
    make_plots: bool
    raw: dict = field(repr=False, default_factory=dict)

    @classmethod
    def from_raw(cls, raw: dict, out_override: str | None = None) -> "RunConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config root must be a JSON object")
        unknown = set(raw) - set(_SCHEMA)
        if unknown:
            raise ConfigError(f"unknown config sections: {sorted(unknown)}")
        kind = ProblemKind.parse(_section(raw, "problem").get("kind", "NFB"))
        pvals = dict(_PARAM_DEFAULTS)
        pvals.update(_section(raw, "params"))
        try:
            params = ModelParams(**{k: float(v) for k, v in pvals.items()})
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad model parameters: {exc}") from None

        init_raw = _section(raw, "init")
        table = None
        if init_raw.get("table_path"):
            data = np.loadtxt(init_raw["table_path"], delimiter=",", skiprows=1, ndmin=2)
            table = (data[:, 0], data[:, 1], data[:, 2])
        init_spec = InitSpec(
            preset=str(init_raw.get("preset", "table" if table is not None else "auto")),
            amplitude_u=float(init_raw.get("amplitude_u", 0.5)),
            amplitude_v=float(init_raw.get("amplitude_v", 0.5)),
            table=table)

        grid_raw = _section(raw, "grid")
        stride = grid_raw.get("snapshot_stride")
        grid = GridSpec(
            n_cells=int(grid_raw.get("n_cells", 400)),
            dt=float(grid_raw.get("dt", 2.5e-4)),
            t_max=float(grid_raw.get("t_max", 100.0)),
            snapshot_stride=None if stride is None else int(stride))
        if params.s0 < 10.0 / grid.n_cells:
            raise ConfigError(
                f"s0 = {params.s0} is below the resolution floor 10/n_cells")

        cls_raw = _section(raw, "classify")
        tol_vanish = float(cls_raw.get("tol_vanish", classifier.DEFAULT_TOL_VANISH))
        stall = cls_raw.get("tol_stall")
        if tol_vanish <= 0.0:
            raise ConfigError("tol_vanish must be positive")

        out_raw = _section(raw, "output")
        out_dir = Path(out_override or out_raw.get("dir", "fblv-out"))
        config = cls(
            kind=kind, params=params, init_spec=init_spec, grid=grid,
            tol_vanish=tol_vanish,
            tol_stall=None if stall is None else float(stall),
            stop_on_spreading=bool(cls_raw.get("stop_on_spreading", False)),
            out_dir=out_dir,
            make_plots=bool(out_raw.get("plots", True)),
            raw=raw)
        config.build_init()  # fail fast on incompatible initial data
        return config

    @classmethod
    def from_file(cls, path: str | None, out_override: str | None = None) -> "RunConfig":
        if path is None:
            raw = {}
        else:
            try:
                with open(path) as f:
                    raw = json.load(f)
            except OSError as exc:
                raise ConfigError(f"cannot read config {path!r}: {exc}") from None
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config {path!r} is not valid JSON: {exc}") from None
        return cls.from_raw(apply_env_overrides(raw), out_override)

    def build_init(self) -> InitialData:
        return make_initial_data(self.kind, self.params.s0, self.grid.n_cells,
                                 self.init_spec)

    @property
    def lam(self) -> float:
        return lambda_threshold(self.params, self.kind)

    def config_hash(self) -> str:
        """Run identity for checkpoints: everything except the horizon."""
        doc = {
            "kind": self.kind.value,
            "params": {k: float(v) for k, v in vars(self.params).items()},
            "init": {
                "preset": self.init_spec.preset,
                "amplitude_u": self.init_spec.amplitude_u,
                "amplitude_v": self.init_spec.amplitude_v,
                "table": None if self.init_spec.table is None else [
                    hashlib.sha256(np.ascontiguousarray(col, dtype=float).tobytes()).hexdigest()
                    for col in self.init_spec.table],
            },
            "grid": {"n_cells": self.grid.n_cells, "dt": self.grid.dt},
        }
        blob = json.dumps(doc, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


# ---------------------------------------------------------------------------
# checkpoints

CHECKPOINT_NAME = "checkpoint.pkl"


def save_checkpoint(path: Path, config_hash: str, record: RunRecord) -> None:
    blob = {"format_version": 1, "package_version": __version__,
            "config_hash": config_hash, "record": record}
    with open(path, "wb") as f:
        pickle.dump(blob, f, protocol=4)


def load_checkpoint(path: str | Path, expected_hash: str) -> RunRecord:
    try:
        with open(path, "rb") as f:
            blob = pickle.load(f)
    except OSError as exc:
        raise ConfigError(f"cannot read checkpoint {path!r}: {exc}") from None
    except pickle.UnpicklingError as exc:
        raise ConfigError(f"corrupt checkpoint {path!r}: {exc}") from None
    if blob.get("format_version") != 1:
        raise ConfigError(f"unsupported checkpoint version in {path!r}")
    if blob["config_hash"] != expected_hash:
        raise ConfigError("checkpoint was produced by a different configuration")
    return blob["record"]


# ---------------------------------------------------------------------------
# subcommands

def _write_classification(cfg: RunConfig, record: RunRecord, out: Path) -> classifier.Classification:
    result = classifier.classify_run(record, cfg.lam, cfg.tol_vanish, cfg.tol_stall)
    doc = result.as_dict()
    doc["lambda"] = cfg.lam
    with open(out / "classification.json", "w") as f:
        json.dump(doc, f, indent=2)
        f.write("\n")
    return result


def cmd_simulate(cfg: RunConfig, args) -> int:
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    stop = cfg.lam if cfg.stop_on_spreading else None
    chash = cfg.config_hash()
    try:
        if args.resume:
            prefix = load_checkpoint(args.resume, chash)
            log.info("resuming from t = %g", prefix.final_t)
            record = extend_run(prefix, cfg.grid.t_max, stop_when_s_exceeds=stop)
        else:
            record = simulate(cfg.params, cfg.kind, cfg.build_init(), cfg.grid,
                              stop_when_s_exceeds=stop)
    except SolverError as exc:
        if exc.record is not None:
            write_record(exc.record, out, {"config_hash": chash})
        raise
    write_record(record, out, {"config_hash": chash})
    save_checkpoint(out / CHECKPOINT_NAME, chash, record)
    result = _write_classification(cfg, record, out)
    if cfg.make_plots:
        plots.emit_run_plots(record, cfg.lam, out)
    print(f"simulate: t = {record.final_t:g}, s = {record.final_s:.6g}, "
          f"verdict = {result.verdict.value}")
    return EXIT_OK


def cmd_classify(cfg: RunConfig, args) -> int:
    run_dir = Path(args.run) if args.run else cfg.out_dir
    record = load_record(run_dir)
    lam = lambda_threshold(record.params, record.kind)
    result = classifier.classify_run(record, lam, cfg.tol_vanish, cfg.tol_stall)
    doc = result.as_dict()
    doc["lambda"] = lam
    with open(run_dir / "classification.json", "w") as f:
        json.dump(doc, f, indent=2)
        f.write("\n")
    print(f"classify: {result.verdict.value} (final s = {result.evidence.final_s:.6g}, "
          f"Lambda = {lam:.6g})")
    return EXIT_OK


def cmd_threshold(cfg: RunConfig, args) -> int:
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    section = _section(cfg.raw, "threshold")
    bracket0 = tuple(float(v) for v in section.get("bracket", (1e-3, 1e2)))
    rel_tol = float(section.get("rel_tol", 0.05))
    max_esc = int(section.get("max_escalations", 3))

    progress_path = out / "bracket_progress.json"
    cache: dict[str, str] = {}
    progress: list[dict] = []
    if args.resume:
        with open(args.resume) as f:
            saved = json.load(f)
        if saved.get("config_hash") != cfg.config_hash():
            raise ConfigError("threshold progress file belongs to a different configuration")
        progress = saved["probes"]
        cache = {repr(float(p["mu"])): p["verdict"] for p in progress}
        log.info("resuming bisection with %d completed probes", len(cache))

    def on_probe(mu: float, verdict: classifier.Verdict) -> None:
        progress.append({"mu": mu, "verdict": verdict.value})
        with open(progress_path, "w") as f:
            json.dump({"config_hash": cfg.config_hash(), "probes": progress}, f, indent=2)

    bracket = classifier.find_mu_star(
        cfg.params, cfg.kind, cfg.init_spec, cfg.grid, bracket0, rel_tol,
        tol_vanish=cfg.tol_vanish, tol_stall=cfg.tol_stall,
        max_escalations=max_esc, probe_cache=cache, on_probe=on_probe)
    classifier.write_bracket_json(bracket, out / "bracket.json")
    print(f"threshold: mu* in [{bracket.mu_lo:.6g}, {bracket.mu_hi:.6g}] "
          f"(rel width {bracket.rel_width:.3%}, {len(bracket.history)} probes)")
    return EXIT_OK


def cmd_steady(cfg: RunConfig, args) -> int:
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    section = _section(cfg.raw, "steady")
    grid = steady.HalfLineGrid(L=float(section.get("L", 40.0)),
                               m=int(section.get("m", 4000)))
    profiles = steady.build_barriers(cfg.params, grid)
    profiles.to_csv(out / "barriers.csv")
    snapshot = None
    if section.get("run_dir"):
        record = load_record(section["run_dir"])
        window = tuple(float(v) for v in section.get("window", (0.0, 5.0)))
        slack = float(section.get("slack", 0.02))
        report = steady.check_sandwich(record, profiles, window, slack)
        with open(out / "sandwich.json", "w") as f:
            json.dump(report.as_dict(), f, indent=2)
            f.write("\n")
        snapshot = record.snapshots[-1]
        print(f"steady: sandwich {'pass' if report.passed else 'FAIL'} "
              f"on window {window} with slack {slack}")
    else:
        print(f"steady: barriers written for h={cfg.params.h}, k={cfg.params.k}")
    if cfg.make_plots:
        steady_plot = out / "barriers.svg"
        plots.plot_barriers(profiles, steady_plot, final_snapshot=snapshot)
    return EXIT_OK


def cmd_ode(cfg: RunConfig, args) -> int:
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    section = _section(cfg.raw, "ode")
    traj = odelimits.integrate_ode(
        cfg.params,
        float(section.get("u0", 0.1)), float(section.get("v0", 0.1)),
        float(section.get("t_max", 100.0)),
        dt=float(section.get("dt", odelimits.ODE_DT)),
        sample_stride=int(section.get("sample_stride", 10)))
    odelimits.write_trajectory_csv(traj, out / "trajectory.csv")
    meta = {"regime": classify_regime(cfg.params).value, "final": list(traj.final)}
    try:
        limit = coexistence_limit(cfg.params)
        meta["limit"] = list(limit)
        meta["final_error"] = max(abs(traj.final[0] - limit[0]), abs(traj.final[1] - limit[1]))
    except UncoveredRegimeError:
        limit = None
        meta["limit"] = None
    if 0.0 < cfg.params.h < 1.0 <= cfg.params.k:
        seq = odelimits.iterate_bounds(cfg.params.h, cfg.params.k,
                                       int(section.get("iteration_terms", 30)))
        odelimits.write_iteration_csv(seq, out / "iteration.csv")
    with open(out / "ode.json", "w") as f:
        json.dump(meta, f, indent=2)
        f.write("\n")
    if cfg.make_plots:
        plots.plot_trajectory(traj, out / "trajectory.svg", limit=limit)
    print(f"ode: final (u, v) = ({traj.final[0]:.6g}, {traj.final[1]:.6g})")
    return EXIT_OK


def cmd_barrier(cfg: RunConfig, args) -> int:
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    section = _section(cfg.raw, "barrier")
    grid = barriers.BarrierGrid(
        t_check=float(section.get("t_check", 50.0)),
        nt=int(section.get("nt", 400)), nx=int(section.get("nx", 400)))
    spec = barriers.SearchSpec(
        deltas=tuple(section.get("deltas", barriers.SearchSpec.deltas)),
        gammas=tuple(section.get("gammas", barriers.SearchSpec.gammas)),
        k_factors=tuple(section.get("k_factors", barriers.SearchSpec.k_factors)),
        grid=grid)
    init = cfg.build_init()
    mu0, witness = barriers.search_mu0(cfg.params, init, spec, cfg.kind)
    report = barriers.verify_supersolution(witness, mu0, grid=grid)
    refined = barriers.verify_supersolution(witness, mu0, grid=grid.refined())
    doc = barriers.certificate_dict(mu0, witness, report, cfg.lam)
    doc["refined_margins"] = refined.margins
    doc["refined_passed"] = refined.passed
    with open(out / "certificate.json", "w") as f:
        json.dump(doc, f, indent=2)
        f.write("\n")
    print(f"barrier: certified mu0 = {mu0:.6g} "
          f"(delta={witness.delta}, gamma={witness.gamma:.4g}, K={witness.K:.4g}); "
          f"s_infinity <= {witness.sigma_infinity:.6g}")
    return EXIT_OK


def cmd_sweep(cfg: RunConfig, args) -> int:
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    section = _section(cfg.raw, "sweep")
    plan = section.get("plan")
    if not plan:
        raise ConfigError("sweep requires a nonempty sweep.plan list")
    rows = classifier.sweep(
        plan, cfg.kind, cfg.init_spec, cfg.grid,
        base_params=cfg.params, jobs=args.jobs,
        tol_vanish=cfg.tol_vanish, tol_stall=cfg.tol_stall,
        stop_early=bool(section.get("stop_on_spreading", True)))
    classifier.write_sweep_csv(rows, out / "sweep.csv")
    failures = sum(1 for r in rows if r.error is not None)
    print(f"sweep: {len(rows)} rows, {failures} failed")
    return EXIT_OK


_DISPATCH = {
    "simulate": cmd_simulate,
    "classify": cmd_classify,
    "threshold": cmd_threshold,
    "steady": cmd_steady,
    "ode": cmd_ode,
    "barrier": cmd_barrier,
    "sweep": cmd_sweep,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fblv", description=__doc__)
    parser.add_argument("--version", action="version", version=f"fblv {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _DISPATCH:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON configuration file")
        p.add_argument("--out", help="output directory (overrides output.dir)")
        p.add_argument("--jobs", type=int, default=1, help="parallel workers for sweeps")
        p.add_argument("--resume", help="checkpoint or progress file to continue from")
        if name == "classify":
            p.add_argument("--run", help="run directory to classify (defaults to output dir)")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s",
                        stream=sys.stderr)
    try:
        args = _build_parser().parse_args(argv)
        cfg = RunConfig.from_file(args.config, out_override=args.out)
        return _DISPATCH[args.command](cfg, args)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except SolverError as exc:
        log.error("solver error: %s", exc)
        return EXIT_SOLVER
    except NoResultError as exc:
        log.error("no result: %s", exc)
        return EXIT_NO_RESULT


def run_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run_main()
