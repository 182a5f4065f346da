"""Batch command-line interface: heat-flow runs and verification suites.

Outputs are deterministic given the configuration and seed: an energy
time-series CSV, a monotonicity verdict JSON, optional binary field
snapshots, and per-suite JSON reports.  No timestamps are embedded, so
identical invocations produce byte-identical artifacts.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import asdict, dataclass, fields

from .energy import CSV_COLUMNS, energy_series, monotonicity_verdict
from .flow import FlowConfig, evolve
from .lattice import make_grid, save_field
from .suites import SUITE_NAMES, run_suite

FORMAT_VERSION = "qcflow-cli-1"


@dataclass
class RunConfig:
    n: int = 1
    m_x: int = 8
    alpha: float = -0.05
    cfl_safety: float = 0.5
    t_end: float = 0.01
    record_every: int = 8
    width: float = 0.22
    amplitude: float = 0.3
    offset: float = 1.0
    tau_width: float | None = None
    tau_profile: str | None = "uniform"
    profile: str = "smooth"
    seed: int = 1
    snapshots: bool = False
    out: str = "out"

    def echo(self) -> dict:
        data = asdict(self)
        # artifact locations do not affect the results; keep outputs
        # byte-identical across output directories
        data.pop("out", None)
        data.pop("snapshots", None)
        grid = make_grid(self.n, self.m_x)
        data.update({"m_t": grid.m_t, "h_x": grid.h_x, "h_t": grid.h_t,
                     "L_t": grid.L_t, "format_version": FORMAT_VERSION})
        return data


_BOOL_TRUE = {"1", "true", "yes", "on"}
_BOOL_FALSE = {"0", "false", "no", "off"}


def _coerce(name: str, raw: str, typ):
    raw = raw.strip()
    if raw.lower() in ("none", "null", ""):
        return None
    if typ is bool or name == "snapshots":
        if raw.lower() in _BOOL_TRUE:
            return True
        if raw.lower() in _BOOL_FALSE:
            return False
        raise ValueError(f"cannot parse boolean {name}={raw!r}")
    if name in ("n", "m_x", "record_every", "seed"):
        return int(raw)
    if name in ("alpha", "cfl_safety", "t_end", "width", "amplitude",
                "offset", "tau_width"):
        return float(raw)
    return raw


def parse_config_file(path: str) -> dict:
    """Flat key = value lines; '#' starts a comment."""
    known = {f.name for f in fields(RunConfig)}
    values: dict = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise ValueError(f"{path}:{lineno}: expected key = value")
            key, raw = (part.strip() for part in stripped.split("=", 1))
            if key not in known:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = _coerce(key, raw, str)
    return values


def build_run_config(args) -> RunConfig:
    values: dict = {}
    if args.config:
        values.update(parse_config_file(args.config))
    for name in ("alpha", "mx", "t_end", "seed", "out"):
        val = getattr(args, name, None)
        if val is not None:
            values["m_x" if name == "mx" else name] = val
    if args.snapshots:
        values["snapshots"] = True
    cfg = RunConfig(**values)
    if cfg.alpha in (0.0, 0.5):
        raise ValueError("alpha must avoid 0 and 1/2")
    return cfg


def cmd_run(args) -> int:
    try:
        cfg = build_run_config(args)
    except (ValueError, TypeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    os.makedirs(cfg.out, exist_ok=True)

    flow_cfg = FlowConfig(
        n=cfg.n, m_x=cfg.m_x, alpha=cfg.alpha, cfl_safety=cfg.cfl_safety,
        t_end=cfg.t_end, record_every=cfg.record_every, width=cfg.width,
        amplitude=cfg.amplitude, offset=cfg.offset, tau_width=cfg.tau_width,
        profile=cfg.profile, tau_profile=cfg.tau_profile)
    try:
        states = evolve(flow_cfg)
    except (ValueError, RuntimeError) as exc:
        print(f"error: flow aborted: {exc}", file=sys.stderr)
        return 1

    violations = []
    mass0 = None
    lo0 = float(states[0].u.values.min())
    hi0 = float(states[0].u.values.max())
    from .lattice import integrate
    trajectory_rows = []
    for st in states:
        mass = integrate(st.u)
        lo = float(st.u.values.min())
        hi = float(st.u.values.max())
        trajectory_rows.append([st.step, st.time, mass, lo, hi])
        if mass0 is None:
            mass0 = mass
        elif abs(mass - mass0) > 1e-12 * abs(mass0):
            violations.append(f"mass drift at t={st.time}")
        if lo < lo0 or hi > hi0:
            violations.append(f"range expansion at t={st.time}")
        if lo <= 0.0:
            violations.append(f"positivity lost at t={st.time}")
    trajectory_path = os.path.join(cfg.out, "trajectory.csv")
    with open(trajectory_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "time", "mass", "min_u", "max_u"])
        writer.writerows(trajectory_rows)

    reports = energy_series(states, cfg.alpha)
    csv_path = os.path.join(cfg.out, "energy.csv")
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for rep in reports:
            writer.writerow(rep.csv_row())

    verdict = monotonicity_verdict(states, cfg.alpha, reports=reports) \
        if len(states) >= 3 else None
    verdict_path = os.path.join(cfg.out, "verdict.json")
    payload = {"config": cfg.echo(),
               "verdict": verdict.to_dict() if verdict else None,
               "violations": violations}
    with open(verdict_path, "w") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)

    if cfg.snapshots:
        snap_dir = os.path.join(cfg.out, "snapshots")
        os.makedirs(snap_dir, exist_ok=True)
        for st in states:
            save_field(st.u, os.path.join(snap_dir, f"u_{st.step:08d}"))

    for line in violations:
        print(f"invariant violated: {line}", file=sys.stderr)
    print(f"wrote {csv_path} and {verdict_path} "
          f"({len(states)} records, final t={states[-1].time:.6g})")
    return 1 if violations else 0


def cmd_verify(args) -> int:
    names = SUITE_NAMES if args.suite == "all" else (args.suite,)
    out_dir = args.out or "out"
    os.makedirs(out_dir, exist_ok=True)
    all_ok = True
    for name in names:
        kwargs = {}
        if args.mx is not None and name in ("geometry", "flow", "lemma", "theorem"):
            kwargs["m_x"] = args.mx
        if args.alpha is not None and name in ("calculus", "lemma", "theorem"):
            kwargs["alpha"] = args.alpha
        report = run_suite(name, seed=args.seed, **kwargs)
        path = os.path.join(out_dir, f"verify_{name}.json")
        with open(path, "w") as fh:
            fh.write(report.to_json())
        status = "PASS" if report.passed else "FAIL"
        print(f"[{status}] suite {name} ({len(report.checks)} checks, "
              f"{report.runtime_seconds:.1f}s) -> {path}")
        for c in report.checks:
            print(f"    [{c.status:>14}] {c.name}"
                  + (f": measured={c.measured:.6g}" if c.measured is not None else "")
                  + (f" threshold={c.threshold:.6g}" if c.threshold is not None else ""))
        all_ok = all_ok and report.passed
    return 0 if all_ok else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="qcflow",
        description="Heat flow and verification suites on the compact "
                    "quaternionic Heisenberg model")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run the heat flow and write artifacts")
    p_run.add_argument("--config", help="flat key=value configuration file")
    p_run.add_argument("--alpha", type=float, default=None)
    p_run.add_argument("--mx", type=int, default=None)
    p_run.add_argument("--t-end", dest="t_end", type=float, default=None)
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--out", default=None)
    p_run.add_argument("--snapshots", action="store_true")
    p_run.set_defaults(func=cmd_run)

    p_ver = sub.add_parser("verify", help="run a named verification suite")
    p_ver.add_argument("--suite", required=True,
                       choices=list(SUITE_NAMES) + ["all"])
    p_ver.add_argument("--seed", type=int, default=1)
    p_ver.add_argument("--mx", type=int, default=None)
    p_ver.add_argument("--alpha", type=float, default=None)
    p_ver.add_argument("--out", default=None)
    p_ver.set_defaults(func=cmd_verify)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
