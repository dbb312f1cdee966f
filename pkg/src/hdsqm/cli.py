"""Command-line runner: figures, verification suites, and single experiments."""
import argparse
import csv
import io
import json
import os
import sys

import numpy as np

from . import actionangle as aa
from . import config as cf
from . import dynamics as dy
from . import experiments as ex
from . import spectra as sp
from . import wavefunctions as wf
from ._backend import NAME as BACKEND

FIGURE_DEFAULTS = {
    "fig1": {"experiment": "fig1",
             "model": {"kind": "pure", "potential": "quartic", "omega": 1.0, "lam": 1.0},
             "initial": {"N": 1.0, "A": 0.0, "B": 1.0},
             "integrator": {"t_end": 60.0}},
    "fig2": {"experiment": "fig2"},
    "fig4": {"experiment": "fig4",
             "model": {"kind": "mixed", "potential": "quartic", "omega": 0.0, "lam": 1.0,
                       "gamma": 0.1},
             "initial": {"N": 1.0, "A": 0.0, "B": 1.0},
             "integrator": {"t_end": 500.0}},
}


def _merge(base, over):
    out = dict(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def load_config(path, base=None, seed=None, out=None):
    data = dict(base or {})
    if path is not None:
        with open(path) as fh:
            try:
                user = json.load(fh)
            except json.JSONDecodeError as exc:
                raise cf.ConfigError(f"{path}: invalid JSON: {exc}") from exc
        if not isinstance(user, dict):
            raise cf.ConfigError(f"{path}: expected a JSON object")
        data = _merge(data, user)
    if seed is not None:
        data["seed"] = seed
    if out is not None:
        data = _merge(data, {"output": {"dir": out}})
    return cf.from_dict(data)


def _csv_text(writer):
    buf = io.StringIO()
    writer(buf)
    return buf.getvalue()


def _json_text(obj):
    return json.dumps(_plain(obj), indent=2, sort_keys=True) + "\n"


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if np.isfinite(v) else str(v)
    return obj


class Writer:
    """Collects written paths; every file goes through an atomic rename."""

    def __init__(self, outdir):
        self.outdir = outdir
        self.paths = []

    def text(self, name, text):
        self.paths.append(cf.atomic_write(os.path.join(self.outdir, name), text))

    def binary(self, name, data):
        self.paths.append(cf.atomic_write(os.path.join(self.outdir, name), data))


def _trajectory_csv(traj):
    if traj.model.kind != "twodot":
        return _csv_text(lambda fh: dy.write_trajectory_csv(traj, fh))

    def write(fh):
        w = csv.writer(fh)
        w.writerow(["t"] + list(traj.model.columns))
        for t, y in zip(traj.t, traj.y):
            w.writerow([repr(float(t))] + [repr(float(v)) for v in y])
    return _csv_text(write)


def run_figure(name, cfg, writer, parallel=False):
    if name == "fig1":
        traj, summary = ex.figure_fig1(cfg)
        writer.text("fig1.csv", _trajectory_csv(traj))
    elif name == "fig2":
        curves, summary = ex.figure_fig2(cfg, parallel)
        writer.text("fig2.csv", _csv_text(lambda fh: aa.write_e1_csv(fh, curves)))
    elif name == "fig4":
        traj, summary = ex.figure_fig4(cfg)
        writer.text("fig4.csv", _trajectory_csv(traj))
    else:
        raise ValueError(f"unknown figure {name!r}")
    summary["seed"] = cfg.seed
    writer.text(f"{name}.json", _json_text(summary))
    return summary


def run_suite(name, cfg, writer, parallel=False):
    report = ex.SUITES[name](cfg, parallel)
    report["seed"] = cfg.seed
    report["backend"] = BACKEND
    writer.text(f"suite_{name}.json", _json_text(report))
    return report


def run_simulate(cfg, writer):
    model = ex.build_model(cfg.model)
    s0 = ex.initial_state(cfg, model)
    traj = ex._integrate(cfg, model, s0)
    out = ex.resampled(traj, cfg.integrator.samples_per_unit)
    writer.text("trajectory.csv", _trajectory_csv(out))
    summary = {"status": traj.status, "model": model.kind, "potential": list(model.V.coeffs),
               "gamma": model.gamma, "initial_state": s0, "t_end": float(traj.t[-1]),
               "n_steps": len(traj) - 1, "n_rejected": traj.n_rejected, "seed": cfg.seed}
    if traj.blowup:
        summary["t_star"] = traj.t_star
        summary["t_bracket"] = list(traj.t_bracket)
    for k in traj.charges:
        summary[f"{k}_drift"] = traj.charge_drift(k)
    writer.text("simulate.json", _json_text(summary))
    return summary


def run_spectrum(cfg, writer):
    s = cfg.spectrum
    levels = sp.mixed_spectrum(s.omega, s.gamma, s.j_max, s.k_max, convention=s.convention)
    writer.text("spectrum.csv", _csv_text(levels.write_csv))
    gaps = ex.min_gap_ladder(s.omega, s.gamma, list(s.truncations), s.convention)
    summary = {"status": "PASS", "omega": s.omega, "gamma": s.gamma,
               "tau": 2 * s.omega / s.gamma, "convention": s.convention,
               "omega1": levels.meta["omega1"], "omega2": levels.meta["omega2"],
               "n_levels": len(levels), "min_gap": sp.gap_statistics(levels)["min_gap"],
               "min_gap_by_truncation": dict(zip(map(str, s.truncations), gaps)), "seed": cfg.seed}
    writer.text("spectrum.json", _json_text(summary))
    return summary


def run_quantize(cfg, writer):
    q = cfg.quantize
    Ns = np.asarray(q.N_values, dtype=float)
    curves = [(float(o), float(l), Ns) for o, l in q.curves]
    writer.text("e1.csv", _csv_text(lambda fh: aa.write_e1_csv(fh, curves)))
    m = cfg.model
    levels = aa.continuum_level_set(m.omega, m.lam, cfg.initial.N, q.n_max)
    writer.text("levels.csv", _csv_text(levels.write_csv))
    summary = {"status": "PASS", "omega": m.omega, "lambda": m.lam, "N": cfg.initial.N,
               "sigma": aa.sigma_of_N(m.omega, m.lam, cfg.initial.N),
               "isolated": levels.meta.get("isolated", []), "seed": cfg.seed}
    if q.grid:
        V = ex.build_potential(m)
        e = wf.quantized_eigen_data(q.level, cfg.initial.N, V)
        g = wf.psi_grid(e, V, cfg.grid.nx, cfg.grid.ny, cfg.grid.L)
        writer.text("psi.csv", _csv_text(g.write_csv))
        if cfg.output.binary:
            writer.binary("psi.bin", g.to_bytes())
        summary.update({"E": e.E, "singular_columns": int(g.singular.sum())})
    writer.text("quantize.json", _json_text(summary))
    return summary


def build_parser():
    p = argparse.ArgumentParser(prog="hdsqm", description=__doc__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment config")
    common.add_argument("--out", help="output directory (overrides output.dir)")
    common.add_argument("--seed", type=int, help="RNG seed (unsigned 64-bit)")
    common.add_argument("--parallel", action="store_true", help="run independent pieces in worker processes")
    sub = p.add_subparsers(dest="command", required=True)
    f = sub.add_parser("figure", parents=[common], help="reproduce a figure as CSV + JSON")
    f.add_argument("name", choices=sorted(FIGURE_DEFAULTS))
    s = sub.add_parser("suite", parents=[common], help="run a verification suite")
    s.add_argument("name", choices=sorted(ex.SUITES))
    sub.add_parser("simulate", parents=[common], help="integrate one trajectory")
    sub.add_parser("spectrum", parents=[common], help="mixed-model level set")
    sub.add_parser("quantize", parents=[common], help="quantized levels and E1(N)")
    c = sub.add_parser("config", parents=[common], help="print the effective config")
    c.add_argument("--schema", action="store_true", help="print key types and defaults instead")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    base = FIGURE_DEFAULTS[args.name] if args.command == "figure" else {}
    try:
        cfg = load_config(args.config, base, args.seed, args.out)
    except (cf.ConfigError, OSError) as exc:
        print(f"hdsqm: config error: {exc}", file=sys.stderr)
        return 2
    if args.command == "config":
        print(json.dumps(cf.schema(), indent=2) if args.schema else cfg.dumps(), end="\n" if args.schema else "")
        return 0
    writer = Writer(cfg.output.dir)
    if args.command == "figure":
        result = run_figure(args.name, cfg, writer, args.parallel)
    elif args.command == "suite":
        result = run_suite(args.name, cfg, writer, args.parallel)
    elif args.command == "simulate":
        result = run_simulate(cfg, writer)
    elif args.command == "spectrum":
        result = run_spectrum(cfg, writer)
    else:
        result = run_quantize(cfg, writer)
    for path in writer.paths:
        print(path)
    print(f"status: {result['status']}")
    if args.command == "suite":
        return 1 if result["status"] == "FAIL" else 0
    return 0


if __name__ == "__main__":
    sys.exit(main())
