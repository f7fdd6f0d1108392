"""Command-line interface: ``tiltspdc {jsa,analyze,sweep,scan,solve-xi}``."""
import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import io as tio
from .analysis import DEFAULT_MASK, FitError, SchmidtError, classify_regime, fit_gaussian, schmidt_decompose
from .biphoton import BiphotonSource, SupportError, marginals
from .config import ConfigError, load_config
from .dispersion import DispersionDomainError
from .phasematch import PhaseMatchingError
from .scan import ScanFormatError, format_scan, ingest_scan, simulate_scan
from .sweep import SolveError, solve_xi_for_regime, sweep_xi

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

log = logging.getLogger("tiltspdc")


class InputError(ValueError):
    pass


def _overrides(args):
    o = {}

    def put(section, key, value):
        if value is not None:
            o.setdefault(section, {})[key] = value

    put("tilt", "xi_deg", args.xi)
    put("pump", "fwhm_nm", args.pump_fwhm)
    put("crystal", "length_mm", args.length)
    put("grid", "n_s", args.n)
    put("grid", "n_i", args.n)
    put("grid", "span_s_nm", args.span_s)
    put("grid", "span_i_nm", args.span_i)
    put("sweep", "xi_min_deg", args.xi_min)
    put("sweep", "xi_max_deg", args.xi_max)
    put("sweep", "steps", args.steps)
    put("sweep", "n_jobs", args.jobs)
    if args.seed is not None:
        o["rng_seed"] = args.seed
        put("scan", "rng_seed", args.seed)
    if args.out is not None:
        o["out"] = args.out
    if getattr(args, "target", None) is not None:
        o["solve_target"] = args.target
    return o


def _source(cfg):
    tilt = cfg.tilt_config()
    src = BiphotonSource(cfg.crystal, cfg.pump, tilt.xi_deg, tuple(sorted(tilt.applied_to)))
    return src.fit()


def cmd_jsa(cfg):
    grid = _source(cfg).joint_spectrum(cfg.grid)
    paths = tio.write_jsa_outputs(grid, cfg.out, cfg.config_hash())
    return {"files": [str(p) for p in paths], "grid_hash": grid.grid_hash}


def analysis_report(grid, mask=DEFAULT_MASK):
    fit = fit_gaussian(grid, mask)
    sch = schmidt_decompose(grid)
    report = {
        "fit": fit.as_dict(),
        "schmidt": sch.as_dict(),
        "regime": classify_regime(fit),
        "intensity_only": grid.intensity_only,
        "grid_hash": grid.grid_hash,
    }
    if grid.intensity_only:
        report["schmidt"]["assumption"] = "zero spectral phase (amplitude = sqrt of intensity)"
    try:
        m = marginals(grid)
        report["marginals"] = {"fwhm_s_nm": m.fwhm_s_nm, "fwhm_i_nm": m.fwhm_i_nm}
    except SupportError as exc:
        report["marginals"] = {"error": str(exc)}
    return report


def cmd_analyze(path, out_dir):
    path = Path(path)
    if not path.is_file():
        raise InputError(f"input file {path} does not exist")
    try:
        if tio.is_grid_csv(path):
            grid = tio.read_grid_csv(path)
        else:
            grid = ingest_scan(str(path))
            grid.metadata["scan_assumptions"] = "dark level = 5% quantile of coincidence rates"
    except UnicodeDecodeError as exc:
        raise InputError(f"{path}: not a text file ({exc.reason})") from None
    report = analysis_report(grid)
    report["input"] = path.name
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    dest = out / f"analysis_{path.stem}.yaml"
    dest.write_text(tio.dump_yaml(report), encoding="utf-8", newline="\n")
    return {"files": [str(dest)], "regime": report["regime"], "metric": report["fit"]["metric"]}


def cmd_sweep(cfg):
    s = cfg.sweep
    res = sweep_xi((s.xi_min_deg, s.xi_max_deg), s.steps, cfg.crystal, cfg.pump, cfg.grid,
                   cfg.tilt.applied_to, n_jobs=s.n_jobs)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    dest = out / f"sweep_{cfg.config_hash()}.csv"
    dest.write_text(tio.format_sweep_csv(res, cfg.config_hash()), encoding="utf-8", newline="\n")
    failed = [p.xi_deg for p in res.points if p.error]
    return {"files": [str(dest)], "xi_uncorr": res.xi_uncorr, "failed_xi": failed}


def cmd_scan(cfg):
    grid = _source(cfg).joint_spectrum(cfg.grid)
    records = simulate_scan(grid, cfg.scan)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    dest = out / f"{tio.artifact_stem('scan', grid.metadata['xi_deg'], grid.grid_hash)}_seed{cfg.scan.rng_seed}.csv"
    note = (f"config_hash={cfg.config_hash()} bandpass_fwhm_nm={cfg.scan.bandpass_fwhm_nm} "
            f"integration_time_s={cfg.scan.integration_time_s} (assumed values)")
    dest.write_text(format_scan(records, note), encoding="utf-8", newline="\n")
    return {"files": [str(dest)], "n_points": len(records)}


def cmd_solve(cfg):
    target = cfg.solve_target
    try:
        target = float(target)
    except (TypeError, ValueError):
        pass
    xi = solve_xi_for_regime(target, cfg.crystal, cfg.pump, cfg.grid, applied_to=cfg.tilt.applied_to)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    dest = out / f"solve_{cfg.config_hash()}.yaml"
    dest.write_text(tio.dump_yaml({"target": target, "xi_deg": xi, "config_hash": cfg.config_hash()}),
                    encoding="utf-8", newline="\n")
    return {"files": [str(dest)], "xi_deg": xi}


def build_parser():
    p = argparse.ArgumentParser(prog="tiltspdc", description="Tilt-engineered down-conversion spectra.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="YAML run configuration")
        sp.add_argument("--preset", help="shipped configuration: fig3a, fig3c, fig3e, fig3g or fig4")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out")
        sp.add_argument("--xi", type=float, help="pulse-front tilt, deg")
        sp.add_argument("--pump-fwhm", type=float, help="pump FWHM, nm")
        sp.add_argument("--length", type=float, help="crystal length, mm")
        sp.add_argument("--n", type=int, help="grid points per axis")
        sp.add_argument("--span-s", type=float, help="signal half-span, nm")
        sp.add_argument("--span-i", type=float, help="idler half-span, nm")
        sp.add_argument("--xi-min", type=float)
        sp.add_argument("--xi-max", type=float)
        sp.add_argument("--steps", type=int)
        sp.add_argument("--jobs", type=int)
        return sp

    common(sub.add_parser("jsa", help="compute and export a joint spectrum"))
    a = sub.add_parser("analyze", help="fit and Schmidt-decompose a grid or scan CSV")
    a.add_argument("input")
    a.add_argument("--out", default="out")
    common(sub.add_parser("sweep", help="sweep the tilt angle"))
    common(sub.add_parser("scan", help="simulate a coincidence scan"))
    s = common(sub.add_parser("solve-xi", help="find the tilt for a target regime"))
    s.add_argument("--target", help="uncorrelated, anticorrelated, symmetric or a value of r")
    return p


_CONFIG_ERRORS = (ConfigError, InputError, ScanFormatError, tio.GridFormatError)
_NUMERIC_ERRORS = (SupportError, FitError, SchmidtError, SolveError, PhaseMatchingError,
                   DispersionDomainError, np.linalg.LinAlgError, FloatingPointError, ArithmeticError)


def _fail(code, exc):
    line = {"status": "error", "exit_code": code, "error": type(exc).__name__, "message": str(exc)}
    print(json.dumps(line), file=sys.stderr)
    return code


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "analyze":
            result = cmd_analyze(args.input, args.out)
        else:
            cfg = load_config(args.config, args.preset, _overrides(args))
            result = {"jsa": cmd_jsa, "sweep": cmd_sweep, "scan": cmd_scan, "solve-xi": cmd_solve}[args.command](cfg)
    except _NUMERIC_ERRORS as exc:
        return _fail(EXIT_NUMERIC, exc)
    except _CONFIG_ERRORS as exc:
        return _fail(EXIT_CONFIG, exc)
    except ValueError as exc:
        # remaining validation errors raised while building sub-configs
        return _fail(EXIT_CONFIG, exc)
    print(json.dumps(tio.plain({"status": "ok", **result})))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
