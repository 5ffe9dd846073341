"""Command-line front end: one verb per figure-level experiment.

Exit codes: 0 success, 2 configuration or missing-input error, 3 numerical
failure.
"""
from __future__ import annotations

import argparse
import copy
import hashlib
import json
import platform
import re
import secrets
import sys
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .interference import (ConvergenceError, closed_form_singlet, detune_scan, hom_trace,
                           write_scan_csv, write_trace_csv)
from .poling import (CrystalSpec, LinearDispersion, pmf_from_domains, pmf_to_frequency,
                     read_domains, target_tracking, track_domains, write_domains, write_pmf_csv)
from .schmidt import NormalizationError, decompose, schmidt_number, write_decomposition
from .spectral import (GridError, PmfProfile, PumpProfile, SupportError, assemble_jsa,
                       ideal_singlet_jsa, make_grid, read_jsa_csv, write_intensity_csv,
                       write_jsa_csv)
from .spectrometer import (RangeError, SpectrometerConfig, effective_jsa, effective_schmidt_number,
                           expected_counts, mc_schmidt_error, read_counts, rebin, simulate_counts,
                           write_counts, write_mc_result)
from .swap import (BellLabel, SwapModel, fourfold_trace, local_maxima, mixed_jsi,
                   raw_visibility, swapped_jsa, write_report)
from .fock import enumerate_swap_rates

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

DEFAULTS = {
    "grid": {"center_s": 0.0, "center_i": 0.0, "span": 12.0, "n_points": 256},
    "source": {"sigma": 1.0, "pump": "gaussian", "pmf": "hg1_gaussian", "mu": 0.0},
    "crystal": {"L_mm": 30.0, "l_mm": 0.0231, "sigma_x_mm": 6.0, "dk_points": 2001,
                "dk_halfwidth": 30.0},
    "hom": {"delay_min": -6.0, "delay_max": 6.0, "n_delays": 241},
    "detune": {"mu_over_sigma": [0.0, 0.5, 1.0, 2.0, 3.0], "span": 16.0, "n_points": 256,
               "delay_extent": 20.0, "n_delays": 401},
    "swap": {"sigma_a": 1.0, "sigma_b": 1.0, "pair_prob_a": 0.01, "pair_prob_b": 0.01,
             "mixture_weights": [1.0, 1.0, 1.0, 2.0]},
    "spectrometer": {"sigma": 1.13, "n_points": 1024, "span_sigmas": 12.0,
                     "scale_pm_per_ps": 2.94, "center_wavelength": 1550.0, "bin_ps": 1.0,
                     "n_bins": 12250, "rebin_factor": 40, "total_counts": 2.8e6,
                     "jitter_ps": 0.0},
    "mc": {"n_runs": 1000},
}
STOCHASTIC = {"spectrometer", "mc"}


class ConfigError(ValueError):
    pass


class MissingInput(ConfigError):
    pass


def _line_of(text: str, key: str) -> int:
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    return text.count("\n", 0, m.start()) + 1 if m else 0


def load_config(path) -> dict:
    """Merge a JSON config over the defaults, rejecting unknown keys."""
    if path is None:
        return copy.deepcopy(DEFAULTS)
    text = Path(path).read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: {exc.msg}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be an object")
    merged = {}
    for block, values in raw.items():
        if block not in DEFAULTS:
            raise ConfigError(f"{path}:{_line_of(text, block)}: unknown block '{block}'")
        if not isinstance(values, dict):
            raise ConfigError(f"{path}:{_line_of(text, block)}: block '{block}' must be an object")
        for key in values:
            if key not in DEFAULTS[block]:
                raise ConfigError(f"{path}:{_line_of(text, key)}: unknown key '{block}.{key}'")
        merged[block] = {**DEFAULTS[block], **values}
    merged["_present"] = sorted(raw)
    merged["_explicit"] = True
    return merged


def block(cfg: dict, name: str, required: bool = False) -> dict:
    """Return a config block; ``required`` blocks must be spelled out in a config file."""
    if name in cfg:
        return cfg[name]
    if required and cfg.get("_explicit"):
        raise ConfigError(f"config has no '{name}' block")
    return copy.deepcopy(DEFAULTS[name])


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(out: Path, command: str, cfg: dict, seed, outputs, inputs=()):
    canon = json.dumps({k: v for k, v in cfg.items() if not k.startswith("_")}, sort_keys=True)
    manifest = {
        "command": command,
        "config_sha256": hashlib.sha256(canon.encode()).hexdigest(),
        "config": json.loads(canon),
        "seed": seed,
        "inputs": {Path(p).name: _sha256(p) for p in inputs},
        "outputs": {Path(p).name: _sha256(p) for p in outputs},
        "versions": {"pulsemode": __version__, "python": platform.python_version(),
                     "numpy": np.__version__, "scipy": scipy.__version__},
    }
    path = out / f"manifest_{command}.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def gnuplot_hint(out: Path, name: str, csv: str, kind: str) -> Path:
    path = out / f"{name}.gp"
    if kind == "map":
        body = (f"set datafile separator ','\nset view map\n"
                f"splot '{csv}' every ::2 using 1:2:3 with image\n")
    else:
        body = f"set datafile separator ','\nplot '{csv}' every ::1 using 1:2 with linespoints\n"
    path.write_text(body)
    return path


def _grid(cfg):
    g = block(cfg, "grid")
    return make_grid(g["center_s"], g["center_i"], g["span"], g["n_points"])


def _crystal(cfg, required=False):
    c = block(cfg, "crystal", required)
    spec = CrystalSpec.from_nominal(c["L_mm"], c["l_mm"], c["sigma_x_mm"])
    dk = spec.dk0 + np.linspace(-1.0, 1.0, int(c["dk_points"])) * c["dk_halfwidth"] / spec.sigma_x
    return spec, dk


def cmd_engineer(cfg, args, out):
    spec, dk = _crystal(cfg, required=True)
    nominal = block(cfg, "crystal", True)["l_mm"]
    if spec.domain_width_l != nominal:
        print(f"domain width adjusted {nominal:.17g} -> {spec.domain_width_l:.17g} mm "
              f"so that L/l = {spec.n_domains}")
    seq = track_domains(spec)
    acc = seq.accumulated()
    goal = 1j * target_tracking(spec.boundaries, spec)
    dev = np.abs(acc - goal)
    phi = pmf_from_domains(seq, dk)
    write_domains(seq, out / "domains.txt")
    write_pmf_csv(dk, phi, out / "pmf.csv")
    print(f"domains={spec.n_domains} max_tracking_dev={dev.max():.6g} "
          f"step={spec.step_magnitude:.6g} final_dev={dev[-1]:.6g} "
          f"|PMF(dk0)|/max={abs(pmf_from_domains(seq, [spec.dk0])[0]) / np.abs(phi).max():.4g}")
    outs = [out / "domains.txt", out / "pmf.csv"]
    if args.gnuplot_hints:
        outs.append(gnuplot_hint(out, "pmf", "pmf.csv", "line"))
    return outs, []


def cmd_jsa(cfg, args, out):
    src = block(cfg, "source")
    grid = _grid(cfg)
    pump = PumpProfile(src["pump"], src["sigma"])
    inputs = []
    if src["pmf"] == "crystal":
        spec, dk = _crystal(cfg)
        dom = out / "domains.txt"
        if not dom.exists():
            raise MissingInput(f"{dom} not found; run 'engineer' first")
        seq = read_domains(dom, spec.sigma_x)
        samples = pmf_from_domains(seq, dk)
        pmf = pmf_to_frequency(samples, dk, LinearDispersion.matched(seq.spec, src["sigma"]), grid)
        pmf = PmfProfile(pmf.kind, pmf.sigma, src["mu"], pmf.samples, pmf.axis)
        inputs.append(dom)
    elif src["pmf"] == "hg1_gaussian":
        pmf = PmfProfile("hg1_gaussian", src["sigma"], src["mu"])
    else:
        raise ConfigError(f"unknown source.pmf '{src['pmf']}'")
    f = assemble_jsa(pump, pmf, grid)
    write_jsa_csv(f, out / "jsa.csv")
    print(f"jsa written: grid {grid.n_points}^2, span {grid.span}")
    outs = [out / "jsa.csv"]
    if args.gnuplot_hints:
        write_intensity_csv(grid, f.intensity, out / "jsi.csv")
        outs += [out / "jsi.csv", gnuplot_hint(out, "jsi", "jsi.csv", "map")]
    return outs, inputs


def _upstream_jsa(out):
    path = out / "jsa.csv"
    if not path.exists():
        raise MissingInput(f"{path} not found; run 'jsa' first")
    return read_jsa_csv(path), path


def cmd_schmidt(cfg, args, out):
    f, src = _upstream_jsa(out)
    d = decompose(f)
    K = schmidt_number(d)
    paths = write_decomposition(d, out)
    top = ", ".join(f"{p:.6f}" for p in d.weights[:4])
    print(f"K={K:.6f} weights=[{top}, ...]")
    return list(paths), [src]


def _delays(cfg):
    h = block(cfg, "hom")
    return np.linspace(h["delay_min"], h["delay_max"], int(h["n_delays"]))


def cmd_hom(cfg, args, out):
    f, src = _upstream_jsa(out)
    delays = _delays(cfg)
    trace = hom_trace(f, delays)
    write_trace_csv(trace, out / "hom.csv")
    sigma = block(cfg, "source")["sigma"]
    dev = np.max(np.abs(trace.p_cc - closed_form_singlet(sigma, delays).p_cc))
    print(f"pcc(0)={np.interp(0.0, delays, trace.p_cc):.9f} "
          f"max_dev_vs_singlet_closed_form={dev:.3e}")
    outs = [out / "hom.csv"]
    if args.gnuplot_hints:
        outs.append(gnuplot_hint(out, "hom", "hom.csv", "line"))
    return outs, [src]


def cmd_detune(cfg, args, out):
    sigma = block(cfg, "source")["sigma"]
    d = block(cfg, "detune")
    grid = make_grid(0.0, 0.0, d["span"] * sigma, int(d["n_points"]))
    ext = d["delay_extent"] / sigma
    delays = np.linspace(-ext, ext, int(d["n_delays"]))
    rows = detune_scan(sigma, [m * sigma for m in d["mu_over_sigma"]], grid, delays)
    write_scan_csv(rows, out / "detune.csv")
    for r in rows:
        print(f"mu={r.mu:.4g} K={r.K:.6f} pcc0={r.pcc0:.6f} V={r.V:.6f}")
    outs = [out / "detune.csv"]
    if args.gnuplot_hints:
        outs.append(gnuplot_hint(out, "detune", "detune.csv", "line"))
    return outs, []


def cmd_swap(cfg, args, out):
    s = block(cfg, "swap")
    model = SwapModel(s["sigma_a"], s["sigma_b"], s["pair_prob_a"], s["pair_prob_b"],
                      s["mixture_weights"])
    grid = _grid(cfg)
    mixed = mixed_jsi(model, grid)
    post = swapped_jsa(BellLabel.PSI_MINUS, model.source_sigma_a, grid)
    write_intensity_csv(grid, mixed, out / "mixed_jsi.csv")
    write_intensity_csv(grid, post.intensity, out / "swapped_jsi.csv")
    raw = fourfold_trace(model)
    corrected = fourfold_trace(model, subtract_background=True)
    write_trace_csv(raw, out / "fourfold_raw.csv")
    write_trace_csv(corrected, out / "fourfold_corrected.csv")
    oracle = enumerate_swap_rates(model.pair_prob_a, model.pair_prob_b)
    report = {
        "raw_visibility": raw_visibility(model),
        "corrected_visibility": raw_visibility(model, subtract_background=True),
        "background_ratio": model.background_ratio,
        "oracle_background_ratio": oracle.background_ratio,
        "oracle_raw_visibility": oracle.raw_visibility,
        "mixed_jsi_maxima": len(local_maxima(mixed)),
        "swapped_jsi_maxima": len(local_maxima(post.intensity)),
    }
    write_report(report, out / "swap_report.txt")
    for k, v in report.items():
        print(f"{k}={v}")
    outs = [out / n for n in ("mixed_jsi.csv", "swapped_jsi.csv", "fourfold_raw.csv",
                              "fourfold_corrected.csv", "swap_report.txt")]
    if args.gnuplot_hints:
        outs += [gnuplot_hint(out, "mixed_jsi", "mixed_jsi.csv", "map"),
                 gnuplot_hint(out, "fourfold_raw", "fourfold_raw.csv", "line")]
    return outs, []


def _spectrometer_config(s) -> SpectrometerConfig:
    return SpectrometerConfig(s["scale_pm_per_ps"], s["center_wavelength"], s["bin_ps"],
                              int(s["n_bins"]), int(s["rebin_factor"]), s["total_counts"],
                              s["jitter_ps"])


def cmd_spectrometer(cfg, args, out):
    s = block(cfg, "spectrometer")
    conf = _spectrometer_config(s)
    sigma = s["sigma"]
    grid = make_grid(0.0, 0.0, s["span_sigmas"] * sigma, int(s["n_points"]))
    intensity = ideal_singlet_jsa(sigma, grid).intensity
    raw = simulate_counts(intensity, conf, args.seed, grid=grid)
    m = rebin(raw, conf.rebin_factor)
    write_counts(m, out / "counts.csv")
    K = schmidt_number(decompose(effective_jsa(m)))
    noiseless = expected_counts(intensity, grid, conf, conf.rebin_factor)
    K0 = effective_schmidt_number(noiseless)
    print(f"events={raw.total} rebinned={m.shape} dropped={m.dropped} K={K:.6f} "
          f"noiseless_K={K0:.6f} range_nm={conf.spectral_range_nm:.3f}")
    return [out / "counts.csv", out / "counts.csv.header"], []


def cmd_mc(cfg, args, out):
    path = out / "counts.csv"
    if not path.exists():
        raise MissingInput(f"{path} not found; run 'spectrometer' first")
    m = read_counts(path)
    n_runs = int(block(cfg, "mc")["n_runs"])
    res = mc_schmidt_error(m, n_runs, args.seed)
    write_mc_result(res, out / "mc.txt")
    lo, hi = res.interval_3sigma
    print(f"K={res.point_K:.6f} mean={res.mean_K:.6f} sigma={res.sigma_K:.3e} "
          f"3sigma=[{lo:.6f}, {hi:.6f}] runs={res.n_runs}")
    return [out / "mc.txt"], [path]


COMMANDS = {
    "engineer": cmd_engineer, "jsa": cmd_jsa, "schmidt": cmd_schmidt, "hom": cmd_hom,
    "detune": cmd_detune, "swap": cmd_swap, "spectrometer": cmd_spectrometer, "mc": cmd_mc,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None, help="JSON experiment file")
    common.add_argument("--seed", type=int, default=None, help="seed for stochastic commands")
    common.add_argument("--out", type=Path, default=Path("."), help="output directory")
    common.add_argument("--threads", type=int, default=None, help="BLAS thread limit")
    common.add_argument("--gnuplot-hints", action="store_true",
                        help="also write gnuplot scripts next to the CSV output")
    parser = argparse.ArgumentParser(prog="pulsemode", parents=[common],
                                     description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], argument_default=argparse.SUPPRESS)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = load_config(args.config)
    except (OSError, ConfigError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.command in STOCHASTIC and args.seed is None:
        args.seed = secrets.randbelow(2 ** 31)
        print(f"no --seed given; using {args.seed} (recorded in the manifest)", file=sys.stderr)
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    try:
        if args.threads:
            from threadpoolctl import threadpool_limits
            with threadpool_limits(limits=args.threads):
                outputs, inputs = COMMANDS[args.command](cfg, args, out)
        else:
            outputs, inputs = COMMANDS[args.command](cfg, args, out)
    except (ConfigError, GridError, SupportError, RangeError, NormalizationError,
            KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConvergenceError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    seed = args.seed if args.command in STOCHASTIC else None
    write_manifest(out, args.command, cfg, seed, outputs, inputs)
    return EXIT_OK


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
