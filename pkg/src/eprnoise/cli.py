"""Command-line front end.

    eprnoise spectrum --config fig2_left.cfg --angles 0,pi --out spectrum.csv
    eprnoise sweep    --config fig2_middle.cfg --out sweep.csv
    eprnoise fit-loss data.csv --dark-noise-db -10
    eprnoise clf      --config fig2_middle.cfg
    eprnoise validate --config my.cfg

Exit codes: 0 success, 1 usage/config/I-O error, 2 numerical failure.
Every CSV starts with a ``#`` comment line (tool version and input hash)
followed by a header row; numbers carry 6 significant digits.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    DEFAULT_OPO_HWHM,
    DEFAULT_THRESHOLD_MW,
    LossFitInput,
    LossRecord,
    clf_reflection_error,
    clf_transmission_error,
    fit_detection_loss,
    methods_loss_oracle,
)
from .config import ExperimentConfig, bundled_configs, dump_config, parse_config, parse_number
from .errors import ConfigError, EprNoiseError, InvalidArgument, NumericalError
from .network import build_covariance
from .readout import angle_sweep, to_db, wiener_conditional


EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2


# --- formatting ---------------------------------------------------------------


def fmt(v: float) -> str:
    v = float(v)
    if abs(v) < 1e-12:
        v = 0.0  # also folds -0.0
    return f"{v:.6g}"


def _hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


def render_csv(header: list[str], rows, source_hash: str) -> str:
    buf = io.StringIO()
    buf.write(f"# eprnoise {__version__} input_sha256={source_hash}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([c if isinstance(c, str) else fmt(c) for c in row])
    return buf.getvalue()


def parse_angles(text: str) -> list[float]:
    try:
        return [float(parse_number(t)) for t in text.split(",")]
    except ValueError as exc:
        raise InvalidArgument(f"--angles: {exc}") from None


def parse_band(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(parse_number(t)) for t in text.split(":"))
    except ValueError:
        raise InvalidArgument(f"--band expects FMIN:FMAX in Hz, got {text!r}") from None
    if not 0 <= lo < hi:
        raise InvalidArgument(f"--band needs 0 <= FMIN < FMAX, got {text!r}")
    return lo, hi


# --- commands -----------------------------------------------------------------


def cmd_spectrum(cfg: ExperimentConfig, angles, bands=None) -> str:
    """Combined-readout spectrum in dB, one column per readout angle."""
    s = build_covariance(cfg)
    r = cfg.readout
    res = angle_sweep(s, r.signal_lo_phase_rad, angles, r.signal_gain, r.idler_gain, r.combiner_sign)
    columns = [res.variance[:, k] for k in range(len(angles))]
    header = [f"variance_db[phi_i={fmt(a)}]" for a in angles]
    if r.combiner == "wiener":
        columns.append(wiener_conditional(s, r.signal_lo_phase_rad).variance)
        header.append("wiener_db")
    lin = np.column_stack(columns)
    f = s.grid.freq_hz
    if not bands:
        rows = ([fi, *to_db(v)] for fi, v in zip(f, lin))
        return render_csv(["frequency_hz", *header], rows, _hash(dump_config(cfg)))
    rows = []
    for lo, hi in bands:
        sel = (f >= lo) & (f <= hi)
        if not np.any(sel):
            raise InvalidArgument(f"band {fmt(lo)}:{fmt(hi)} Hz contains no grid points")
        rows.append([lo, hi, *to_db(lin[sel].mean(axis=0))])
    return render_csv(["band_lo_hz", "band_hi_hz", *header], rows, _hash(dump_config(cfg)))


def cmd_sweep(cfg: ExperimentConfig) -> str:
    """Long-format heatmap: frequency_hz, readout_angle_rad, variance_db."""
    s = build_covariance(cfg)
    r = cfg.readout
    res = angle_sweep(s, r.signal_lo_phase_rad, r.angles(), r.signal_gain, r.idler_gain,
                      r.combiner_sign)
    db = res.variance_db
    rows = (
        (f, a, db[i, j])
        for i, f in enumerate(s.grid.freq_hz)
        for j, a in enumerate(res.angles)
    )
    return render_csv(["frequency_hz", "readout_angle_rad", "variance_db"], rows,
                      _hash(dump_config(cfg)))


def cmd_clf(cfg: ExperimentConfig) -> str:
    """CLF reflection and transmission error signals versus one swept phase."""
    c = cfg.clf
    phases = np.linspace(c.sweep_start_rad, c.sweep_stop_rad, c.sweep_count)
    p = cfg.clf_params(**{c.sweep: phases})
    e_r = np.broadcast_to(clf_reflection_error(p), phases.shape)
    e_t = np.broadcast_to(clf_transmission_error(p, locked=c.locked), phases.shape)
    return render_csv(["swept_phase_rad", "e_reflection", "e_transmission"],
                      zip(phases, e_r, e_t), _hash(dump_config(cfg)))


REQUIRED_FIT_COLUMNS = ("pump_power_mw", "v_plus_db", "v_minus_db")


def read_loss_csv(text: str, path="<data>", dark_noise_db: float | None = None) -> list[LossRecord]:
    """Parse squeezing data; optionally subtract a dark-noise floor given in dB rel. shot noise."""
    dark = 0.0 if dark_noise_db is None else 10 ** (dark_noise_db / 10)
    lines = [(n, ln) for n, ln in enumerate(text.splitlines(), start=1)
             if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise ConfigError("no data rows", path)
    header_line, header = lines[0][0], next(csv.reader([lines[0][1]]))
    header = [h.strip() for h in header]
    missing = [c for c in REQUIRED_FIT_COLUMNS if c not in header]
    if missing:
        raise ConfigError(f"missing column(s) {', '.join(missing)}", path, line=header_line)
    col = {h: i for i, h in enumerate(header)}
    records = []
    for n, ln in lines[1:]:
        cells = next(csv.reader([ln]))
        if len(cells) != len(header):
            raise ConfigError(f"expected {len(header)} fields, got {len(cells)}", path, line=n)
        try:
            vals = {h: float(cells[i]) for h, i in col.items() if h in (*REQUIRED_FIT_COLUMNS, "frequency_hz")}
        except ValueError as exc:
            raise ConfigError(f"malformed number: {exc}", path, line=n) from None
        vp = 10 ** (vals["v_plus_db"] / 10) - dark
        vm = 10 ** (vals["v_minus_db"] / 10) - dark
        if vm <= 0:
            raise ConfigError("squeezed level is below the dark-noise floor", path, line=n)
        try:
            records.append(LossRecord(vals["pump_power_mw"], vp, vm,
                                      2 * math.pi * vals.get("frequency_hz", 0.0)))
        except InvalidArgument as exc:
            raise ConfigError(str(exc), path, line=n) from None
    if not records:
        raise ConfigError("no data rows", path)
    return records


def cmd_fit_loss(data_text: str, path="<data>", threshold_mw=DEFAULT_THRESHOLD_MW,
                 float_threshold=False, dark_noise_db=None, opo_hwhm=DEFAULT_OPO_HWHM,
                 curve_points=51):
    """Returns (report text, fit-curve CSV text)."""
    records = read_loss_csv(data_text, path, dark_noise_db)
    inp = LossFitInput(records, None if float_threshold else threshold_mw, opo_hwhm)
    fit = fit_detection_loss(inp)
    report = "\n".join([
        f"detection loss       {fit.loss:.6f}",
        f"threshold power      {fit.threshold_mw:.6g} mW ({'fitted' if fit.threshold_fitted else 'fixed'})",
        "pump parameters x    " + ", ".join(f"{x:.4f}" for x in fit.x),
        f"rms residual         {fit.residual_db_rms:.3g} dB",
        f"records              {len(records)}",
        f"dark noise removed   {'none' if dark_noise_db is None else f'{dark_noise_db:g} dB rel. shot noise'}",
        f"evaluations          {fit.nfev}",
    ]) + "\n"
    p_max = min(max(r.pump_power_mw for r in records) * 1.1, 0.99 * fit.threshold_mw)
    powers = np.linspace(0.0, p_max, curve_points)
    x = np.sqrt(powers / fit.threshold_mw)
    vp, vm = methods_loss_oracle(x, fit.loss, 0.0)
    curve = render_csv(["pump_power_mw", "x", "v_plus_db", "v_minus_db"],
                       zip(powers, x, to_db(vp), to_db(vm)),
                       _hash(data_text + repr((threshold_mw, float_threshold, dark_noise_db, opo_hwhm))))
    return report, curve


# --- argument handling --------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="eprnoise", description="EPR frequency-dependent squeezing noise model")
    p.add_argument("--version", action="version", version=f"eprnoise {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, config_required=True):
        sp.add_argument("--config", required=config_required,
                        help="config file, or the name of a bundled config (e.g. fig2_left)")
        sp.add_argument("--out", help="output path (default: stdout)")

    sp = sub.add_parser("spectrum", help="combined spectrum at selected readout angles")
    common(sp)
    sp.add_argument("--angles", default="0,pi", help="comma list of idler LO phases [rad]")
    sp.add_argument("--band", action="append", default=[],
                    help="FMIN:FMAX in Hz; emit band-averaged rows instead (repeatable)")

    sp = sub.add_parser("sweep", help="heatmap over frequency and readout angle")
    common(sp)

    sp = sub.add_parser("fit-loss", help="fit total detection loss to squeezing data")
    sp.add_argument("data", help="CSV with pump_power_mw, v_plus_db, v_minus_db[, frequency_hz]")
    common(sp, config_required=False)
    sp.add_argument("--threshold-mw", type=float, default=None,
                    help=f"OPO threshold (default {DEFAULT_THRESHOLD_MW}, or opo.threshold_mw)")
    sp.add_argument("--float-threshold", action="store_true", help="fit the threshold too")
    sp.add_argument("--dark-noise-db", type=float, default=None,
                    help="dark-noise level in dB relative to shot noise, subtracted before fitting")
    sp.add_argument("--report", help="write the text report here as well as to stdout")

    sp = sub.add_parser("clf", help="CLF error signals versus the configured swept phase")
    common(sp)

    sp = sub.add_parser("validate", help="parse and check a config, print canonical form")
    common(sp)
    return p


def load_config(name: str) -> ExperimentConfig:
    path = Path(name)
    if not path.exists() and name in bundled_configs():
        path = bundled_configs()[name]
    return parse_config(path)


def _emit(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
        return
    try:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise ConfigError(f"cannot write output: {exc.strerror or exc}", out) from None


def run(args) -> int:
    if args.command == "fit-loss":
        try:
            data = Path(args.data).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read data: {exc.strerror or exc}", args.data) from None
        threshold, hwhm = DEFAULT_THRESHOLD_MW, DEFAULT_OPO_HWHM
        if args.config:
            cfg = load_config(args.config)
            if cfg.opo.threshold_mw is not None:
                threshold = cfg.opo.threshold_mw
            hwhm = 2 * math.pi * cfg.opo.hwhm_hz
        if args.threshold_mw is not None:
            threshold = args.threshold_mw
        report, curve = cmd_fit_loss(data, args.data, threshold, args.float_threshold,
                                     args.dark_noise_db, hwhm)
        sys.stdout.write(report)
        if args.report:
            _emit(report, args.report)
        if args.out:
            _emit(curve, args.out)
        return EXIT_OK

    cfg = load_config(args.config)
    if args.command == "validate":
        sys.stdout.write(dump_config(cfg))
        return EXIT_OK
    if args.command == "spectrum":
        text = cmd_spectrum(cfg, parse_angles(args.angles), [parse_band(b) for b in args.band])
    elif args.command == "sweep":
        text = cmd_sweep(cfg)
    elif args.command == "clf":
        text = cmd_clf(cfg)
    else:  # pragma: no cover - argparse restricts choices
        raise InvalidArgument(f"unknown command {args.command}")
    _emit(text, args.out)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return run(args)
    except NumericalError as exc:
        print(f"eprnoise: numerical failure: {exc}", file=sys.stderr)
        diag = getattr(exc, "diagnostics", None)
        if diag:
            print(f"eprnoise: diagnostics: {diag}", file=sys.stderr)
        return EXIT_NUMERIC
    except (EprNoiseError, ValueError) as exc:
        print(f"eprnoise: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
