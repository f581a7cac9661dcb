"""Command-line experiment runner.

Subcommands: ``spectrum`` (discrete-spectrum JSON report), ``evolve``
(survival/non-escape CSV), ``analytic`` (closed-form overlay CSV),
``compare`` (cross-validation of the evolution against the semi-analytic
routes, CSV + JSON), ``figure`` (regenerate the data behind a named
figure as one CSV per panel).

Exit codes: 0 success, 2 invalid configuration or request, 3 numerical
failure.  Data rows never carry timestamps; metadata carries one only
without ``--no-meta-time``, so repeated identical invocations with the flag
produce byte-identical files.
"""

from __future__ import annotations

import argparse
import datetime
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, analysis, closedform, io, spectrum
from .closedform import ApproximationTag, DivergenceError, DomainError, QuadratureError
from .evolve import (AmplitudeSeries, EvolveOptions, IntegratorError,
                     ProbabilitySeries, evolve, nonescape, survival)
from .model import InvalidParameterError, ModelParams, bic_state, perp_state, w_state
from .spectrum import NearPoleError, RootFindError

CONFIG_ERRORS = (InvalidParameterError, DomainError, DivergenceError, ValueError, OSError)
NUMERICAL_ERRORS = (IntegratorError, RootFindError, QuadratureError, NearPoleError)


def _parse_state(spec: str):
    """Parse 'bic' | 'perp' | 'w:<x>' into a state factory."""
    if spec == "bic":
        return "bic", lambda g, n: bic_state(g, n)
    if spec == "perp":
        return "perp", lambda g, n: perp_state(g, n)
    if spec.startswith("w:"):
        try:
            w_val = float(spec[2:])
        except ValueError as exc:
            raise InvalidParameterError(f"cannot parse w amplitude in state spec {spec!r}") from exc
        return spec, lambda g, n: w_state(g, w_val, n)
    raise InvalidParameterError(f"unknown state spec {spec!r}; use bic, perp, or w:<x>")


def _run_evolution(g: float, eps_d: float, state_spec: str, t_max: float,
                   n_samples: int, grid: str, sites: str = "auto",
                   rel_tol: float = 1e-11, abs_tol: float = 1e-13) -> tuple[AmplitudeSeries, str]:
    params = ModelParams(g=g, eps_d=eps_d)
    opts = EvolveOptions(t_max=t_max, n_samples=n_samples, grid=grid,
                         n_sites="auto" if sites == "auto" else int(sites),
                         rel_tol=rel_tol, abs_tol=abs_tol)
    label, factory = _parse_state(state_spec)
    series = evolve(params, factory(g, opts.resolved_sites()), opts)
    return series, label


# ---------------------------------------------------------------------------
# analytic curves

def _tag_curve(tag: ApproximationTag, params: ModelParams,
               ts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(values, in_window) for one closed-form tag on a positive time grid.

    Amplitude-valued forms are emitted as squared magnitudes so every row is
    on the probability scale of the figures.
    """
    g = params.g
    scales = spectrum.timescales(g)
    ones = np.ones_like(ts, dtype=bool)
    if tag is ApproximationTag.EarlyBessel:
        vals = np.abs(closedform.early_approx(ts, g)) ** 2
        window = ts <= scales.t_br
    elif tag is ApproximationTag.NearZoneAmp:
        vals = np.abs(closedform.near_zone_amp(ts, g)) ** 2
        window = (ts >= scales.t_zeno) & (ts <= scales.t_br)
    elif tag is ApproximationTag.NearZoneEarlyProb:
        vals = closedform.near_zone_prob(ts, g)
        window = (ts >= scales.t_zeno) & (ts <= scales.t_br)
    elif tag is ApproximationTag.FarZoneProb:
        vals = closedform.far_zone_prob(ts, g)
        window = ts >= 5.0 * scales.t_delta
    elif tag is ApproximationTag.BoundTerm:
        if g <= 1.0:
            raise InvalidParameterError("BoundTerm requires g > 1 (no bound states otherwise)")
        vals = np.array([closedform.bound_term(t, g) ** 2 for t in ts])
        window = ones
    elif tag is ApproximationTag.ResPolePerp:
        amp, rate = closedform.res_pole_perp(params)
        vals = amp * np.exp(-rate * ts)
        window = ones
    elif tag is ApproximationTag.ResPole1d:
        amp, rate = closedform.res_pole_1d(params)
        vals = amp * np.exp(-rate * ts)
        window = ones
    elif tag is ApproximationTag.WFarZone:
        vals = closedform.w_far_zone(ts, g)
        window = ts >= 5.0 * scales.t_delta
    elif tag is ApproximationTag.WNearZoneG1:
        if g != 1.0:
            raise InvalidParameterError("WNearZoneG1 is the g = 1 law; got g != 1")
        vals = closedform.w_near_zone_g1(ts)
        window = ts >= scales.t_zeno
    else:  # pragma: no cover - enum is closed
        raise InvalidParameterError(f"unhandled tag {tag}")
    return np.asarray(vals, dtype=float), window


def _analytic_times(t_max: float, n_samples: int, grid: str) -> np.ndarray:
    # closed forms with 1/t factors need t > 0; start the grid off zero
    if grid == "log":
        return np.geomspace(max(1e-4 * t_max, 1e-2), t_max, n_samples)
    return np.linspace(t_max / n_samples, t_max, n_samples)


# ---------------------------------------------------------------------------
# command handlers

def _cmd_spectrum(args) -> int:
    params = ModelParams(g=args.g, eps_d=args.eps_d)
    report = spectrum.spectrum_report(params)
    report["meta"] = {"tool_version": __version__}
    if not args.no_meta_time:
        report["meta"]["generated_at"] = datetime.datetime.now(
            datetime.timezone.utc).isoformat()
    io.write_json(args.out, report)
    return 0


def _cmd_evolve(args) -> int:
    series, label = _run_evolution(args.g, args.eps_d, args.state, args.tmax,
                                   args.samples, args.grid, args.sites,
                                   args.rel_tol, args.abs_tol)
    io.write_evolve_csv(args.out, series, label, __version__,
                        meta_time=not args.no_meta_time)
    return 0


def _cmd_analytic(args) -> int:
    if not args.tags:
        raise InvalidParameterError("analytic requires at least one --tags entry")
    try:
        tags = [ApproximationTag(name) for name in args.tags.split(",")]
    except ValueError as exc:
        valid = ", ".join(t.value for t in ApproximationTag)
        raise InvalidParameterError(f"{exc}; valid tags: {valid}") from exc
    params = ModelParams(g=args.g, eps_d=args.eps_d)
    ts = _analytic_times(args.tmax, args.samples, args.grid)
    rows: list[tuple[float, float, str, int]] = []
    for tag in tags:
        vals, window = _tag_curve(tag, params, ts)
        rows.extend((float(t), float(v), tag.value, int(w))
                    for t, v, w in zip(ts, vals, window))
    meta = {"g": args.g, "eps_d": args.eps_d, "t_max": args.tmax,
            "n_samples": args.samples, "grid": args.grid,
            "tags": ",".join(t.value for t in tags), "tool_version": __version__}
    io.write_analytic_csv(args.out, rows, meta, meta_time=not args.no_meta_time)
    return 0


def _compare_fits(params: ModelParams, p_perp, p_1d) -> dict:
    """Best-effort FitReports for the zones reachable on this grid."""
    fits: dict[str, dict] = {}
    scales = spectrum.timescales(params.g)
    t_max = float(p_perp.times[-1])
    near_hi = min(8.0, 0.1 * scales.t_delta) if np.isfinite(scales.t_delta) else 8.0
    try:
        fits["near_zone_phase"] = analysis.fit_phase(
            p_perp, 2.0, near_hi, detrend_exponent=-1.0).to_json_dict()
    except (analysis.TooFewPeaksError, ValueError):
        pass
    if params.g < 1.0 and np.isfinite(scales.t_delta) and t_max >= 8.0 * scales.t_delta:
        lo, hi = 5.0 * scales.t_delta, t_max
        try:
            fits["far_zone_power_law"] = analysis.fit_power_law(p_perp, lo, hi).to_json_dict()
            fits["far_zone_phase"] = analysis.fit_phase(
                p_perp, lo, hi, detrend_exponent=-3.0).to_json_dict()
        except (analysis.TooFewPeaksError, ValueError):
            pass
    elif params.g == 1.0 and t_max > 20.0:
        try:
            fits["near_zone_power_law"] = analysis.fit_power_law(
                p_perp, 5.0, t_max).to_json_dict()
        except (analysis.TooFewPeaksError, ValueError):
            pass
    if params.eps_d != 0.0 and t_max >= 40.0:
        hi = min(60.0, t_max)
        for name, series in (("shelf_1d", p_1d), ("shelf_perp", p_perp)):
            t_tr, v_tr = analysis.find_troughs(series, 15.0, hi)
            if len(t_tr) >= 4 and np.all(v_tr > 0):
                trough_series = analysis.ProbabilitySeries(times=t_tr, values=v_tr)
                fits[name] = analysis.fit_exponential(
                    trough_series, float(t_tr[0]), float(t_tr[-1])).to_json_dict()
    return fits


def _cmd_compare(args) -> int:
    series, label = _run_evolution(args.g, args.eps_d, "perp", args.tmax,
                                   args.samples, "linear", args.sites,
                                   args.rel_tol, args.abs_tol)
    params = series.params
    ts = series.times
    a_ode = series.overlap
    header = ["t", "re_A_ode", "im_A_ode"]
    columns = [ts, a_ode.real, a_ode.imag]
    deviations: dict[str, float] = {}

    has_bound = params.eps_d != 0.0 and any(
        s.kind is spectrum.StateKind.Bound
        for s in spectrum.discrete_spectrum(params))
    if not has_bound:
        if params.eps_d == 0.0:
            a_cut = np.array([closedform.a_br_quadrature(t, params.g) for t in ts])
            a_cut = a_cut + np.array([closedform.bound_term(t, params.g) for t in ts])
        else:
            a_cut = np.array([closedform.a_w_cut(t, params, w=0.0) for t in ts])
        header += ["re_A_cut", "im_A_cut"]
        columns += [a_cut.real, a_cut.imag]
        deviations["ode_vs_cut"] = float(np.max(np.abs(a_ode - a_cut)))
    if params.eps_d == 0.0 and params.g <= 1.0:
        a_bessel = closedform.bessel_exact_grid(ts, params.g)
        header += ["re_A_bessel", "im_A_bessel"]
        columns += [a_bessel.real, a_bessel.imag]
        deviations["ode_vs_bessel"] = float(np.max(np.abs(a_ode - a_bessel)))

    report = {
        "params": params.to_dict(),
        "state": label,
        "t_max": args.tmax,
        "n_samples": args.samples,
        "max_abs_deviation": deviations,
        "fits": _compare_fits(params, survival(series), nonescape(series)),
        "meta": {"tool_version": __version__},
    }
    out = Path(args.out)
    meta = {"g": params.g, "eps_d": params.eps_d, "t_max": args.tmax,
            "n_samples": args.samples, "tool_version": __version__}
    io.write_csv(out.with_suffix(".csv"), header, columns, meta=meta,
                 meta_time=not args.no_meta_time)
    io.write_json(out.with_suffix(".json"), report)
    return 0


# ---------------------------------------------------------------------------
# figures

def _write_fig1(outdir: Path, meta_time: bool) -> None:
    gs = np.round(np.arange(0.01, 2.0000001, 0.01), 10)
    lines = ["# figure=fig1", "# eps_d=0.0", "# g_range=0.01:2.0:0.01",
             f"# tool_version={__version__}"]
    if meta_time:
        lines.append(f"# generated_at={datetime.datetime.now(datetime.timezone.utc).isoformat()}")
    lines.append("g,z_bic,z_plus,z_minus,kind")
    for g in gs:
        zg, _ = spectrum.z_gap(float(g))
        kind = "Bound" if g > 1.0 else "VirtualBound"
        lines.append(f"{io.format_number(g)},{io.format_number(0.0)},"
                     f"{io.format_number(zg)},{io.format_number(-zg)},{kind}")
    (outdir / "fig1_spectrum.csv").write_text("\n".join(lines) + "\n")


def _write_evolve_panel(outdir: Path, name: str, g: float, eps_d: float,
                        state_spec: str, t_max: float, n_samples: int, grid: str,
                        meta_time: bool, extra_meta: dict | None = None) -> AmplitudeSeries:
    series, label = _run_evolution(g, eps_d, state_spec, t_max, n_samples, grid)
    path = outdir / f"{name}.csv"
    p_perp = np.abs(series.overlap) ** 2
    p_1d = np.abs(series.amp_1) ** 2 + np.abs(series.amp_d) ** 2
    meta = io.evolve_meta(series, label, __version__)
    meta["figure_panel"] = name
    for key, value in (extra_meta or {}).items():
        meta[key] = value
    if eps_d != 0.0:
        sep = _separation_time(series.times, p_perp, p_1d)
        if sep is not None:
            meta["separation_time_env10pct"] = io.format_number(sep)
    io.write_csv(path, io.EVOLVE_HEADER,
                 [series.times, p_perp, p_1d, series.overlap.real,
                  series.overlap.imag, series.norm - 1.0],
                 meta=meta, meta_time=meta_time, warnings=series.warnings)
    return series


def _separation_time(ts: np.ndarray, p_perp: np.ndarray, p_1d: np.ndarray) -> float | None:
    """First time the non-escape curve visibly departs from the survival one.

    'Visible' on the figures' log scale means the oscillation minima of
    P_1d fill in to within a decade of the local P_perp peak envelope: the
    recorded time is the first P_1d trough exceeding 10% of that envelope.
    Pointwise ratios are useless here (they spike at every oscillation
    zero), and the deep trough floors of both curves scale identically with
    the detuning.
    """
    series_perp = ProbabilitySeries(times=ts, values=p_perp)
    series_1d = ProbabilitySeries(times=ts, values=p_1d)
    lo, hi = float(ts[0]), float(ts[-1])
    t_tr, v_tr = analysis.find_troughs(series_1d, lo, hi)
    t_pk, v_pk = analysis.find_peaks(series_perp, lo, hi)
    if len(t_tr) == 0 or len(t_pk) == 0:
        return None
    envelope = np.interp(t_tr, t_pk, v_pk)
    idx = np.nonzero(v_tr > 0.1 * envelope)[0]
    return float(t_tr[idx[0]]) if len(idx) else None


def _write_overlay_panel(outdir: Path, name: str, g: float, eps_d: float,
                         tags: list[ApproximationTag], t_lo: float, t_hi: float,
                         n_samples: int, grid: str, meta_time: bool) -> None:
    params = ModelParams(g=g, eps_d=eps_d)
    if grid == "log":
        ts = np.geomspace(t_lo, t_hi, n_samples)
    else:
        ts = np.linspace(t_lo, t_hi, n_samples)
    rows: list[tuple[float, float, str, int]] = []
    for tag in tags:
        vals, window = _tag_curve(tag, params, ts)
        rows.extend((float(t), float(v), tag.value, int(w))
                    for t, v, w in zip(ts, vals, window))
    meta = {"figure_panel": name, "g": g, "eps_d": eps_d,
            "tags": ",".join(t.value for t in tags), "tool_version": __version__}
    io.write_analytic_csv(outdir / f"{name}.csv", rows, meta, meta_time=meta_time)


def _write_bessel_panel(outdir: Path, name: str, g: float, t_lo: float,
                        t_hi: float, n_samples: int, grid: str,
                        meta_time: bool) -> None:
    # far times of g = 0.98 (T_Delta = 2450) are out of desk scale for the
    # direct evolution; the exact Bessel representation supplies the curve
    if grid == "log":
        ts = np.geomspace(t_lo, t_hi, n_samples)
    else:
        ts = np.linspace(t_lo, t_hi, n_samples)
    p = np.abs(closedform.bessel_exact_grid(ts, g)) ** 2
    meta = {"figure_panel": name, "g": g, "eps_d": 0.0,
            "route": "bessel_exact",
            "t_range": f"{t_lo:g}:{t_hi:g}:{grid}{n_samples}",
            "tool_version": __version__}
    io.write_csv(outdir / f"{name}.csv", ["t", "P_perp"], [ts, p],
                 meta=meta, meta_time=meta_time)


def _write_fig2e(outdir: Path, meta_time: bool) -> None:
    # a resolved far-zone close-up at 5 T_Delta, about 25 oscillation periods
    t_lo, t_hi = 12250.0, 12290.0
    _write_bessel_panel(outdir, "fig2e_bessel", 0.98, t_lo, t_hi, 4001,
                        "linear", meta_time)
    _write_overlay_panel(outdir, "fig2e_overlays", 0.98, 0.0,
                         [ApproximationTag.FarZoneProb],
                         t_lo, t_hi, 2000, "linear", meta_time)


def _figure_tasks(figure_id: str, outdir: Path, meta_time: bool) -> list:
    E, O = _write_evolve_panel, _write_overlay_panel
    tasks: dict[str, list] = {
        "fig1": [(lambda: _write_fig1(outdir, meta_time))],
        "fig2a": [
            (lambda: E(outdir, "fig2a_evolve", 1.1, 0.0, "perp", 200.0, 4001, "linear", meta_time)),
            (lambda: O(outdir, "fig2a_overlays", 1.1, 0.0, [ApproximationTag.BoundTerm],
                       0.05, 200.0, 2000, "linear", meta_time)),
        ],
        "fig2b": [
            (lambda: E(outdir, "fig2b_evolve", 1.0, 0.0, "perp", 1000.0, 4000, "log", meta_time)),
            (lambda: O(outdir, "fig2b_overlays", 1.0, 0.0, [ApproximationTag.NearZoneEarlyProb],
                       0.5, 1000.0, 1000, "log", meta_time)),
        ],
        "fig2cde": [
            (lambda: E(outdir, "fig2c_evolve", 0.98, 0.0, "perp", 1000.0, 4000, "log", meta_time)),
            (lambda: _write_bessel_panel(outdir, "fig2c_bessel", 0.98, 0.1, 30000.0,
                                         4000, "log", meta_time)),
            (lambda: E(outdir, "fig2d_evolve", 0.98, 0.0, "perp", 30.0, 3000, "linear", meta_time)),
            (lambda: O(outdir, "fig2d_overlays", 0.98, 0.0,
                       [ApproximationTag.NearZoneEarlyProb, ApproximationTag.NearZoneAmp,
                        ApproximationTag.EarlyBessel], 1.0, 30.0, 2900, "linear", meta_time)),
            (lambda: _write_fig2e(outdir, meta_time)),
        ],
        "fig3a": [(lambda: E(outdir, "fig3a_evolve", 0.9, 0.005, "perp", 400.0, 3000, "log", meta_time))],
        "fig3b": [
            (lambda: E(outdir, "fig3b_evolve", 0.9, 0.2, "perp", 400.0, 3000, "log", meta_time)),
            (lambda: O(outdir, "fig3b_overlays", 0.9, 0.2,
                       [ApproximationTag.ResPole1d, ApproximationTag.ResPolePerp],
                       1.0, 400.0, 800, "log", meta_time)),
        ],
        "fig3c": [(lambda: E(outdir, "fig3c_evolve", 0.9, 0.35, "perp", 400.0, 3000, "log", meta_time))],
        "figS1": [
            (lambda: E(outdir, "figS1_g0.9_evolve", 0.9, 0.0, "perp", 300.0, 3000, "log", meta_time)),
            (lambda: O(outdir, "figS1_g0.9_overlays", 0.9, 0.0,
                       [ApproximationTag.NearZoneEarlyProb, ApproximationTag.FarZoneProb],
                       0.5, 300.0, 1500, "log", meta_time)),
            (lambda: E(outdir, "figS1_g0.7_evolve", 0.7, 0.0, "perp", 300.0, 3000, "log", meta_time)),
            (lambda: O(outdir, "figS1_g0.7_overlays", 0.7, 0.0,
                       [ApproximationTag.NearZoneEarlyProb, ApproximationTag.FarZoneProb],
                       0.5, 300.0, 1500, "log", meta_time)),
        ],
        "figS2": [
            (lambda: E(outdir, "figS2_evolve", 0.9, 0.0, "perp", 20.0, 4000, "linear", meta_time)),
            (lambda: O(outdir, "figS2_overlays", 0.9, 0.0,
                       [ApproximationTag.EarlyBessel, ApproximationTag.NearZoneEarlyProb],
                       0.5, 20.0, 2000, "linear", meta_time)),
        ],
        "figS3": [
            (lambda w=w: E(outdir, f"figS3_w{w}_evolve", 0.9, 0.0, f"w:{w}", 200.0, 3000,
                           "log", meta_time))
            for w in (0.1, 0.5, 1.0, 2.0)
        ],
        "figS4": ([
            (lambda g=g: E(outdir, f"figS4_g{g}_evolve", g, 0.0, "w:1.0", 300.0, 3000,
                           "log", meta_time))
            for g in (0.7, 0.9, 1.0, 1.1)
        ] + [
            (lambda: O(outdir, "figS4_g1.0_overlays", 1.0, 0.0, [ApproximationTag.WNearZoneG1],
                       1.0, 300.0, 1000, "log", meta_time)),
            (lambda: O(outdir, "figS4_g0.7_overlays", 0.7, 0.0, [ApproximationTag.WFarZone],
                       1.0, 300.0, 1000, "log", meta_time)),
            (lambda: O(outdir, "figS4_g0.9_overlays", 0.9, 0.0, [ApproximationTag.WFarZone],
                       1.0, 300.0, 1000, "log", meta_time)),
        ]),
    }
    if figure_id not in tasks:
        raise InvalidParameterError(
            f"unknown figure id {figure_id!r}; valid ids: {', '.join(sorted(tasks))}")
    return tasks[figure_id]


FIGURE_IDS = ("fig1", "fig2a", "fig2b", "fig2cde", "fig3a", "fig3b", "fig3c",
              "figS1", "figS2", "figS3", "figS4")


def _cmd_figure(args) -> int:
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    tasks = _figure_tasks(args.figure_id, outdir, not args.no_meta_time)
    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            futures = [pool.submit(task) for task in tasks]
            for fut in futures:
                fut.result()
    else:
        for task in tasks:
            task()
    return 0


# ---------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bicchain",
        description="Decay near a bound state in continuum on a side-coupled chain")
    parser.add_argument("--version", action="version", version=f"bicchain {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_model_args(p, eps_default=0.0):
        p.add_argument("--g", type=float, required=True, help="chain-impurity coupling (units J)")
        p.add_argument("--eps-d", type=float, default=eps_default, dest="eps_d",
                       help="impurity detuning (units J)")

    def add_common(p):
        p.add_argument("--out", required=True, help="output path")
        p.add_argument("--no-meta-time", action="store_true",
                       help="omit the metadata timestamp (byte-identical reruns)")
        p.add_argument("--config", default=None,
                       help="key=value file of defaults; explicit flags take precedence")

    p_spec = sub.add_parser("spectrum", help="discrete spectrum JSON report")
    add_model_args(p_spec)
    add_common(p_spec)
    p_spec.set_defaults(func=_cmd_spectrum)

    def add_evolve_args(p):
        p.add_argument("--tmax", type=float, required=True, help="evolution time (units 1/J)")
        p.add_argument("--samples", type=int, default=2001, help="number of sample times")
        p.add_argument("--grid", choices=("linear", "log"), default="linear")
        p.add_argument("--sites", default="auto", help="chain truncation: auto or an integer")
        p.add_argument("--rel-tol", type=float, default=1e-11, dest="rel_tol")
        p.add_argument("--abs-tol", type=float, default=1e-13, dest="abs_tol")

    p_ev = sub.add_parser("evolve", help="numerical evolution CSV")
    add_model_args(p_ev)
    p_ev.add_argument("--state", default="perp", help="initial state: bic, perp, or w:<x>")
    add_evolve_args(p_ev)
    add_common(p_ev)
    p_ev.set_defaults(func=_cmd_evolve)

    p_an = sub.add_parser("analytic", help="closed-form overlay CSV")
    add_model_args(p_an)
    p_an.add_argument("--tags", required=True,
                      help="comma-separated ApproximationTag names")
    p_an.add_argument("--tmax", type=float, required=True)
    p_an.add_argument("--samples", type=int, default=1000)
    p_an.add_argument("--grid", choices=("linear", "log"), default="log")
    add_common(p_an)
    p_an.set_defaults(func=_cmd_analytic)

    p_cmp = sub.add_parser("compare", help="cross-validate evolution vs semi-analytic routes")
    add_model_args(p_cmp)
    add_evolve_args(p_cmp)
    add_common(p_cmp)
    p_cmp.set_defaults(func=_cmd_compare)

    p_fig = sub.add_parser("figure", help="regenerate figure data (one CSV per panel)")
    p_fig.add_argument("figure_id", help=f"one of: {', '.join(FIGURE_IDS)}")
    p_fig.add_argument("--jobs", type=int, default=1, help="parallel panel workers")
    add_common(p_fig)
    p_fig.set_defaults(func=_cmd_figure)
    return parser


def _apply_config_file(argv: list[str]) -> list[str]:
    """Expand --config FILE into flags placed before the explicit ones.

    The file holds one key=value pair per line ('#' comments allowed); keys
    map to long options (tmax -> --tmax, no_meta_time -> --no-meta-time).
    Because the expansion lands right after the subcommand, any flag given
    explicitly on the command line overrides the file.
    """
    if "--config" not in argv:
        return argv
    idx = argv.index("--config")
    if idx + 1 >= len(argv):
        raise InvalidParameterError("--config requires a file path")
    tokens: list[str] = []
    for line in Path(argv[idx + 1]).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise InvalidParameterError(f"config line {line!r} is not key=value")
        flag = "--" + key.strip().replace("_", "-")
        value = value.strip()
        if flag == "--no-meta-time":
            if value.lower() in ("1", "true", "yes"):
                tokens.append(flag)
        else:
            tokens += [flag, value]
    return argv[:1] + tokens + argv[1:]


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    parser = build_parser()
    try:
        if argv and not argv[0].startswith("-"):
            argv = _apply_config_file(argv)
        args = parser.parse_args(argv)
        return args.func(args)
    except CONFIG_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
