"""Command-line pipeline: simulate, fit, benchmark, spectrum, diagnose.

Every command reads plain files (config INI, dataset manifest) and writes
plain files (CSVs plus a JSON run summary), so commands compose through
directories. Outputs are deterministic given inputs and seeds; only the
"timings" entry of a run summary varies between runs.

Exit status: 0 on success, 1 on any computational or ingestion failure,
2 on command-line usage errors.
"""

from __future__ import annotations

import argparse
import os
import sys
import time

import numpy as np

from .diagnostics import cluster_mixing, residual_report, residuals
from .estimation import fit_benchmark_ssm, fit_multi_epoch
from .io import (
    RunConfig,
    config_as_dict,
    load_dataset,
    load_run_summary,
    parse_config,
    save_dataset,
    write_rows_csv,
    write_run_summary,
)
from .model import BandSpec, EpochParams, MixingMatrix, evolutionary_spectrum
from .presets import preset_text
from .simulation import mse_report, simulate_epochs
from .spectral import parse_phases, periodogram, phase_average, relative_periodogram

PRESET_PREFIX = "preset:"


def _resolve_config(arg: str) -> RunConfig:
    if arg.startswith(PRESET_PREFIX):
        text = preset_text(arg[len(PRESET_PREFIX):])
    else:
        try:
            with open(arg) as fh:
                text = fh.read()
        except OSError as exc:
            raise ValueError(f"cannot read config {arg}: {exc}") from exc
    return parse_config(text)


def _freq_grid_hz(T: int, fs: float, max_points: int = 128) -> np.ndarray:
    half = T // 2
    j = np.unique(np.linspace(1, half, min(half, max_points)).round().astype(int))
    return j / T * fs


def _params_rows(params_list):
    for r, params in enumerate(params_list, start=1):
        yield (r, *params.rho, params.sigma2, params.tau2)


def _params_header(bands):
    return ["epoch", *(f"rho_{b.name}" for b in bands), "sigma2", "tau2"]


def _write_mixing(path, mixing, channel_names, bands):
    write_rows_csv(
        path,
        ["channel", *(b.name for b in bands)],
        ((name, *row) for name, row in zip(channel_names, mixing.values)),
    )


def _write_evolutionary_spectrum(path, params_list, bands, fs, T):
    grid = _freq_grid_hz(T, fs)
    spectra = evolutionary_spectrum(params_list, bands, fs, grid)
    write_rows_csv(
        path,
        ["epoch", "frequency_hz", "band", "power"],
        (
            (r + 1, grid[j], band.name, spectra[r, j, l])
            for r in range(spectra.shape[0])
            for l, band in enumerate(bands)
            for j in range(grid.size)
        ),
    )


def _params_dicts(params_list):
    return [
        {"rho": p.rho.tolist(), "sigma2": p.sigma2, "tau2": p.tau2}
        for p in params_list
    ]


def _summary_skeleton(config: RunConfig, started: float) -> dict:
    return {
        "config": config_as_dict(config),
        "timings": {"wall_seconds": time.perf_counter() - started},
    }


def _channel_index(arg: str | None, names) -> int:
    if arg is None:
        return 0
    if arg in names:
        return names.index(arg)
    try:
        idx = int(arg)
    except ValueError:
        raise ValueError(f"unknown channel {arg!r}; have {', '.join(names)}")
    if not 1 <= idx <= len(names):
        raise ValueError(f"channel index {idx} outside 1..{len(names)}")
    return idx - 1


def cmd_simulate(args) -> int:
    started = time.perf_counter()
    config = _resolve_config(args.config)
    if config.sim is None:
        raise ValueError("config has no [simulation] section")
    ds = simulate_epochs(config.sim)
    os.makedirs(args.out, exist_ok=True)
    save_dataset(ds.epochs, args.out)
    names = ds.epochs[0].channel_names
    _write_mixing(
        os.path.join(args.out, "truth_mixing.csv"), ds.mixing, names, config.bands
    )
    write_rows_csv(
        os.path.join(args.out, "truth_params.csv"),
        _params_header(config.bands),
        _params_rows(ds.params_by_epoch),
    )
    summary = _summary_skeleton(config, started)
    summary["n_epochs"] = len(ds.epochs)
    write_run_summary(os.path.join(args.out, "run_summary.json"), summary)
    return 0


def cmd_fit(args) -> int:
    started = time.perf_counter()
    config = _resolve_config(args.config)
    epochs = load_dataset(args.data)
    names = epochs[0].channel_names or tuple(
        f"ch{i + 1:02d}" for i in range(epochs[0].p)
    )
    fit = fit_multi_epoch(epochs, config.bands, config.fit)
    os.makedirs(args.out, exist_ok=True)
    _write_mixing(
        os.path.join(args.out, "mixing.csv"), fit.global_mixing, names, config.bands
    )
    write_rows_csv(
        os.path.join(args.out, "params.csv"),
        _params_header(config.bands),
        _params_rows(fit.params_by_epoch),
    )
    _write_evolutionary_spectrum(
        os.path.join(args.out, "evolutionary_spectrum.csv"),
        fit.params_by_epoch,
        config.bands,
        epochs[0].fs,
        epochs[0].T,
    )
    digest = {}
    if epochs[0].T >= 8:
        first_resid = residuals(
            epochs[0], fit.global_mixing, fit.params_by_epoch[0], config.bands
        )
        n_lags = min(20, epochs[0].T // 4 - 1)
        digest["ljung_box_pvalues_epoch1"] = [
            residual_report(first_resid[ch], n_lags).ljung_box_pvalue
            for ch in range(first_resid.shape[0])
        ]
    summary = _summary_skeleton(config, started)
    summary.update(
        {
            "global_mixing": fit.global_mixing.values.tolist(),
            "channel_names": list(names),
            "params_by_epoch": _params_dicts(fit.params_by_epoch),
            "block_starts": fit.block_starts.tolist(),
            "block_converged": fit.block_converged.tolist(),
            "diagnostics": digest,
        }
    )
    summary["timings"]["wall_seconds"] = time.perf_counter() - started
    write_run_summary(os.path.join(args.out, "run_summary.json"), summary)
    return 0


def cmd_benchmark(args) -> int:
    started = time.perf_counter()
    config = _resolve_config(args.config)
    if config.sim is None:
        raise ValueError("config has no [simulation] section")
    ds = simulate_epochs(config.sim)
    fit = fit_multi_epoch(ds.epochs, config.bands, config.fit)
    base = fit_benchmark_ssm(ds.epochs, config.bands, config.fit)
    R = len(ds.epochs)
    fs = config.sim.fs
    essm_mse = mse_report(
        fit.params_by_epoch, ds.params_by_epoch, config.bands, fs
    )
    ssm_mse = mse_report(
        [base.params] * R, ds.params_by_epoch, config.bands, fs
    )
    os.makedirs(args.out, exist_ok=True)
    rows = [*(f"phi_{b.name}" for b in config.bands), "tau2", "sigma2"]
    write_rows_csv(
        os.path.join(args.out, "mse.csv"),
        ["quantity", "essm", "ssm"],
        ((row, essm_mse[row], ssm_mse[row]) for row in rows),
    )
    names = ds.epochs[0].channel_names
    _write_mixing(
        os.path.join(args.out, "mixing_essm.csv"),
        fit.global_mixing,
        names,
        config.bands,
    )
    _write_mixing(
        os.path.join(args.out, "mixing_ssm.csv"), base.mixing, names, config.bands
    )
    summary = _summary_skeleton(config, started)
    summary.update(
        {
            "mse": {"essm": essm_mse, "ssm": ssm_mse},
            "params_by_epoch_essm": _params_dicts(fit.params_by_epoch),
            "params_avg_ssm": _params_dicts([base.params])[0],
            "block_starts": fit.block_starts.tolist(),
        }
    )
    summary["timings"]["wall_seconds"] = time.perf_counter() - started
    write_run_summary(os.path.join(args.out, "run_summary.json"), summary)
    return 0


def cmd_spectrum(args) -> int:
    epochs = load_dataset(args.data)
    names = epochs[0].channel_names or tuple(
        f"ch{i + 1:02d}" for i in range(epochs[0].p)
    )
    ch = _channel_index(args.channel, list(names))
    pgrams = [periodogram(e.data[ch], e.fs) for e in epochs]
    os.makedirs(args.out, exist_ok=True)
    write_rows_csv(
        os.path.join(args.out, "periodograms.csv"),
        ["epoch", "frequency_hz", "power"],
        (
            (r + 1, f, v)
            for r, pg in enumerate(pgrams)
            for f, v in zip(pg.freqs_hz, pg.power)
        ),
    )
    if args.phases is not None:
        phases = parse_phases(args.phases)
    else:
        phases = ((1, len(epochs)),)
    averaged = phase_average(pgrams, phases)
    write_rows_csv(
        os.path.join(args.out, "phase_average.csv"),
        ["phase", "first_epoch", "last_epoch", "frequency_hz", "power"],
        (
            (k + 1, lo, hi, f, v)
            for k, (lo, hi) in enumerate(averaged.phases)
            for f, v in zip(averaged.freqs_hz, averaged.power[k])
        ),
    )
    shares, degenerate = relative_periodogram(averaged)
    write_rows_csv(
        os.path.join(args.out, "relative_periodogram.csv"),
        ["phase", "frequency_hz", "share", "degenerate"],
        (
            (k + 1, f, shares[k, j], bool(degenerate[j]))
            for k in range(shares.shape[0])
            for j, f in enumerate(averaged.freqs_hz)
        ),
    )
    return 0


def _load_fit_outputs(fit_dir: str):
    summary = load_run_summary(os.path.join(fit_dir, "run_summary.json"))
    bands = tuple(BandSpec(**b) for b in summary["config"]["bands"])
    mixing = MixingMatrix(np.asarray(summary["global_mixing"], dtype=float))
    params = [
        EpochParams(np.asarray(d["rho"], dtype=float), d["sigma2"], d["tau2"])
        for d in summary["params_by_epoch"]
    ]
    return bands, mixing, params


def cmd_diagnose(args) -> int:
    epochs = load_dataset(args.data)
    bands, mixing, params = _load_fit_outputs(args.fit)
    if len(params) != len(epochs):
        raise ValueError(
            f"fit covers {len(params)} epochs, dataset has {len(epochs)}"
        )
    if not 1 <= args.epoch <= len(epochs):
        raise ValueError(f"epoch must lie in 1..{len(epochs)}")
    epoch = epochs[args.epoch - 1]
    names = epoch.channel_names or tuple(
        f"ch{i + 1:02d}" for i in range(epoch.p)
    )
    res = residuals(
        epoch, mixing, params[args.epoch - 1], bands, smoothed=args.smoothed
    )
    reports = [residual_report(res[ch], args.lags) for ch in range(epoch.p)]
    os.makedirs(args.out, exist_ok=True)
    write_rows_csv(
        os.path.join(args.out, "residual_acf.csv"),
        ["channel", "lag", "acf", "pacf"],
        (
            (names[ch], h, rep.acf[h], rep.pacf[h])
            for ch, rep in enumerate(reports)
            for h in range(args.lags + 1)
        ),
    )
    write_rows_csv(
        os.path.join(args.out, "ljung_box.csv"),
        ["channel", "statistic", "pvalue"],
        (
            (names[ch], rep.ljung_box_stat, rep.ljung_box_pvalue)
            for ch, rep in enumerate(reports)
        ),
    )
    clusters = [
        cluster_mixing(mixing, l, band_name=band.name)
        for l, band in enumerate(bands)
    ]
    write_rows_csv(
        os.path.join(args.out, "clusters.csv"),
        ["band", "channel", "cluster"],
        (
            (result.band, names[ch], int(label))
            for result in clusters
            for ch, label in enumerate(result.assignments)
        ),
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="essm",
        description="Evolutionary state-space decomposition of multi-epoch "
        "multichannel signals.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic dataset")
    p.add_argument("--config", required=True,
                   help="config file or preset:NAME")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit the evolutionary model to a dataset")
    p.add_argument("--data", required=True, help="dataset manifest")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser(
        "benchmark",
        help="simulate, fit, and compare against per-epoch baseline",
    )
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("spectrum", help="periodogram summaries of one channel")
    p.add_argument("--data", required=True)
    p.add_argument("--phases", default=None,
                   help='epoch partition like "1-80,81-160,161-247"')
    p.add_argument("--channel", default=None,
                   help="channel name or 1-based index (default: first)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("diagnose", help="residual whiteness and clustering")
    p.add_argument("--data", required=True)
    p.add_argument("--fit", required=True, help="directory written by fit")
    p.add_argument("--out", required=True)
    p.add_argument("--epoch", type=int, default=1)
    p.add_argument("--lags", type=int, default=20)
    p.add_argument("--smoothed", action="store_true",
                   help="use smoothed instead of filtered states")
    p.set_defaults(func=cmd_diagnose)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
