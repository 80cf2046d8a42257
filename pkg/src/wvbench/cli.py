"""Command-line entry points: simulate, analyze, verify, selftest.

Exit codes are part of the interface and stay stable:

0  success
1  acceptance failure (verify above its residual bound, selftest failure)
2  configuration error
3  I/O failure
4  required input data missing or incomplete

Every command writes a ``manifest.json`` (atomically) into its output
directory recording the tool version, the effective configuration, the
produced files and wall-clock timings; ``simulate --config manifest.json``
re-runs a past campaign byte-for-byte.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import os
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from . import analysis, interferometer, qubit_core, signal_gen

WEAK_VALUES_HEADER = ["chi_rad", "re", "im", "sigma_re", "sigma_im", "excluded"]
COMMUTATOR_HEADER = ["chi_rad", "lhs", "sigma_lhs", "rhs", "sigma_rhs", "theory"]
POSTSELECTION_HEADER = ["chi_rad", "p_x", "sigma_p_x", "p_y", "sigma_p_y"]
FITS_HEADER = [
    "chi_rad",
    "offset",
    "amplitude",
    "phase",
    "sigma_offset",
    "sigma_amplitude",
    "sigma_phase",
    "reduced_chi2",
]
CORRECTED_HEADER = ["chi_rad", "bin_center_s", "value", "sigma"]


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _err(message: str) -> None:
    print(f"wvbench: {message}", file=sys.stderr)


def _write_manifest(out_dir: Path, command: str, config_doc: dict | None,
                    outputs: list[str], timings: dict, **extra) -> None:
    payload = {
        "tool": "wvbench",
        "version": __version__,
        "command": command,
        "created_utc": datetime.now(timezone.utc).isoformat(),
        "config": config_doc,
        "outputs": sorted(outputs),
        "timings": timings,
    }
    payload.update(extra)
    tmp = out_dir / "manifest.json.tmp"
    with tmp.open("w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, out_dir / "manifest.json")


def _write_csv(path: Path, header: list[str], rows) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


# ---------------------------------------------------------------- simulate


def cmd_simulate(args: argparse.Namespace) -> int:
    try:
        config = signal_gen.load_config(args.config)
        if args.seed is not None:
            config = dataclasses.replace(config, seed=args.seed)
        if args.noiseless:
            config = dataclasses.replace(config, noiseless=True)
    except signal_gen.ConfigError as exc:
        _err(f"config error: {exc}")
        return 2
    except OSError as exc:
        _err(f"cannot read config: {exc}")
        return 3

    t0 = time.perf_counter()
    datasets = signal_gen.generate_dataset(config)
    gen_s = time.perf_counter() - t0

    out_dir = Path(args.out)
    outputs: list[str] = []
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        if args.per_channel:
            sub = out_dir / "channels"
            sub.mkdir(exist_ok=True)
            for channel in config.datasets.enabled():
                per = [d for d in datasets if d.channel == channel]
                rel = f"channels/{channel}.csv"
                signal_gen.write_campaign_csv(per, out_dir / rel)
                outputs.append(rel)
        else:
            signal_gen.write_campaign_csv(datasets, out_dir / "campaign.csv")
            outputs.append("campaign.csv")
        _write_manifest(
            out_dir,
            "simulate",
            signal_gen.config_to_dict(config),
            outputs,
            {"generate_s": gen_s},
        )
    except OSError as exc:
        _err(f"cannot write outputs: {exc}")
        return 3

    print(
        f"simulated {len(datasets)} settings "
        f"({len(config.chi_grid)} phases x {len(config.datasets.enabled())} channels) "
        f"-> {out_dir}"
    )
    return 0


# ----------------------------------------------------------------- analyze


def _load_campaign_dir(data_dir: Path) -> tuple[signal_gen.ExperimentConfig, list]:
    manifest_path = data_dir / "manifest.json"
    if not data_dir.is_dir() or not manifest_path.is_file():
        raise FileNotFoundError(f"no campaign manifest at {manifest_path}")
    with manifest_path.open() as fh:
        manifest = json.load(fh)
    config = signal_gen.config_from_dict(manifest.get("config") or {})
    csv_paths = [
        data_dir / name for name in manifest.get("outputs", []) if name.endswith(".csv")
    ]
    missing = [str(p) for p in csv_paths if not p.is_file()]
    if not csv_paths or missing:
        raise FileNotFoundError(
            f"campaign data files missing: {', '.join(missing) or 'none listed'}"
        )
    return config, signal_gen.load_campaign_csv(csv_paths)


def cmd_analyze(args: argparse.Namespace) -> int:
    data_dir = Path(args.data)
    try:
        config, datasets = _load_campaign_dir(data_dir)
    except FileNotFoundError as exc:
        _err(str(exc))
        return 4
    except signal_gen.ConfigError as exc:
        _err(f"config error in campaign manifest: {exc}")
        return 2
    except (OSError, json.JSONDecodeError) as exc:
        _err(f"cannot read campaign: {exc}")
        return 3
    except ValueError as exc:
        _err(f"invalid campaign data: {exc}")
        return 4

    t0 = time.perf_counter()
    try:
        result = analysis.analyze_campaign(
            datasets,
            alpha=config.protocol.alpha,
            omega=config.protocol.omega,
            delta=config.protocol.delta,
            p_min=config.p_min,
            eta_min=config.eta_min,
            alpha_sys_rel=config.alpha_sys_rel,
        )
    except (
        analysis.ChannelMismatch,
        analysis.DegenerateFit,
        analysis.VisibilityZero,
        analysis.MissingReference,
    ) as exc:
        _err(f"cannot analyze campaign: {exc}")
        return 4
    analyze_s = time.perf_counter() - t0

    out_dir = Path(args.out)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        with (out_dir / "visibility.json").open("w") as fh:
            json.dump(
                {
                    "eta": result.visibility.eta,
                    "sigma_eta": result.visibility.sigma_eta,
                    "clamped": result.visibility.clamped,
                },
                fh,
                indent=2,
            )
            fh.write("\n")
        _write_csv(
            out_dir / "fits.csv",
            FITS_HEADER,
            (
                [
                    _fmt(chi),
                    _fmt(fit.offset),
                    _fmt(fit.amplitude),
                    _fmt(fit.phase),
                    _fmt(math.sqrt(max(fit.covariance[0, 0], 0.0))),
                    _fmt(math.sqrt(max(fit.covariance[1, 1], 0.0))),
                    _fmt(math.sqrt(max(fit.covariance[2, 2], 0.0))),
                    _fmt(fit.reduced_chi2),
                ]
                for chi, fit in result.fits
            ),
        )
        _write_csv(
            out_dir / "corrected.csv",
            CORRECTED_HEADER,
            (
                [_fmt(chi), _fmt(t), _fmt(v), _fmt(s)]
                for chi, series in result.corrected
                for t, v, s in zip(series.bin_centers, series.values, series.sigmas)
            ),
        )
        _write_csv(
            out_dir / "weak_values.csv",
            WEAK_VALUES_HEADER,
            (
                [
                    _fmt(e.chi),
                    _fmt(e.re),
                    _fmt(e.im),
                    _fmt(e.sigma_re),
                    _fmt(e.sigma_im),
                    "1" if e.excluded else "0",
                ]
                for e in result.weak_values
            ),
        )
        ps_y = {round(c, 12): (p, s) for c, p, s in result.postselection_y}
        _write_csv(
            out_dir / "postselection.csv",
            POSTSELECTION_HEADER,
            (
                [_fmt(chi), _fmt(p), _fmt(s), _fmt(ps_y[round(chi, 12)][0]), _fmt(ps_y[round(chi, 12)][1])]
                for chi, p, s in result.postselection_x
            ),
        )
        _write_manifest(
            out_dir,
            "analyze",
            signal_gen.config_to_dict(config),
            [
                "visibility.json",
                "fits.csv",
                "corrected.csv",
                "weak_values.csv",
                "postselection.csv",
            ],
            {"analyze_s": analyze_s},
            input_dir=str(data_dir),
        )
    except OSError as exc:
        _err(f"cannot write outputs: {exc}")
        return 3

    eta = result.visibility
    print(
        f"analyzed {len(result.weak_values)} settings: eta = {eta.eta:.4f} +- {eta.sigma_eta:.4f}, "
        f"{result.report.n_excluded} excluded -> {out_dir}"
    )
    return 0


# ------------------------------------------------------------------ verify


def _read_rows(path: Path, header: list[str]) -> list[list[str]]:
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        first = next(reader, None)
        if first != header:
            raise ValueError(f"{path}: unexpected header {first!r}")
        return [row for row in reader if row]


def cmd_verify(args: argparse.Namespace) -> int:
    data_dir = Path(args.data)
    wv_path = data_dir / "weak_values.csv"
    ps_path = data_dir / "postselection.csv"
    manifest_path = data_dir / "manifest.json"
    missing = [str(p) for p in (wv_path, ps_path, manifest_path) if not p.is_file()]
    if missing:
        _err(f"analysis outputs missing: {', '.join(missing)}")
        return 4

    try:
        with manifest_path.open() as fh:
            manifest = json.load(fh)
        config_doc = manifest.get("config") or {}
        rms_bound = args.rms_bound
        if rms_bound is None:
            rms_bound = float(config_doc.get("rms_bound", 0.05))

        weak_values = [
            analysis.WeakValueEstimate(
                chi=float(r[0]),
                re=float(r[1]),
                im=float(r[2]),
                sigma_re=float(r[3]),
                sigma_im=float(r[4]),
                postselection_prob=math.nan,
                excluded=r[5] == "1",
            )
            for r in _read_rows(wv_path, WEAK_VALUES_HEADER)
        ]
        ps_rows = _read_rows(ps_path, POSTSELECTION_HEADER)
        empty_x = tuple((float(r[0]), float(r[1]), float(r[2])) for r in ps_rows)
        empty_y = tuple((float(r[0]), float(r[3]), float(r[4])) for r in ps_rows)
    except (OSError, json.JSONDecodeError) as exc:
        _err(f"cannot read analysis outputs: {exc}")
        return 3
    except (ValueError, IndexError) as exc:
        _err(f"invalid analysis outputs: {exc}")
        return 4

    try:
        report = analysis.verify_commutator(weak_values, empty_x, empty_y)
    except analysis.ChannelMismatch as exc:
        _err(f"cannot verify: {exc}")
        return 4

    out_dir = Path(args.out)
    outputs = ["report.json", "commutator.csv"]
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        _write_csv(
            out_dir / "commutator.csv",
            COMMUTATOR_HEADER,
            (
                [
                    _fmt(row.chi),
                    _fmt(row.lhs),
                    _fmt(row.sigma_lhs),
                    _fmt(row.rhs),
                    _fmt(row.sigma_rhs),
                    _fmt(row.theory),
                ]
                for row in report.rows
            ),
        )
        doc = {
            "rows": [dataclasses.asdict(row) for row in report.rows],
            "summary": {
                "rms_residual": report.rms_residual,
                "max_abs_residual": report.max_abs_residual,
                "n_excluded": report.n_excluded,
                "rms_bound": rms_bound,
                "passed": bool(report.rms_residual <= rms_bound),
            },
        }
        with (out_dir / "report.json").open("w") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")
        if args.theory_overlay:
            # even count so the grid hits the dark point chi = pi exactly
            grid = np.linspace(0.0, 2.0 * np.pi, 720, endpoint=False)
            rows = []
            for chi in grid:
                p = (1.0 + math.cos(chi)) / 2.0
                if p < 1e-12:
                    re_w, im_w = math.nan, math.nan
                else:
                    w = 1.0 / (1.0 + complex(math.cos(chi), math.sin(chi)))
                    re_w, im_w = w.real, w.imag
                rows.append([_fmt(chi), _fmt(math.sin(chi)), _fmt(re_w), _fmt(im_w)])
            _write_csv(
                out_dir / "theory_curve.csv",
                ["chi_rad", "sin_chi", "re_w", "im_w"],
                rows,
            )
            outputs.append("theory_curve.csv")
        _write_manifest(
            out_dir,
            "verify",
            config_doc,
            outputs,
            {},
            input_dir=str(data_dir),
            rms_bound=rms_bound,
        )
    except OSError as exc:
        _err(f"cannot write outputs: {exc}")
        return 3

    ok = math.isfinite(report.rms_residual) and report.rms_residual <= rms_bound
    status = "PASS" if ok else "FAIL"
    print(
        f"{status}: rms residual {report.rms_residual:.6g} vs bound {rms_bound:g} "
        f"({len(report.rows) - report.n_excluded} settings, {report.n_excluded} excluded)"
    )
    return 0 if ok else 1


# ---------------------------------------------------------------- selftest


def cmd_selftest(args: argparse.Namespace) -> int:
    """Fast internal consistency suite; --perturb breaks it on purpose."""
    factor = 1.0 + args.perturb
    failures = 0

    def check(name: str, ok: bool, detail: str = "") -> None:
        nonlocal failures
        line = f"ok: {name}" if ok else f"FAIL: {name}"
        if detail:
            line += f" ({detail})"
        print(line)
        failures += 0 if ok else 1

    rng = np.random.default_rng(424242)

    # rotation stays unitary across the parameter space
    worst = 0.0
    for _ in range(50):
        params = interferometer.ProtocolParams(
            chi=rng.uniform(0, 2 * np.pi),
            alpha=rng.uniform(0, np.pi),
            omega=float(rng.uniform(1e3, 1e6)),
            delta=rng.uniform(-np.pi, np.pi),
        )
        u = interferometer.interaction_unitary(rng.uniform(0, 1e-3), params)
        worst = max(worst, float(np.max(np.abs(u.conj().T @ u - np.eye(4)))))
    check("interaction unitarity", worst < 1e-12, f"max dev {worst:.2e}")

    # analytic weak value on a grid
    chis = (np.arange(64) + 0.5) * 2 * np.pi / 64
    worst = 0.0
    for chi in chis:
        wv = qubit_core.weak_value(
            qubit_core.relative_phase_state(chi),
            qubit_core.PLUS_X,
            qubit_core.projector_from_state(qubit_core.KET_0),
        )
        worst = max(worst, abs(wv.value - 1.0 / (1.0 + np.exp(1j * chi))))
    check("analytic weak value", worst < 1e-12, f"max dev {worst:.2e}")

    # weak-value route vs direct matrix route for the commutator
    worst = 0.0
    for _ in range(400):
        psi = qubit_core.normalize(rng.normal(size=2) + 1j * rng.normal(size=2))
        proj_a = qubit_core.projector_from_state(
            qubit_core.bloch_state(rng.uniform(0, np.pi), rng.uniform(0, 2 * np.pi))
        )
        post_b = qubit_core.bloch_state(rng.uniform(0, np.pi), rng.uniform(0, 2 * np.pi))
        if abs(qubit_core.inner(post_b, psi)) ** 2 < 1e-6:
            continue
        op_a = 2.0 * proj_a - np.eye(2)
        op_b = 2.0 * qubit_core.projector_from_state(post_b) - np.eye(2)
        direct = qubit_core.commutator_expectation_direct(op_a, op_b, psi)
        via = factor * qubit_core.commutator_via_weak_value(psi, proj_a, post_b)
        worst = max(worst, abs(via - direct))
    check("commutator oracle equivalence", worst < 1e-10, f"max dev {worst:.2e}")

    # scalar identity, both sides equal sin(chi)
    worst = 0.0
    for chi in chis:
        lhs, rhs = qubit_core.scalar_identity_sides(chi)
        worst = max(worst, abs(factor * lhs - np.sin(chi)), abs(rhs - np.sin(chi)))
    check("scalar identity", worst < 1e-12, f"max dev {worst:.2e}")

    # noiseless end-to-end pipeline on a small campaign
    config = signal_gen.default_config(
        chi_grid=default_small_grid(), counts_per_setting=1e5, noiseless=True
    )
    datasets = signal_gen.generate_dataset(config)
    result = analysis.analyze_campaign(
        datasets,
        alpha=config.protocol.alpha,
        omega=config.protocol.omega,
        delta=config.protocol.delta,
    )
    resid = [
        abs(factor * row.lhs - row.rhs) for row in result.report.rows if not row.excluded
    ]
    worst = max(resid)
    check("noiseless pipeline identity", worst < 1e-8, f"max residual {worst:.2e}")

    print("selftest:", "PASS" if failures == 0 else f"FAIL ({failures} checks)")
    return 0 if failures == 0 else 1


def default_small_grid() -> tuple[float, ...]:
    """Six-setting grid (includes 0 and pi) used by the selftest."""
    return signal_gen.default_chi_grid(6)


# -------------------------------------------------------------------- main


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wvbench",
        description="Simulate and analyze weak-value interferometry counting campaigns.",
    )
    parser.add_argument("--version", action="version", version=f"wvbench {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="generate a synthetic counting campaign")
    p_sim.add_argument("--config", required=True, help="JSON config (or a past manifest.json)")
    p_sim.add_argument("--out", required=True, help="output directory")
    p_sim.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_sim.add_argument(
        "--noiseless", action="store_true", help="emit Poisson expectations instead of draws"
    )
    p_sim.add_argument(
        "--per-channel", action="store_true", help="write one CSV per channel"
    )
    p_sim.set_defaults(func=cmd_simulate)

    p_ana = sub.add_parser("analyze", help="reconstruct weak values from a campaign")
    p_ana.add_argument("--data", required=True, help="simulate output directory")
    p_ana.add_argument("--out", required=True, help="output directory")
    p_ana.set_defaults(func=cmd_analyze)

    p_ver = sub.add_parser("verify", help="check the commutator identity on analysis output")
    p_ver.add_argument("--data", required=True, help="analyze output directory")
    p_ver.add_argument("--out", required=True, help="output directory")
    p_ver.add_argument(
        "--rms-bound",
        type=float,
        default=None,
        help="residual bound for exit status (default: campaign config value)",
    )
    p_ver.add_argument(
        "--theory-overlay",
        action="store_true",
        help="also write a dense theory curve for plotting",
    )
    p_ver.set_defaults(func=cmd_verify)

    p_self = sub.add_parser("selftest", help="run the built-in consistency suite")
    p_self.add_argument(
        "--perturb",
        type=float,
        default=0.0,
        help="debug: scale the commutator prefactor to force a failure",
    )
    p_self.set_defaults(func=cmd_selftest)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
