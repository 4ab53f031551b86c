"""Command-line harness: analytic tables, simulation runs, attack scenarios,
parameter sweeps and self-validation.

Exit codes: 0 success (and channel secure for runs), 2 protocol abort,
3 blinding signature detected, 1 configuration or runtime error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, _kernels
from .analytics import (
    IDEAL_ANOMALOUS_WV,
    PPSKey,
    PROJECTORS,
    anomalous_projector,
    pps_weak_value,
    weak_value_table,
)
from .config import ConfigError, RunConfig, load_config, parse_config, apply_env_overrides
from .contextuality import (
    SECURE_DARK_MAX,
    SECURE_P_CHANNEL_MAX,
    VerdictStatus,
    analytic_contextuality,
    contextuality_measure,
    secure_noise_region,
)
from .noise import ChannelNoise, DeadChannelError
from .protocol import DegenerateCouplingError, ProtocolConfig, run_protocol
from .trajectory import EveKind, EveModel, WeakMeasurementConfig, backaction_flip_rate, collapse_probability

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_ABORT = 2
EXIT_BLINDING = 3

#: Fixed column orders; see README for the bit-exact output contract.
TABLES_COLUMNS = ("ensemble", "projector", "weak_value", "anomalous", "c_value")
STATS_COLUMNS = (
    "ensemble",
    "projector",
    "count",
    "pointer_mean",
    "pointer_se",
    "h_w",
    "h_w_se",
    "c_value",
)
SWEEP_COLUMNS = (
    "p_a",
    "p_b",
    "p_channel",
    "d",
    "g",
    "sigma",
    "photons",
    "analytic_c",
    "secure_region",
    "empirical_min_c",
    "verdict",
)
RECORD_COLUMNS = (
    "index",
    "alice_basis",
    "alice_bit",
    "pauli_a",
    "pauli_b",
    "projector",
    "pointer",
    "bob_basis",
    "bob_outcome",
    "dark_flag",
    "detected",
)


def _fmt(x) -> str:
    return repr(float(x))


def _write_csv(path_or_stream, columns, rows) -> None:
    close = False
    if isinstance(path_or_stream, (str, Path)):
        stream = open(path_or_stream, "w", newline="")
        close = True
    else:
        stream = path_or_stream
    try:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(columns)
        writer.writerows(rows)
    finally:
        if close:
            stream.close()


def _tables_rows(p_a: float, p_b: float, d: float) -> list[list[str]]:
    noise = ChannelNoise(p_a, p_b)
    rows = []
    for report in weak_value_table(noise, d):
        designated = anomalous_projector(report.ensemble) == report.projector
        c = ""
        if designated:
            c = _fmt(contextuality_measure(report.value, IDEAL_ANOMALOUS_WV, report.projector))
        rows.append(
            [
                report.ensemble.value,
                report.projector.label,
                _fmt(report.value),
                str(report.anomalous).lower(),
                c,
            ]
        )
    return rows


def cmd_tables(args) -> int:
    try:
        rows = _tables_rows(args.p_a, args.p_b, args.dark)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if args.out:
        _write_csv(args.out, TABLES_COLUMNS, rows)
    else:
        _write_csv(sys.stdout, TABLES_COLUMNS, rows)
    return EXIT_OK


def _load_run_config(args, require_eve: bool = False) -> RunConfig:
    if args.config:
        cfg = load_config(args.config)
    else:
        cfg = parse_config(apply_env_overrides({}))
    updates = {}
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.photons is not None:
        updates["photons"] = args.photons
    if args.margin is not None:
        updates["margin"] = args.margin
    if args.eve is not None:
        updates["eve"] = EveModel(EveKind(args.eve))
    if args.out is not None:
        updates["out_dir"] = Path(args.out)
    if updates:
        cfg = cfg.with_updates(**updates)
    if require_eve and cfg.eve.kind is EveKind.NONE:
        cfg = cfg.with_updates(eve=EveModel(EveKind.INTERCEPT_RESEND))
    return cfg


def _stats_rows(transcript) -> list[list[str]]:
    est = transcript.estimates
    rows = []
    if est is None:
        return rows
    c_by_key = {r.ensemble: r.c_value for r in transcript.contextuality}
    for key in PPSKey:
        for proj in PROJECTORS:
            e, j = key.index, proj.index
            c = ""
            if anomalous_projector(key) == proj:
                c = _fmt(c_by_key[key])
            rows.append(
                [
                    key.value,
                    proj.label,
                    str(int(est.counts[e, j])),
                    _fmt(est.pointer_mean[e, j]),
                    _fmt(est.pointer_se[e, j]),
                    _fmt(est.h_w[e, j]),
                    _fmt(est.h_w_se[e, j]),
                    c,
                ]
            )
    return rows


def _dump_records(cfg: RunConfig, path: Path) -> None:
    from .trajectory import simulate_block

    pcfg = cfg.protocol_config()
    rows = []
    for chunk in simulate_block(
        pcfg.block_size,
        pcfg.noise,
        pcfg.dark_stats(),
        pcfg.wm,
        pcfg.eve,
        pcfg.seed,
        backend=pcfg.backend,
    ):
        for i in range(len(chunk)):
            rec = chunk.record(i)
            rows.append(
                [
                    str(chunk.start + i),
                    str(rec.alice_basis),
                    str(rec.alice_bit),
                    rec.channel_pauli_a,
                    rec.channel_pauli_b,
                    rec.proj_choice.label,
                    _fmt(rec.pointer) if rec.pointer is not None else "",
                    str(rec.bob_basis),
                    str(rec.bob_outcome),
                    rec.dark_flag.name.lower(),
                    str(bool(rec.detected)).lower(),
                ]
            )
    _write_csv(path, RECORD_COLUMNS, rows)


def _run_and_write(cfg: RunConfig) -> int:
    transcript = run_protocol(cfg.protocol_config())
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    doc = transcript.to_json_dict(include_keys=cfg.include_keys)
    (cfg.out_dir / "transcript.json").write_text(
        json.dumps(doc, sort_keys=True, indent=2) + "\n"
    )
    _write_csv(cfg.out_dir / "statistics.csv", STATS_COLUMNS, _stats_rows(transcript))
    if cfg.dump_records:
        if cfg.photons > 2_000_000:
            print("records dump skipped: block too large", file=sys.stderr)
        else:
            _dump_records(cfg, cfg.out_dir / "records.csv")
    status = transcript.verdict.status
    print(
        f"verdict: {status.value} (min C = {transcript.verdict.min_c:.6f},"
        f" margin = {transcript.verdict.margin})"
    )
    if status is VerdictStatus.SECURE:
        return EXIT_OK
    if status is VerdictStatus.BLINDING_SIGNATURE:
        return EXIT_BLINDING
    return EXIT_ABORT


def cmd_simulate(args) -> int:
    cfg = _load_run_config(args)
    return _run_and_write(cfg)


def cmd_attack(args) -> int:
    cfg = _load_run_config(args, require_eve=True)
    return _run_and_write(cfg)


def _sweep_cell_config(cfg: RunConfig, names, values) -> tuple[RunConfig, int]:
    photons = cfg.photons
    noise = cfg.noise
    dark = cfg.dark
    wm = cfg.wm
    for name, v in zip(names, values):
        if name == "p_channel":
            noise = ChannelNoise(v / 2.0, v / 2.0)
        elif name == "p_a":
            noise = ChannelNoise(v, noise.p_b)
        elif name == "p_b":
            noise = ChannelNoise(noise.p_a, v)
        elif name == "d":
            dark = v
        elif name == "g_over_sigma":
            wm = WeakMeasurementConfig(g=v * cfg.wm.sigma, sigma=cfg.wm.sigma)
        elif name == "photons":
            photons = int(v)
    return cfg.with_updates(photons=photons, noise=noise, dark=dark, wm=wm), photons


def cmd_sweep(args) -> int:
    cfg = _load_run_config(args)
    if cfg.sweep is None:
        print("error: configuration has no sweep block", file=sys.stderr)
        return EXIT_ERROR
    size = cfg.sweep.grid_size()
    cap = cfg.sweep.cell_cap
    if size > cap and not cfg.sweep.force:
        print(
            f"error: sweep grid has {size} cells, over the cap {cap};"
            ' set sweep.force to override',
            file=sys.stderr,
        )
        return EXIT_ERROR
    names = [ax.name for ax in cfg.sweep.axes]
    grids = [ax.values() for ax in cfg.sweep.axes]
    rows = []
    for values in _product(grids):
        cell_cfg, photons = _sweep_cell_config(cfg, names, values)
        p_channel = cell_cfg.noise.p_channel
        d = cell_cfg.dark if cell_cfg.dark is not None else 0.0
        analytic = analytic_contextuality(p_channel, d)
        secure = secure_noise_region(p_channel, d)
        emp_c = ""
        verdict = ""
        if photons > 0:
            transcript = run_protocol(cell_cfg.protocol_config())
            emp_c = _fmt(transcript.verdict.min_c)
            verdict = transcript.verdict.status.value
        rows.append(
            [
                _fmt(cell_cfg.noise.p_a),
                _fmt(cell_cfg.noise.p_b),
                _fmt(p_channel),
                _fmt(d),
                _fmt(cell_cfg.wm.g),
                _fmt(cell_cfg.wm.sigma),
                str(photons),
                _fmt(analytic),
                str(secure).lower(),
                emp_c,
                verdict,
            ]
        )
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    _write_csv(cfg.out_dir / "sweep.csv", SWEEP_COLUMNS, rows)
    print(f"wrote {len(rows)} sweep rows to {cfg.out_dir / 'sweep.csv'}")
    return EXIT_OK


def _product(grids):
    if not grids:
        yield ()
        return
    head, *tail = grids
    for v in head:
        for rest in _product(tail):
            yield (v, *rest)


def _validate_oracle_grid() -> tuple[bool, str]:
    from .quantum import BB84_STATES, depolarize, depolarize_adjoint, weak_value

    worst = 0.0
    grid = [i * 0.01 for i in range(26)]
    effects = {}
    for key in PPSKey:
        for p_b in grid:
            effects.setdefault(
                (key.post_label, p_b),
                depolarize_adjoint(BB84_STATES[key.post_label].projector(), p_b),
            )
    for key in PPSKey:
        pre0 = BB84_STATES[key.pre_label].density()
        for p_a in grid:
            pre = depolarize(pre0, p_a)
            for p_b in grid:
                post = effects[(key.post_label, p_b)]
                noise = ChannelNoise(p_a, p_b)
                for proj in PROJECTORS:
                    ref = weak_value(pre, post, proj.effect().op)
                    closed = pps_weak_value(key, proj, noise, 0.0)
                    worst = max(worst, abs(ref.real - closed), abs(ref.imag))
    return worst <= 1e-12, f"max deviation {worst:.3e}"


def _validate_thresholds() -> tuple[bool, str]:
    lo, hi = 0.0, 0.5
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if analytic_contextuality(mid, 0.0) > 0.5:
            lo = mid
        else:
            hi = mid
    p_star = 0.5 * (lo + hi)
    lo, hi = 0.0, 0.5
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if secure_noise_region(0.0, mid):
            lo = mid
        else:
            hi = mid
    d_star = 0.5 * (lo + hi)
    ok = abs(p_star - SECURE_P_CHANNEL_MAX) < 1e-9 and abs(d_star - SECURE_DARK_MAX) < 1e-9
    ok = ok and abs(p_star - 0.1464466) < 1e-7 and abs(d_star - 0.0857864) < 1e-7
    return ok, f"p* = {p_star:.9f}, d* = {d_star:.9f}"


def _validate_closure() -> tuple[bool, str]:
    from .protocol import PPSAccumulator, estimate

    g = 0.1
    noise = ChannelNoise(0.05, 0.03)
    worst = 0.0
    for d in (0.0, 0.02):
        acc = PPSAccumulator()
        acc.cond.n[:] = 1000
        acc.uncond.n[:] = 4000
        for key in PPSKey:
            for proj in PROJECTORS:
                acc.cond.mean[key.index, proj.index] = g * pps_weak_value(key, proj, noise, d)
        acc.uncond.mean[:] = g * (1.0 - d) * 0.5
        est = estimate(acc, d)
        worst = max(
            worst,
            abs(est.g_plus - g),
            abs(est.g_minus - g),
            float(np.max(np.abs(est.p_channel - noise.p_channel))),
            float(np.max(np.abs(est.p_a - noise.p_a))),
            float(np.max(np.abs(est.p_b - noise.p_b))),
        )
    return worst <= 1e-12, f"max deviation {worst:.3e}"


def _validate_backaction() -> tuple[bool, str]:
    cfg = WeakMeasurementConfig(g=0.1, sigma=1.0)
    p_wm = collapse_probability(cfg)
    n = 1_000_000
    flips, rounds = backaction_flip_rate(cfg, n, seed=20260809)
    rate = flips / rounds
    se = math.sqrt(p_wm * (1.0 - p_wm) / n)
    ok = abs(rate - p_wm) <= 4.0 * se and p_wm < 0.0004
    return ok, f"flip rate {rate:.3e} vs {p_wm:.3e} (4 SE = {4 * se:.1e})"


def _validate_convergence() -> tuple[bool, str]:
    cfg = ProtocolConfig(
        block_size=400_000,
        noise=ChannelNoise(0.05, 0.03),
        wm=WeakMeasurementConfig(g=0.2, sigma=1.0),
        seed=20260810,
    )
    transcript = run_protocol(cfg)
    est = transcript.estimates
    target = pps_weak_value(PPSKey.PPS_1A, anomalous_projector(PPSKey.PPS_1A), cfg.noise, 0.0)
    worst_z = 0.0
    for key in PPSKey:
        j = anomalous_projector(key).index
        z = abs(est.h_w[key.index, j] - target) / est.h_w_se[key.index, j]
        worst_z = max(worst_z, z)
    return worst_z <= 4.0, f"worst anomalous-weak-value z-score {worst_z:.2f}"


def cmd_validate(_args) -> int:
    suites = [
        ("analytic oracle equivalence", _validate_oracle_grid),
        ("security thresholds", _validate_thresholds),
        ("estimator closure", _validate_closure),
        ("weak measurement back-action", _validate_backaction),
        ("simulation convergence", _validate_convergence),
    ]
    failed = 0
    for name, fn in suites:
        t0 = time.perf_counter()
        ok, detail = fn()
        dt = time.perf_counter() - t0
        status = "ok" if ok else "FAIL"
        print(f"{status:4s} {name}: {detail} [{dt:.2f}s]")
        failed += 0 if ok else 1
    return EXIT_OK if failed == 0 else EXIT_ERROR


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wvqkd",
        description="Weak-value QKD simulator and analytics engine",
        epilog="Environment overrides: WVQKD_SEED, WVQKD_PHOTONS, WVQKD_MARGIN, "
        "WVQKD_EVE, WVQKD_OUT, WVQKD_WORKERS, WVQKD_BACKEND.",
    )
    parser.add_argument("--version", action="version", version=f"wvqkd {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_tables = sub.add_parser("tables", help="analytic weak-value tables as CSV")
    p_tables.add_argument("--p-a", type=float, default=0.0, dest="p_a")
    p_tables.add_argument("--p-b", type=float, default=0.0, dest="p_b")
    p_tables.add_argument("--dark", type=float, default=0.0)
    p_tables.add_argument("--out", type=Path, default=None, help="CSV file (default stdout)")
    p_tables.set_defaults(func=cmd_tables)

    run_flags = argparse.ArgumentParser(add_help=False)
    run_flags.add_argument("--config", type=Path, default=None)
    run_flags.add_argument("--seed", type=int, default=None)
    run_flags.add_argument("--out", type=Path, default=None, help="output directory")
    run_flags.add_argument("--photons", type=int, default=None, help="block size 2N")
    run_flags.add_argument(
        "--eve", choices=[k.value for k in EveKind], default=None
    )
    run_flags.add_argument("--margin", type=float, default=None, help="SE multiplier")

    p_sim = sub.add_parser("simulate", parents=[run_flags], help="run the protocol once")
    p_sim.set_defaults(func=cmd_simulate)
    p_att = sub.add_parser(
        "attack", parents=[run_flags], help="run with an eavesdropper (default intercept-resend)"
    )
    p_att.set_defaults(func=cmd_attack)
    p_sweep = sub.add_parser("sweep", parents=[run_flags], help="parameter sweep to CSV")
    p_sweep.set_defaults(func=cmd_sweep)

    p_val = sub.add_parser("validate", help="self-check analytic oracles and convergence")
    p_val.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DeadChannelError, DegenerateCouplingError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
