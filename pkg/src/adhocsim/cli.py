"""Experiment driver: analysis-curve generation and simulation sweeps.

Subcommands emit plot-ready long-format CSV with a reproducibility header
(config hash, seeds, version):

* ``fig2``  fixed-rate and ideal-adaptive link throughput vs average SNR
* ``fig3``  optimal/suboptimal throughput vs estimate NMSE
* ``fig5``  prediction vs outdated-sample NMSE over Doppler
* ``fig6``  network sweep over (vmax, L, scheme) with aggregation
* ``run``   single scenario -> metrics CSV
* ``sweep`` custom scenario sweep

Exit codes: 0 success, 2 usage error, 3 partial sweep failure.
"""

import argparse
import csv
import hashlib
import json
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__, linkcalc, mac, phy80211b as phy, predictor, simcore

USAGE_ERROR = 2
PARTIAL_FAILURE = 3


_NON_REPRO_KEYS = ("func", "out", "events", "aggregate_out", "workers")


def _meta(args_dict, seeds=()):
    clean = {
        k: v
        for k, v in args_dict.items()
        if k not in _NON_REPRO_KEYS and not callable(v)
    }
    blob = json.dumps(clean, sort_keys=True, default=str)
    return {
        "config_hash": hashlib.sha256(blob.encode()).hexdigest()[:16],
        "config": blob,
        "seeds": ",".join(str(s) for s in seeds),
        "version": __version__,
    }


def _write_rows(path, columns, rows, meta):
    with open(path, "w", newline="") as fh:
        for key, val in meta.items():
            fh.write(f"# {key}: {val}\n")
        w = csv.DictWriter(fh, fieldnames=columns)
        w.writeheader()
        for row in rows:
            w.writerow(row)


def _parse_range(text):
    """'lo:hi:n' inclusive linspace, or comma list, or single value."""
    if ":" in text:
        lo, hi, n = text.split(":")
        lo, hi, n = float(lo), float(hi), int(n)
        if n < 1 or hi < lo:
            raise ValueError(f"bad range {text!r}")
        return list(np.linspace(lo, hi, n))
    return [float(tok) for tok in text.split(",") if tok.strip()]


# ---- analysis figures ---------------------------------------------------------


def cmd_fig2(args):
    snrs_db = _parse_range(args.snr_db)
    if not snrs_db:
        raise ValueError("empty SNR range")
    rows = []
    for db in snrs_db:
        gbar = 10.0 ** (db / 10.0)
        for rate in phy.RATES:
            r = linkcalc.fixed_rate_throughput(rate, gbar, args.nbits)
            rows.append(_curve_row(db, 1, 0.0, "FIXED", rate.id, r))
        r = linkcalc.ideal_adaptive_throughput(gbar, args.relays, args.nbits)
        rows.append(_curve_row(db, args.relays, 0.0, "IDEAL", "", r))
    meta = _meta(vars(args))
    meta["notes"] = "durations cover data+ack airtime only; contention time excluded"
    linkcalc.write_curves_csv(args.out, rows, meta)
    return 0


def cmd_fig3(args):
    nmses = _parse_range(args.nmse)
    if any(not (0.0 <= s < 1.0 + 1e-12) for s in nmses):
        raise ValueError("NMSE grid must lie in [0, 1]")
    gbar = 10.0 ** (args.snr_db / 10.0)
    rows = []
    for s2 in nmses:
        q = linkcalc.CsiQuality.from_nmse(min(s2, 1.0))
        for metric in ("OPTIMAL", "SUBOPTIMAL"):
            r = linkcalc.avg_imperfect_throughput(gbar, args.relays, q, metric, args.nbits)
            rows.append(_curve_row(args.snr_db, args.relays, s2, metric, r.rate, r))
    meta = _meta(vars(args))
    meta["notes"] = "durations cover data+ack airtime only; contention time excluded"
    linkcalc.write_curves_csv(args.out, rows, meta)
    return 0


def _curve_row(db, L, nmse, method, rate, result):
    return {
        "avg_snr_db": f"{db:.4f}",
        "L": L,
        "nmse": f"{nmse:.6g}",
        "method": method,
        "rate": rate,
        "throughput_pps": f"{result.packets_per_second:.6f}",
        "quad_err": f"{result.quadrature_error:.3e}",
    }


def cmd_fig5(args):
    fds = _parse_range(args.fd)
    if any(fd <= 0 for fd in fds):
        raise ValueError("Doppler grid must be positive")
    rows = []
    age_rts = mac.rts_csi_age(args.relays)
    for fd in fds:
        rows.append(
            {
                "fd_hz": f"{fd:.4f}",
                "tau_s": f"{age_rts:.6e}",
                "scheme": "RTS_CSI",
                "nmse": f"{predictor.outdated_mse(fd, age_rts):.6e}",
            }
        )
        for slot in range(1, args.relays + 1):
            tau = mac.cts_delay(args.relays, slot)
            cfg = predictor.PredictorConfig(pilot_snr_db=args.pilot_snr_db, horizon_s=tau)
            rows.append(
                {
                    "fd_hz": f"{fd:.4f}",
                    "tau_s": f"{tau:.6e}",
                    "scheme": f"CTS_CSI_slot{slot}",
                    "nmse": f"{predictor.analytic_mse(fd, cfg):.6e}",
                }
            )
    _write_rows(args.out, ["fd_hz", "tau_s", "scheme", "nmse"], rows, _meta(vars(args)))
    return 0


# ---- simulation ------------------------------------------------------------------


def _scenario_from_args(args, **overrides):
    from dataclasses import asdict

    cfg_kwargs = {}
    if getattr(args, "config", None):
        cfg_kwargs = asdict(simcore.parse_config_file(args.config))
    for key in (
        "node_count", "arena_m", "v_max_mps", "relay_count", "csi_scheme",
        "flow_count", "packet_interval_s", "sim_end_s", "seed", "tx_power_w",
    ):
        val = getattr(args, key, None)
        if val is not None:
            cfg_kwargs[key] = val
    cfg_kwargs.update(overrides)
    # short runs: pull the traffic-start window inside the horizon
    end = cfg_kwargs.get("sim_end_s", 300.0)
    if "warmup_end_s" not in cfg_kwargs:
        cfg_kwargs["warmup_end_s"] = min(60.0, end / 2.0)
    if "warmup_start_s" not in cfg_kwargs:
        cfg_kwargs["warmup_start_s"] = min(10.0, cfg_kwargs["warmup_end_s"])
    return simcore.ScenarioConfig(**cfg_kwargs)


def _run_cell(cfg):
    return simcore.run(cfg)


def cmd_run(args):
    cfg = _scenario_from_args(
        args, log_events=bool(args.events), log_trajectory=bool(args.trajectory)
    )
    metrics = simcore.run(cfg)
    meta = _meta(vars(args), seeds=[cfg.seed])
    _write_rows(args.out, simcore.METRICS_COLUMNS, [metrics.csv_row(cfg)], meta)
    if args.events:
        with open(args.events, "w") as fh:
            for t, node, event, frame, peer, snr in metrics.events:
                fh.write(f"{t:.9f} {node} {event} {frame} {peer} {snr:.6g}\n")
    if args.trajectory:
        with open(args.trajectory, "w") as fh:
            fh.write("t_s,node,x_m,y_m\n")
            for t, node, x, y in metrics.trajectory:
                fh.write(f"{t:.6f},{node},{x:.3f},{y:.3f}\n")
    return 0


def _sweep(cells, workers):
    """Run scenario cells in parallel; deterministic output order."""
    results = [None] * len(cells)
    failures = 0
    if workers <= 1 or len(cells) <= 1:
        for i, cfg in enumerate(cells):
            try:
                results[i] = simcore.run(cfg)
            except Exception as exc:  # pragma: no cover - defensive
                print(f"cell {i} failed: {exc}", file=sys.stderr)
                failures += 1
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futs = {i: pool.submit(_run_cell, cfg) for i, cfg in enumerate(cells)}
            for i, fut in futs.items():
                try:
                    results[i] = fut.result()
                except Exception as exc:  # pragma: no cover - defensive
                    print(f"cell {i} failed: {exc}", file=sys.stderr)
                    failures += 1
    return results, failures


def _emit_sweep(args, cells, results, failures, seeds):
    rows = [m.csv_row(cfg) for cfg, m in zip(cells, results) if m is not None]
    meta = _meta(vars(args), seeds=seeds)
    _write_rows(args.out, simcore.METRICS_COLUMNS, rows, meta)

    # aggregate per (vmax, L, scheme) cell across seeds
    agg_rows = []
    groups = {}
    for cfg, m in zip(cells, results):
        if m is None:
            continue
        groups.setdefault((cfg.v_max_mps, cfg.relay_count, cfg.csi_scheme), []).append(m)
    for (vmax, L, scheme), ms in sorted(groups.items()):
        if len(ms) < 2:
            continue
        agg = simcore.aggregate(ms)
        for metric, (mean, lo, hi) in agg.items():
            agg_rows.append(
                {
                    "vmax": vmax,
                    "L": L,
                    "scheme": scheme,
                    "metric": metric,
                    "mean": f"{mean:.6f}",
                    "ci_lo": f"{lo:.6f}",
                    "ci_hi": f"{hi:.6f}",
                    "n": len(ms),
                }
            )
    if args.aggregate_out:
        _write_rows(
            args.aggregate_out,
            ["vmax", "L", "scheme", "metric", "mean", "ci_lo", "ci_hi", "n"],
            agg_rows,
            meta,
        )
    return PARTIAL_FAILURE if failures else 0


def cmd_fig6(args):
    vmaxes = _parse_range(args.vmax)
    relays = [int(x) for x in _parse_range(args.relays)]
    schemes = [s.strip() for s in args.schemes.split(",") if s.strip()]
    seeds = list(range(args.seed, args.seed + args.runs))
    cells = []
    for scheme in schemes:
        for L in relays:
            for vmax in vmaxes:
                for seed in seeds:
                    cells.append(
                        _scenario_from_args(
                            args,
                            csi_scheme=scheme,
                            relay_count=L,
                            v_max_mps=vmax,
                            seed=seed,
                        )
                    )
    results, failures = _sweep(cells, args.workers)
    return _emit_sweep(args, cells, results, failures, seeds)


def cmd_sweep(args):
    seeds = [int(s) for s in _parse_range(args.seeds)]
    vmaxes = _parse_range(args.vmax) if args.vmax else [None]
    relays = [int(x) for x in _parse_range(args.relays)] if args.relays else [None]
    cells = []
    for L in relays:
        for vmax in vmaxes:
            for seed in seeds:
                overrides = {"seed": seed}
                if vmax is not None:
                    overrides["v_max_mps"] = vmax
                if L is not None:
                    overrides["relay_count"] = L
                cells.append(_scenario_from_args(args, **overrides))
    results, failures = _sweep(cells, args.workers)
    return _emit_sweep(args, cells, results, failures, seeds)


# ---- argument wiring ----------------------------------------------------------------


def _add_scenario_flags(p, with_scheme=True):
    p.add_argument("--config", help="scenario config file (key = value lines)")
    p.add_argument("--node-count", dest="node_count", type=int)
    p.add_argument("--arena-m", dest="arena_m", type=float)
    p.add_argument("--flow-count", dest="flow_count", type=int)
    p.add_argument("--packet-interval-s", dest="packet_interval_s", type=float)
    p.add_argument("--sim-end-s", dest="sim_end_s", type=float)
    p.add_argument("--tx-power-w", dest="tx_power_w", type=float)
    if with_scheme:
        p.add_argument("--csi-scheme", dest="csi_scheme", choices=["RTS_CSI", "CTS_CSI", "IDEAL"])


def build_parser():
    ap = argparse.ArgumentParser(prog="adhocsim", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fig2", help="link throughput vs average SNR curves")
    p.add_argument("--snr-db", default="0:30:121", help="lo:hi:n grid in dB")
    p.add_argument("--relays", type=int, default=1)
    p.add_argument("--nbits", type=int, default=phy.DATA_EXCHANGE_BITS)
    p.add_argument("--out", default="fig2.csv")
    p.set_defaults(func=cmd_fig2)

    p = sub.add_parser("fig3", help="throughput vs estimate NMSE curves")
    p.add_argument("--nmse", default="0.0001,0.001,0.005,0.01,0.05,0.1,0.3,0.5,0.7,0.9,0.99")
    p.add_argument("--snr-db", type=float, default=15.0)
    p.add_argument("--relays", type=int, default=1)
    p.add_argument("--nbits", type=int, default=phy.DATA_EXCHANGE_BITS)
    p.add_argument("--out", default="fig3.csv")
    p.set_defaults(func=cmd_fig3)

    p = sub.add_parser("fig5", help="prediction vs outdated CSI error curves")
    p.add_argument("--fd", default="5:300:60")
    p.add_argument("--relays", type=int, default=4)
    p.add_argument("--pilot-snr-db", dest="pilot_snr_db", type=float, default=30.0)
    p.add_argument("--out", default="fig5.csv")
    p.set_defaults(func=cmd_fig5)

    p = sub.add_parser("fig6", help="network sweep over (vmax, L, scheme)")
    p.add_argument("--vmax", default="1,10,20")
    p.add_argument("--relays", default="3,4")
    p.add_argument("--schemes", default="RTS_CSI,CTS_CSI,IDEAL")
    p.add_argument("--runs", type=int, default=10, help="seeds per cell")
    p.add_argument("--seed", type=int, default=1, help="first seed")
    p.add_argument("--workers", type=int, default=2)
    p.add_argument("--out", default="fig6_runs.csv")
    p.add_argument("--aggregate-out", dest="aggregate_out", default="fig6_agg.csv")
    _add_scenario_flags(p, with_scheme=False)
    # desk-scale load default: stresses capacity so CSI quality shows in throughput
    p.set_defaults(func=cmd_fig6, packet_interval_s=0.05)

    p = sub.add_parser("run", help="single scenario run")
    p.add_argument("--seed", type=int)
    p.add_argument("--v-max-mps", dest="v_max_mps", type=float)
    p.add_argument("--relay-count", dest="relay_count", type=int)
    p.add_argument("--out", default="run.csv")
    p.add_argument("--events", help="write an event transcript to this path")
    p.add_argument("--trajectory", help="write waypoint trajectory CSV to this path")
    _add_scenario_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="custom scenario sweep")
    p.add_argument("--seeds", default="1,2,3,4,5")
    p.add_argument("--vmax", default="")
    p.add_argument("--relays", default="")
    p.add_argument("--workers", type=int, default=2)
    p.add_argument("--out", default="sweep_runs.csv")
    p.add_argument("--aggregate-out", dest="aggregate_out", default="sweep_agg.csv")
    _add_scenario_flags(p)
    p.set_defaults(func=cmd_sweep)

    return ap


def main(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors already
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
