"""Command-line surface: simulate, correlate, tomo, allocate, jsi, run.

Every command is deterministic given (config, seed). Exit codes: 0 success,
2 validation/configuration failure, 3 sampler convergence failure.
"""

import argparse
import csv
import hashlib
import json
import sys
from pathlib import Path

from . import allocation as alloc_mod
from .config import load_config
from .coincidence import correlate
from .errors import ChainNotConverged, ConfigError, QlanError
from .experiment import (_setting_for, _tomography_labels, calibrate_link,
                         run_experiment, run_rsp_task, simulate_link_setting)
from .polarization import label_setting
from .rsp import RspTask
from .source import car, jsi_matrix
from .timetag import read_stream, write_stream
from .tomography import MeasurementRecord, sample_posterior, summarize_link

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_CONVERGENCE = 3

REPORT_COLUMNS = ["allocation", "link", "channels", "kind", "rate_hz",
                  "fidelity", "fidelity_std", "log_negativity",
                  "log_negativity_std", "ebit_rate", "ebit_rate_std"]


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _write_json(path, payload):
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def cmd_simulate(args):
    config = load_config(args.config)
    if args.seed is not None:
        config.seed = args.seed
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    labels = _tomography_labels(config)
    manifest = {"config": str(args.config), "seed": config.seed,
                "files": {}, "links": {}}
    for link in sorted(config.allocation.links):
        calibration = calibrate_link(config, link)
        manifest["links"][link] = {
            "delay_bins": calibration.delay_bins,
            "compensation_x_deg": round(calibration.x_deg, 3),
        }
        for l1 in labels:
            for l2 in labels:
                settings = (_setting_for(l1, 0, calibration.x_deg),
                            _setting_for(l2, 1, calibration.x_deg))
                s1, s2 = simulate_link_setting(
                    config, link, settings, config.plan.integration_s,
                    config.child_seed(link, "tomo", l1, l2))
                for stream, tag in ((s1, l1 + l2 + "_1"), (s2, l1 + l2 + "_2")):
                    name = f"{link}_{tag}.qltt"
                    write_stream(stream, out / name)
                    manifest["files"][name] = _sha256(out / name)
    _write_json(out / "manifest.json", manifest)
    print(f"wrote {len(manifest['files'])} stream files to {out}")
    return EXIT_OK


def cmd_correlate(args):
    a = read_stream(args.stream_a)
    b = read_stream(args.stream_b)
    result = correlate(a, b, window_ns=args.window_ns, span_bins=args.span_bins)
    payload = {
        "delay_bins": result.delay_bins,
        "window_ns": result.window_ns,
        "raw_coincidences": result.raw_coincidences,
        "accidentals": result.accidentals,
        "integration_s": result.integration_s,
        "raw_rate_hz": result.raw_rate,
        "accidental_rate_hz": result.accidental_rate,
        "corrected_rate_hz": result.corrected_rate,
    }
    print(json.dumps(payload, indent=2, sort_keys=True))
    if args.histogram_csv:
        from .coincidence import delay_histogram
        hist = delay_histogram(a, b, args.span_bins)
        with open(args.histogram_csv, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["delay_bins", "counts"])
            for lag, count in zip(hist.lags, hist.counts):
                writer.writerow([int(lag), int(count)])
    if args.out:
        _write_json(args.out, payload)
    return EXIT_OK


def cmd_tomo(args):
    records = []
    with open(args.counts_csv, newline="") as fh:
        for row in csv.DictReader(fh):
            s1 = label_setting(row["setting1"], float(row.get("x1", 0.0) or 0.0))
            count = float(row["count"])
            if row.get("setting2"):
                s2 = label_setting(row["setting2"], float(row.get("x2", 0.0) or 0.0))
                records.append(MeasurementRecord((s1, s2), count))
            else:
                records.append(MeasurementRecord(s1, count))
    ensemble = sample_posterior(records, num_samples=args.samples, seed=args.seed)
    report = summarize_link(ensemble, args.rate, link=args.link)
    payload = report.as_dict()
    print(json.dumps(payload, indent=2, sort_keys=True))
    if args.out:
        _write_json(args.out, payload)
    if args.metric_dump:
        from .quantum import fidelity_with_pure, ket_psi_plus, log_negativity
        target = ket_psi_plus() if ensemble.dim == 4 else None
        with open(args.metric_dump, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["sample", "fidelity", "log_negativity"])
            for i, sample in enumerate(ensemble.samples):
                en = log_negativity(sample) if ensemble.dim == 4 else ""
                fid = fidelity_with_pure(sample, target) if target is not None else ""
                writer.writerow([i, fid, en])
    return EXIT_OK


def cmd_allocate(args):
    config = load_config(args.config)
    links = sorted(config.allocation.links)
    result = alloc_mod.optimize(
        args.objective, config.channels,
        [config.budgets[lk] for lk in links], links,
        window_s=config.plan.window_ns * 1e-9,
        fidelity_floor=args.fidelity_floor)
    predictions = alloc_mod.predicted_link_rates(
        result, config.channels, [config.budgets[lk] for lk in links],
        window_s=config.plan.window_ns * 1e-9)
    print(f"{'link':<8}{'channels':<16}{'rate/s':>10}{'fidelity':>10}{'R_E':>10}")
    for link in links:
        pred = predictions.get(link)
        channels = ",".join(str(c) for c in result.channels_for(link)) or "-"
        if pred is None:
            print(f"{link:<8}{channels:<16}{'-':>10}{'-':>10}{'-':>10}")
            continue
        print(f"{link:<8}{channels:<16}{pred.coincidence_rate:>10.1f}"
              f"{pred.fidelity:>10.3f}{pred.predicted_re:>10.1f}")
    if args.out:
        payload = {
            "objective": args.objective,
            "assignment": {str(ch): result.assignment.get(ch)
                           for ch in sorted(result.assignment)},
            "predictions": {lk: vars(predictions[lk]) for lk in predictions},
        }
        _write_json(args.out, payload)
    return EXIT_OK


def cmd_jsi(args):
    config = load_config(args.config)
    matrix = jsi_matrix(config.channels, config.jsi_integration_s,
                        config.jsi_detector_effs,
                        accidental_floor_hz=config.jsi_accidental_floor_hz,
                        poisson=not args.expected,
                        seed=config.child_seed("jsi", args.seed or 0))
    ratio = car(matrix)
    if args.out_csv:
        with open(args.out_csv, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["signal\\idler"] + [str(i + 1) for i in range(matrix.shape[1])])
            for i, row in enumerate(matrix):
                writer.writerow([i + 1] + [f"{v:.1f}" for v in row])
    print(json.dumps({"car": ratio, "integration_s": config.jsi_integration_s},
                     indent=2))
    return EXIT_OK


def _report_rows(name, results):
    rows = []
    for link in sorted(results):
        res = results[link]
        if res.error:
            continue
        for kind, report in (("raw", res.report_raw), ("subtracted", res.report_sub)):
            rows.append([name, link,
                         ";".join(str(c) for c in report.channels), kind,
                         f"{report.coincidence_rate:.2f}",
                         f"{report.fidelity:.4f}", f"{report.fidelity_std:.4f}",
                         f"{report.log_negativity:.4f}",
                         f"{report.log_negativity_std:.4f}",
                         f"{report.ebit_rate:.2f}", f"{report.ebit_rate_std:.2f}"])
    return rows


def cmd_run(args):
    config = load_config(args.config)
    if args.seed is not None:
        config.seed = args.seed
    if args.samples:
        from dataclasses import replace
        config.plan = replace(config.plan, num_samples=args.samples)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    results = run_experiment(config)
    failures = {lk: r.error for lk, r in results.items() if r.error}
    manifest = {"config": str(args.config), "name": config.name,
                "seed": config.seed, "links": {}, "failures": failures}
    for link, res in results.items():
        if res.error:
            continue
        manifest["links"][link] = {
            "delay_bins": res.calibration.delay_bins,
            "compensation_x_deg": round(res.calibration.x_deg, 3),
            "singles_rates_hz": [round(s, 1) for s in res.singles_rates],
        }
        _write_json(out / f"link_{link}_raw.json", res.report_raw.as_dict())
        _write_json(out / f"link_{link}_subtracted.json", res.report_sub.as_dict())
    with open(out / "reports.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(REPORT_COLUMNS)
        writer.writerows(_report_rows(config.name, results))
    rsp_payload = []
    for task_cfg in config.rsp_tasks:
        res = results.get(task_cfg.link)
        if res is None or res.error:
            continue
        task = RspTask(task_cfg.link, task_cfg.sender, task_cfg.projection,
                       task_cfg.target)
        rsp = run_rsp_task(config, task, res)
        rsp_payload.append({
            "link": rsp.link, "sender": rsp.sender,
            "projection": rsp.projection_label, "target": rsp.target_label,
            "fidelity_vs_target": rsp.fidelity_vs_target,
            "fidelity_vs_target_std": rsp.fidelity_vs_target_std,
            "fidelity_vs_prediction": rsp.fidelity_vs_prediction,
            "fidelity_vs_prediction_std": rsp.fidelity_vs_prediction_std,
            "post_selected_counts": rsp.post_selected_counts,
        })
        with open(out / f"rsp_{rsp.link}_poincare.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["S1", "S2", "S3"])
            for s in rsp.sample_bloch:
                writer.writerow([f"{v:.6f}" for v in s])
    if rsp_payload:
        _write_json(out / "rsp.json", rsp_payload)
    _write_json(out / "manifest.json", manifest)
    print(f"run complete: reports in {out}")
    if failures:
        for link, error in failures.items():
            print(f"  link {link} failed: {error}", file=sys.stderr)
        return EXIT_CONVERGENCE if "ChainNotConverged" in str(failures) else EXIT_VALIDATION
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="qlan",
        description="Three-node flex-grid entanglement network simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write QLTT streams for every setting")
    p.add_argument("-c", "--config", required=True)
    p.add_argument("-o", "--out", required=True)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("correlate", help="correlate two QLTT files")
    p.add_argument("stream_a")
    p.add_argument("stream_b")
    p.add_argument("--window-ns", type=float, default=10.0)
    p.add_argument("--span-bins", type=int, default=2000)
    p.add_argument("--histogram-csv")
    p.add_argument("--out")
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("tomo", help="Bayesian reconstruction from a counts CSV")
    p.add_argument("counts_csv")
    p.add_argument("--rate", type=float, default=0.0,
                   help="coincidence rate (Hz) for the R_E column")
    p.add_argument("--samples", type=int, default=1024)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--link", default="")
    p.add_argument("--out")
    p.add_argument("--metric-dump")
    p.set_defaults(func=cmd_tomo)

    p = sub.add_parser("allocate", help="optimize the channel allocation")
    p.add_argument("-c", "--config", required=True)
    p.add_argument("--objective", default="max-min-re",
                   choices=["max-min-re", "max-total-re", "min-fidelity-floor"])
    p.add_argument("--fidelity-floor", type=float)
    p.add_argument("--out")
    p.set_defaults(func=cmd_allocate)

    p = sub.add_parser("jsi", help="joint spectral intensity and CAR")
    p.add_argument("-c", "--config", required=True)
    p.add_argument("--expected", action="store_true",
                   help="emit expected counts instead of a Poisson sample")
    p.add_argument("--seed", type=int)
    p.add_argument("--out-csv")
    p.set_defaults(func=cmd_jsi)

    p = sub.add_parser("run", help="full pipeline: simulate, correlate, reconstruct")
    p.add_argument("-c", "--config", required=True)
    p.add_argument("-o", "--out", default="qlan-run")
    p.add_argument("--seed", type=int)
    p.add_argument("--samples", type=int)
    p.set_defaults(func=cmd_run)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ChainNotConverged as exc:
        print(f"convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except QlanError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
