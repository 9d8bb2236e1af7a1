"""Command-line front end.

Exit codes: 0 success, 2 usage or validation error, 3 verification failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import circuits, eckart, series, simulate, walsh
from .jsonio import dumps

log = logging.getLogger("walsh_synth")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_VERIFY = 3
VERIFY_TOLERANCE = 1e-9
VERIFY_MAX_QUBITS = 12


class UsageError(Exception):
    pass


def _threads(args) -> int:
    if args.threads is not None:
        return args.threads
    return int(os.environ.get("WALSH_SYNTH_THREADS", "1"))


def cmd_wht(args) -> int:
    if args.direction == "forward":
        f = walsh.read_function_csv(args.input)
        walsh.write_spectrum_csv(walsh.forward_wht(f), args.output)
    else:
        a = walsh.read_spectrum_csv(args.input)
        f = walsh.inverse_wht(a)
        f = walsh.SampledFunction(f.values, args.x_min, args.length)
        walsh.write_function_csv(f, args.output)
    return EXIT_OK


def cmd_approx(args) -> int:
    f = walsh.read_function_csv(args.input)
    spec = walsh.forward_wht(f)
    if args.k is not None:
        if not 0 <= args.k <= f.n:
            raise UsageError(f"--k must lie in [0, {f.n}]")
        s = series.partial_series(spec, args.k)
        mode = {"k": args.k}
    else:
        if args.epsilon_rel is not None:
            if not 0.0 <= args.epsilon_rel <= 1.0:
                raise UsageError("--epsilon-rel takes a fraction in [0, 1]")
            eps = args.epsilon_rel * float(np.max(np.abs(f.values)))
            mode = {"epsilon_rel": args.epsilon_rel, "epsilon_abs": eps}
        else:
            if args.epsilon_abs < 0:
                raise UsageError("--epsilon-abs must be non-negative")
            eps = args.epsilon_abs
            mode = {"epsilon_abs": eps}
        s = series.threshold_series(spec, eps, samples=f)
    achieved = series.reconstruction_error(s, f)
    series.save_series(s, args.output, achieved_error=achieved,
                       required_qubits=series.required_qubits(s) if len(s) else 1,
                       truncation=mode, n_terms=len(s))
    print(f"{len(s)} terms, required qubits {s.n_required}, sup error {achieved:.6g}")
    return EXIT_OK


def cmd_synth(args) -> int:
    s = series.load_series(args.input)
    n = args.qubits if args.qubits is not None else s.n_required
    if n < s.n_required:
        raise UsageError(f"series needs {s.n_required} qubits, --qubits={n}")
    g = circuits.synthesize(s, n, args.mode)
    out = Path(args.output)
    if args.format == "json" or out.suffix == ".json":
        out.write_text(circuits.circuit_to_json(g) + "\n")
    else:
        out.write_text(circuits.circuit_to_text(g))
    counts = circuits.gate_counts(g).as_dict()
    report = {"mode": args.mode, "qubits": n, "counts": counts}
    status = EXIT_OK
    if args.verify:
        if n > VERIFY_MAX_QUBITS:
            report["verification"] = {"skipped": f"n > {VERIFY_MAX_QUBITS}"}
        else:
            expected = np.exp(1j * s.evaluate(n))
            deviation = float(np.max(np.abs(circuits.circuit_diagonal(g) - expected)))
            ok = deviation <= VERIFY_TOLERANCE
            report["verification"] = {"max_deviation": deviation, "passed": ok}
            if not ok:
                print(f"verification failed: max deviation {deviation:.3g}", file=sys.stderr)
                status = EXIT_VERIFY
    counts_path = Path(args.counts) if args.counts else out.with_name(out.stem + ".counts.json")
    counts_path.write_text(dumps(report) + "\n")
    print(f"{args.mode}: {counts['total']} gates ({counts['rotations']} rotations, "
          f"{counts['cnots']} CNOTs)")
    return status


def cmd_simulate(args) -> int:
    import json

    doc = json.loads(Path(args.config).read_text())
    config, initial = simulate.config_from_dict(doc)
    psi0 = eckart.gaussian_packet(float(initial.get("x0", -3.0)), float(initial.get("p0", 15.0)),
                                  float(initial.get("sigma", 0.5)), config.n,
                                  config.x_min, config.length)
    snaps = simulate.evolve(config, psi0)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    simulate.write_trajectory_csv(snaps, simulate.snapshot_steps(config), out / "trajectory.csv")
    final = snaps[-1]
    summary = {"n": config.n, "steps": config.steps, "t": config.t,
               "final_norm": final.norm, "snapshots": len(snaps)}
    if "reference" in doc:
        ref_doc = dict(doc)
        ref_doc.pop("reference")
        ref_doc.update(doc["reference"])
        ref_config, _ = simulate.config_from_dict(ref_doc)
        ref0 = eckart.gaussian_packet(float(initial.get("x0", -3.0)), float(initial.get("p0", 15.0)),
                                      float(initial.get("sigma", 0.5)), ref_config.n,
                                      ref_config.x_min, ref_config.length)
        ref = simulate.evolve(ref_config, ref0)[-1]
        summary["fidelity"] = simulate.fidelity(final, ref)
        summary["reference"] = doc["reference"]
        summary["fidelity_alignment"] = "dyadic block sum of the finer state's amplitudes / sqrt(block)"
    (out / "summary.json").write_text(dumps(summary) + "\n")
    return EXIT_OK


def cmd_bench(args) -> int:
    if args.scenario:
        scenario = eckart.load_scenario(args.scenario)
    else:
        scenario = eckart.PRESETS[args.preset]()
    report = eckart.run_benchmark(scenario, threads=_threads(args))
    path = eckart.write_report(report, args.output)
    for r in report.rungs:
        print(f"n={r.n}: n_W={r.n_w} F={r.fidelity:.4f} gates={r.gate_counts['optimized']['total']}"
              + (f"  [{'; '.join(r.flags)}]" if r.flags else ""))
    print(f"report written to {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="walsh-synth", description=__doc__.splitlines()[0])
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads (default: $WALSH_SYNTH_THREADS or 1)")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    w = sub.add_parser("wht", help="forward or inverse Walsh-Fourier transform")
    w.add_argument("input")
    w.add_argument("--direction", choices=("forward", "inverse"), default="forward")
    w.add_argument("-o", "--output", required=True)
    w.add_argument("--x-min", type=float, default=0.0, help="domain start for inverse output")
    w.add_argument("--length", type=float, default=1.0, help="domain length for inverse output")
    w.set_defaults(func=cmd_wht)

    a = sub.add_parser("approx", help="truncate a sampled function to a Walsh series")
    a.add_argument("input")
    mode = a.add_mutually_exclusive_group(required=True)
    mode.add_argument("--epsilon-rel", type=float, help="sup-norm budget as a fraction of max|f|")
    mode.add_argument("--epsilon-abs", type=float, help="absolute sup-norm budget")
    mode.add_argument("--k", type=int, help="keep the 2**k-term partial series")
    a.add_argument("-o", "--output", required=True)
    a.set_defaults(func=cmd_approx)

    s = sub.add_parser("synth", help="synthesize the diagonal-unitary circuit of a series")
    s.add_argument("input")
    s.add_argument("--mode", choices=("paley", "sequency", "optimized"), default="optimized")
    s.add_argument("--qubits", type=int, default=None)
    s.add_argument("--verify", action="store_true")
    s.add_argument("--format", choices=("text", "json"), default="text")
    s.add_argument("--counts", default=None, help="counts JSON path")
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_synth)

    m = sub.add_parser("simulate", help="split-operator evolution from a JSON config")
    m.add_argument("config")
    m.add_argument("-o", "--output", required=True)
    m.set_defaults(func=cmd_simulate)

    b = sub.add_parser("bench", help="Eckart-barrier fidelity benchmark")
    b.add_argument("scenario", nargs="?")
    b.add_argument("--preset", choices=sorted(eckart.PRESETS), default="standard")
    b.add_argument("-o", "--output", required=True)
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
