"""Command-line interface.

Every command prints one JSON summary line on stdout::

    {"command": ..., "status": "ok" | "validation_error" | "numerical_error", "code": ..., "result": {...}}

Exit codes: 0 success, 2 invalid input, 3 numerical failure, 64 usage error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from typing import Optional, Sequence

import numpy as np

from . import io
from .banks import BUILTIN_BANKS, HAAR2D_VARIANTS, make_bank
from .demos import DEMOS, grid_1d
from .errors import NumericalError, ValidationError
from .lattice import SupportBox, verify_bank
from .noise import NoiseSpec, SweepSetup, add_noise, difference_curve, error_report, monotonicity_check, reconstruct_robust, snr_sweep
from .prony import PronyInput, recover_sparse_trig
from .reconstruction import Tolerances, reconstruct
from .sampling import build_plan, validate_shift
from .signal import eval_signal_time, fourier_measure, measure_at, measure_on_plan, random_signal

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
EXIT_USAGE = 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}\n{self.format_usage()}")


def _summary(command: str, status: str, code: int, result: Optional[dict] = None, message: Optional[str] = None) -> str:
    out = {"command": command, "status": status, "code": code, "result": result or {}}
    if message is not None:
        out["message"] = message
    return json.dumps(out, sort_keys=True, default=_jsonable)


def _jsonable(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, complex):
        return [x.real, x.imag]
    return str(x)


def _bank(args):
    return make_bank(args.bank, getattr(args, "variant", None))


def _add_tolerances(p):
    p.add_argument("--tau-rank", type=float, default=1e-6)
    p.add_argument("--prony-rank", type=float, default=1e-8)
    p.add_argument("--tau-phase", type=float, default=1e-6)
    p.add_argument("--tau-amp", type=float, default=1e-10)
    p.add_argument("--eps-verify", type=float, default=1e-6)
    p.add_argument("--no-refine", action="store_true", help="disable the lattice refit fallback in Prony")


def _tolerances(args) -> Tolerances:
    return Tolerances(args.tau_rank, args.prony_rank, args.tau_phase, args.tau_amp, args.eps_verify, not args.no_refine)


def _default_grid(n: int, per_axis: int) -> np.ndarray:
    axis = 2 * np.pi * np.arange(per_axis) / per_axis
    mesh = np.meshgrid(*([axis] * n), indexing="ij")
    return np.stack([g.ravel() for g in mesh], axis=-1)


# ---- commands ---------------------------------------------------------------

def cmd_banks(args) -> dict:
    rows = []
    for name in BUILTIN_BANKS:
        variants = HAAR2D_VARIANTS if name == "haar2d" else (None,)
        for v in variants:
            b = make_bank(name, v)
            rows.append({"name": name, "variant": v, "n": b.n, "r": b.r, "M": b.M, "D": b.scheme.D.tolist()})
    for row in rows:
        tag = row["name"] + (f" ({row['variant']})" if row["variant"] else "")
        print(f"{tag:18s} n={row['n']} r={row['r']} M={row['M']}", file=sys.stderr)
    return {"banks": rows}


def cmd_verify_bank(args) -> dict:
    bank = _bank(args)
    per_axis = args.grid if args.grid else (64 if bank.n == 1 else 8)
    rep = verify_bank(bank, _default_grid(bank.n, per_axis), tau=args.tau, tau_rank=args.tau_rank)
    summary = rep.summary()
    if args.out:
        io.write_json(args.out, {"bank": bank.ident, **summary})
    if not rep.passed:
        raise NumericalError(f"bank {bank.name} failed verification: {json.dumps(summary, default=_jsonable)}")
    return summary


def cmd_plan(args) -> dict:
    bank = _bank(args)
    h = io.parse_vector(args.h)
    s = io.parse_int_vector(args.sparsity)
    box = io.parse_box(args.box, bank.n) if args.box else SupportBox.cube(0, 16, bank.n)
    allowed = None
    if args.grid_file:
        m = io.read_measurements(args.grid_file)
        allowed = m.omega
    if args.check != "none":
        rep = validate_shift(h, mode=args.check, box=box if args.check == "box" else None)
        if not rep.passed:
            raise ValidationError(f"shift vector rejected by {args.check} check: {rep.to_dict()}")
    plan = build_plan(bank, s, h, radius=args.radius, tau_rank=args.tau_rank, allowed=allowed, box=box)
    io.write_plan(args.out, plan)
    return {"plan": args.out, "hash": plan.hash, "points": int(len(plan.omega)), "raw": plan.raw_count, "bound": plan.bound}


def cmd_synth(args) -> dict:
    if args.demo:
        demo = DEMOS[args.demo]()
        io.write_signal(args.out, demo.signal, demo.bank)
        return {"signal": args.out, "demo": args.demo, "sparsity": list(demo.signal.sparsity())}
    plan = io.read_plan(args.plan)
    bank = plan.bank
    box = io.parse_box(args.box, bank.n) if args.box else plan.box
    if box is None:
        raise ValidationError("no support box: pass --box or build the plan with one")
    sig = random_signal(bank, plan.s, box, seed=args.seed, full=not args.partial)
    io.write_signal(args.out, sig, bank)
    return {"signal": args.out, "seed": args.seed, "sparsity": list(sig.sparsity())}


def _signal_and_bank(path):
    sig, ident = io.read_signal(path)
    if ident is None:
        raise ValidationError(f"{path}: signal file does not name its bank")
    return sig, io.bank_from_ident(ident)


def cmd_measure(args) -> dict:
    sig, bank = _signal_and_bank(args.signal)
    if args.at and not args.plan:
        freqs = io.read_measurements(args.at).omega
        m = measure_at(sig, bank, freqs)
    else:
        plan = io.read_plan(args.plan or "plan.json")
        if plan.bank.ident != bank.ident:
            raise ValidationError("signal and plan use different banks")
        m = measure_on_plan(sig, plan.bank, plan)
    if args.snr is not None and not math.isinf(args.snr):
        m = add_noise(m, NoiseSpec(args.snr, args.noise_seed))
    io.write_measurements(args.out, m)
    return {"measurements": args.out, "points": len(m), "plan": m.plan_hash}


def cmd_reconstruct(args) -> dict:
    plan = io.read_plan(args.plan)
    bank = plan.bank
    m = io.read_measurements(args.measurements)
    box = io.parse_box(args.box, bank.n) if args.box else plan.box
    if box is None:
        raise ValidationError("no support box: pass --box or build the plan with one")
    tol = _tolerances(args)
    if args.robust:
        truth = _signal_and_bank(args.truth)[0] if args.truth else None
        sig, rep = reconstruct_robust(m, plan, bank, box, tol, truth=truth)
        io.write_signal(args.out, sig, bank)
        return {"signal": args.out, "robust": True, **rep.to_dict()}
    try:
        res = reconstruct(m, plan, bank, box, tol, details=True)
    except NumericalError as exc:
        diag = getattr(exc, "diagnostics", None)
        if diag:
            print(json.dumps(diag, default=_jsonable, indent=2), file=sys.stderr)
        raise
    io.write_signal(args.out, res.signal, bank)
    return {"signal": args.out, "mismatch": res.mismatch, "sparsity": list(res.signal.sparsity())}


def cmd_prony(args) -> dict:
    samples, direction, s = io.read_samples(args.samples)
    if args.direction:
        direction = io.parse_vector(args.direction)
    if direction is None:
        raise ValidationError("no phase direction: pass --direction or put it in the samples file")
    if args.sparsity is not None and args.sparsity != s:
        raise ValidationError(f"samples file holds {2 * s} rows, which means sparsity {s}, not {args.sparsity}")
    box = io.parse_box(args.box, len(direction))
    out = recover_sparse_trig(
        PronyInput(samples, direction, s, box),
        tau_rank=args.prony_rank,
        tau_phase=args.tau_phase,
        tau_amp=args.tau_amp,
        nearest=args.nearest,
        refine=not args.no_refine,
    )
    atoms = [{"k": k.tolist(), "re": a.real.tolist(), "im": a.imag.tolist()} for k, a in zip(out.locations, out.amplitudes)]
    io.write_json(args.out, {"format": "prony-wavelets/prony/1", "atoms": atoms, "residual": out.residual})
    return {"out": args.out, "support": [k["k"] for k in atoms], "residual": out.residual}


def cmd_noise_sweep(args) -> dict:
    h = tuple(io.parse_vector(args.h))
    bank = make_bank(args.bank, args.variant)
    box = io.parse_box(args.box, bank.n)
    allowed = None
    if args.grid_file:
        allowed = io.read_measurements(args.grid_file).omega
    elif args.demo_grid:
        allowed = grid_1d()
    setup = SweepSetup(args.bank, args.variant, io.parse_int_vector(args.sparsity), h, (box.lo, box.hi), allowed, _tolerances(args))
    snrs = io.parse_range(args.snr)
    rows = snr_sweep(setup, snrs, trials=args.trials, seed=args.seed, workers=args.workers)
    io.write_table(args.out, ["snr_db", "trials", "successes", "failures", "rate"],
                   [[float(r.snr_db), r.trials, r.successes, r.failures, float(r.rate)] for r in rows])
    mono = monotonicity_check(rows)
    return {"out": args.out, "rates": {str(r.snr_db): r.rate for r in rows}, "monotone": mono.to_dict()}


def cmd_export_plot(args) -> dict:
    sig, bank = _signal_and_bank(args.signal)
    grid = io.parse_grid(args.grid)
    if args.what == "time":
        t = grid if bank.n > 1 else grid[:, 0]
        vals = eval_signal_time(sig, bank, t)
        header = [f"t_{i + 1}" for i in range(bank.n)] + ["value"]
        rows = [list(map(float, x)) + [float(v)] for x, v in zip(grid, vals)]
    elif args.what == "fourier":
        vals = fourier_measure(sig, bank, grid)
        header = [f"xi_{i + 1}" for i in range(bank.n)] + ["re", "im", "abs"]
        rows = [list(map(float, x)) + [float(v.real), float(v.imag), float(abs(v))] for x, v in zip(grid, vals)]
    elif args.what == "error":
        if not args.recovered:
            raise ValidationError("--what error needs --recovered")
        rec, _ = _signal_and_bank(args.recovered)
        t = grid if bank.n > 1 else grid[:, 0]
        data = difference_curve(sig, rec, bank, t)
        header = [f"t_{i + 1}" for i in range(bank.n)] + ["original", "recovered", "difference"]
        rows = [list(map(float, r)) for r in data]
        report = error_report(sig, rec, bank, t)
        io.write_table(args.out, header, rows)
        return {"out": args.out, "points": len(rows), "report": report}
    else:
        raise ValidationError(f"unknown plot {args.what!r}")
    io.write_table(args.out, header, rows)
    return {"out": args.out, "points": len(rows)}


# ---- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="prony-wavelets", description="Sparse wavelet signal recovery from Fourier samples.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    q = sub.add_parser("banks", help="list built-in wavelet banks")
    q.set_defaults(func=cmd_banks)

    q = sub.add_parser("verify-bank", help="check refinement, wavelet, orthogonality and rank relations")
    q.add_argument("--bank", required=True, choices=BUILTIN_BANKS)
    q.add_argument("--variant", choices=HAAR2D_VARIANTS)
    q.add_argument("--grid", type=int, help="points per axis on [0, 2 pi) (default 64 in 1D, 8 in 2D)")
    q.add_argument("--tau", type=float, default=1e-8)
    q.add_argument("--tau-rank", type=float, default=1e-6)
    q.add_argument("--out")
    q.set_defaults(func=cmd_verify_bank)

    q = sub.add_parser("plan", help="build a sampling plan")
    q.add_argument("--bank", required=True, choices=BUILTIN_BANKS)
    q.add_argument("--variant", choices=HAAR2D_VARIANTS)
    q.add_argument("--sparsity", required=True, help="per-level sparsity, e.g. 2,2")
    q.add_argument("--h", required=True, help="shift vector, e.g. sqrt2/64 or sqrt2/32,sqrt3/32")
    q.add_argument("--box", help="support box a:b or a1:b1,a2:b2 (default 0:16)")
    q.add_argument("--radius", type=int, default=5)
    q.add_argument("--tau-rank", type=float, default=1e-6)
    q.add_argument("--grid-file", help="measurement CSV whose frequencies the plan must use")
    q.add_argument("--check", choices=("box", "heuristic", "none"), default="box")
    q.add_argument("--out", default="plan.json")
    q.set_defaults(func=cmd_plan)

    q = sub.add_parser("synth", help="draw a random sparse signal for a plan")
    q.add_argument("--plan", default="plan.json")
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--box")
    q.add_argument("--partial", action="store_true", help="draw between 1 and s atoms per map")
    q.add_argument("--demo", choices=sorted(DEMOS), help="write a fixed example signal instead")
    q.add_argument("--out", default="signal.json")
    q.set_defaults(func=cmd_synth)

    q = sub.add_parser("measure", help="Fourier measurements of a signal")
    q.add_argument("--signal", default="signal.json")
    q.add_argument("--plan", help="plan JSON (default plan.json unless --at is given)")
    q.add_argument("--at", help="measurement CSV giving the frequencies")
    q.add_argument("--snr", type=float, help="add noise at this SNR in dB")
    q.add_argument("--noise-seed", type=int, default=0)
    q.add_argument("--out", default="measurements.csv")
    q.set_defaults(func=cmd_measure)

    q = sub.add_parser("reconstruct", help="recover a signal from measurements")
    q.add_argument("--plan", default="plan.json")
    q.add_argument("--measurements", default="measurements.csv")
    q.add_argument("--box")
    q.add_argument("--robust", action="store_true", help="round Prony nodes to the nearest lattice point")
    q.add_argument("--truth", help="signal JSON to score supports against (with --robust)")
    _add_tolerances(q)
    q.add_argument("--out", default="recovered.json")
    q.set_defaults(func=cmd_reconstruct)

    q = sub.add_parser("prony", help="recover a sparse trigonometric polynomial from 2s samples")
    q.add_argument("--samples", required=True)
    q.add_argument("--direction")
    q.add_argument("--sparsity", type=int)
    q.add_argument("--box", required=True)
    q.add_argument("--prony-rank", type=float, default=1e-8)
    q.add_argument("--tau-phase", type=float, default=1e-6)
    q.add_argument("--tau-amp", type=float, default=1e-10)
    q.add_argument("--nearest", action="store_true")
    q.add_argument("--no-refine", action="store_true")
    q.add_argument("--out", default="prony.json")
    q.set_defaults(func=cmd_prony)

    q = sub.add_parser("noise-sweep", help="support-recovery rate against SNR")
    q.add_argument("--snr", default="20:80:5", help="start:stop:step or a list, in dB")
    q.add_argument("--trials", type=int, default=100)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--bank", default="alpert1d", choices=BUILTIN_BANKS)
    q.add_argument("--variant", choices=HAAR2D_VARIANTS)
    q.add_argument("--sparsity", default="2,2")
    q.add_argument("--h", default="sqrt2/64")
    q.add_argument("--box", default="0:16")
    q.add_argument("--grid-file", help="measurement CSV whose frequencies the plan must use")
    q.add_argument("--demo-grid", action="store_true", help="use the fixed 1D demo grid")
    q.add_argument("--workers", type=int, help="worker processes (default $PRONY_WAVELETS_THREADS or 1)")
    _add_tolerances(q)
    q.add_argument("--out", default="sweep.csv")
    q.set_defaults(func=cmd_noise_sweep)

    q = sub.add_parser("export-plot", help="write plot data as CSV")
    q.add_argument("--what", choices=("time", "fourier", "error"), required=True)
    q.add_argument("--signal", default="signal.json")
    q.add_argument("--recovered")
    q.add_argument("--grid", required=True, help="a:b:N per axis, comma-separated")
    q.add_argument("--out", default="plot.csv")
    q.set_defaults(func=cmd_export_plot)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        sys.stderr.write(str(exc))
        print(_summary("", "usage_error", EXIT_USAGE, message=str(exc).splitlines()[0]))
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_USAGE
    command = args.command
    try:
        result = args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        print(_summary(command, "validation_error", EXIT_VALIDATION, message=str(exc)))
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        print(_summary(command, "validation_error", EXIT_VALIDATION, message=str(exc)))
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        print(_summary(command, "numerical_error", EXIT_NUMERICAL, message=str(exc)))
        return EXIT_NUMERICAL
    print(_summary(command, "ok", EXIT_OK, result))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
