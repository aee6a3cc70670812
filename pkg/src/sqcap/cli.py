"""Command-line surface: bound evaluation, allocation, schemes, and sweeps.

Every subcommand prints JSON (sweeps default to CSV) with an echo of the
inputs, the library version, and any seed used, so results are auditable
from the output alone.  Exit codes: 0 success, 1 runtime failure, 2 usage.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .bounds import (
    BudgetError,
    allocate_integer_oracle,
    mimo_sign_highsnr_bounds,
    mimo_single_select_bounds,
    miso_sign_capacity,
    simo_linear_bounds,
    simo_multi_select_bounds,
    simo_sign_highsnr_bounds,
    simo_single_select_bounds,
    siso_multilevel_bounds,
    siso_sign_capacity,
    waterfill_relaxed,
)
from .channel import ChannelMatrix
from .dmc import ConvergenceError, blahut_arimoto, quantizer_transition
from .schemes import (
    build_dithered_scheme,
    build_pam_scheme,
    dithered_mi_estimate,
    pam_inner_rate,
    pam_scheme_for_levels,
)
from .sweeps import (
    SweepSpec,
    UnsupportedCurveError,
    csv_text,
    emit_csv,
    figure_spec,
    run_sweep,
)

__all__ = ["cli_dispatch", "main"]

BOUND_FAMILIES = (
    "siso-sign",
    "miso-sign",
    "simo-highsnr",
    "mimo-highsnr",
    "siso-multilevel",
    "simo-single-select",
    "simo-multi-select",
    "simo-linear",
    "mimo-single-select",
)


def _floats(text: str) -> tuple:
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _ints(text: str) -> tuple:
    try:
        return tuple(int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _pair_dict(pair) -> dict:
    return {
        "lower_bits": pair.lower,
        "upper_bits": pair.upper,
        "gap_claim_bits": pair.gap_claim,
        "argmax_k": pair.argmax_k,
        "flags": list(pair.flags),
    }


def _alloc_dict(alloc) -> dict:
    return {
        "gains": list(map(float, alloc.gains)),
        "power_budget": alloc.power_budget,
        "quantizer_budget": alloc.quantizer_budget,
        "powers": list(map(float, alloc.powers)),
        "quantizer_shares": list(map(float, alloc.quantizer_shares)),
        "active_count": alloc.active_count,
        "water_level": alloc.water_level,
        "rate_bits": alloc.rate,
        "branch": alloc.branch.value,
    }


def _load_channel(text: str) -> ChannelMatrix:
    """Channel from inline JSON, or from a file when prefixed with @."""
    if text.startswith("@"):
        text = Path(text[1:]).read_text(encoding="utf-8")
    return ChannelMatrix.from_json(text)


def _require(args, names):
    missing = [n for n in names if getattr(args, n.replace("-", "_")) is None]
    if missing:
        raise ValueError(f"--{missing[0]} is required for family {args.family}")


def _cmd_bounds(args) -> dict:
    fam = args.family
    if fam == "siso-sign":
        _require(args, ["power"])
        result = {"capacity_bits": siso_sign_capacity(args.power)}
    elif fam == "miso-sign":
        _require(args, ["h", "power"])
        result = {"capacity_bits": miso_sign_capacity(args.h, args.power)}
    elif fam == "simo-highsnr":
        _require(args, ["nrx"])
        result = _pair_dict(simo_sign_highsnr_bounds(args.nrx))
    elif fam == "mimo-highsnr":
        _require(args, ["nsq", "ntx"])
        result = _pair_dict(mimo_sign_highsnr_bounds(args.nsq, args.ntx))
    elif fam == "siso-multilevel":
        _require(args, ["power", "nsq"])
        result = _pair_dict(siso_multilevel_bounds(args.power, args.nsq))
    elif fam == "simo-single-select":
        _require(args, ["h", "power", "nsq"])
        result = _pair_dict(simo_single_select_bounds(args.h, args.power, args.nsq))
    elif fam == "simo-multi-select":
        _require(args, ["h", "power", "nsq"])
        result = _pair_dict(simo_multi_select_bounds(args.h, args.power, args.nsq))
    elif fam == "simo-linear":
        _require(args, ["h", "power", "nsq"])
        result = _pair_dict(simo_linear_bounds(args.h, args.power, args.nsq))
    else:
        _require(args, ["channel", "power", "nsq"])
        result = _pair_dict(
            mimo_single_select_bounds(_load_channel(args.channel), args.power, args.nsq)
        )
    inputs = {
        "family": fam,
        "power": args.power,
        "nsq": args.nsq,
        "h": None if args.h is None else list(args.h),
        "nrx": args.nrx,
        "ntx": args.ntx,
        "channel": args.channel,
    }
    return {"command": "bounds", "inputs": inputs, "result": result}


def _cmd_waterfill(args) -> dict:
    gains = tuple(sorted(args.gains, reverse=True))
    relaxed = waterfill_relaxed(gains, args.power, args.nsq)
    try:
        oracle = _alloc_dict(allocate_integer_oracle(gains, args.power, args.nsq))
        skipped = None
    except BudgetError as exc:
        oracle, skipped = None, str(exc)
    inputs = {"gains": list(gains), "power": args.power, "nsq": args.nsq}
    result = {"relaxed": _alloc_dict(relaxed), "oracle": oracle}
    if skipped:
        result["oracle_skipped"] = skipped
    return {"command": "waterfill", "inputs": inputs, "result": result}


def _build_scheme(args):
    if args.levels is not None:
        return pam_scheme_for_levels(args.levels, args.power)
    return build_pam_scheme(args.power, args.nsq)


def _cmd_pam(args) -> dict:
    scheme = _build_scheme(args)
    inputs = {"power": args.power, "nsq": args.nsq, "levels": args.levels, "gain": args.gain}
    result = {
        "scheme": json.loads(scheme.to_json()),
        "inner_rate_bits": pam_inner_rate(scheme, args.gain),
    }
    return {"command": "pam", "inputs": inputs, "result": result}


def _cmd_dither(args) -> dict:
    params = build_dithered_scheme(args.h, args.power, args.nsq, args.k)
    mi, err = dithered_mi_estimate(params, args.h, args.samples, args.seed)
    inputs = {
        "h": list(args.h),
        "power": args.power,
        "nsq": args.nsq,
        "k": args.k,
        "samples": args.samples,
        "seed": args.seed,
    }
    result = {
        "scheme": json.loads(params.to_json()),
        "mi_estimate_bits": mi,
        "std_err_bits": err,
    }
    return {"command": "dither", "inputs": inputs, "result": result}


def _cmd_ba(args) -> dict:
    scheme = _build_scheme(args)
    channel = quantizer_transition(scheme.points, args.gain * scheme.thresholds, args.gain, 1.0)
    capacity, dist = blahut_arimoto(channel, args.tolerance, args.max_iters)
    uniform_rate = pam_inner_rate(scheme, args.gain)
    inputs = {
        "power": args.power,
        "nsq": args.nsq,
        "levels": args.levels,
        "gain": args.gain,
        "tolerance": args.tolerance,
        "max_iters": args.max_iters,
    }
    result = {
        "scheme": json.loads(scheme.to_json()),
        "capacity_bits": capacity,
        "uniform_input_rate_bits": uniform_rate,
        "input_distribution": list(map(float, dist.probs)),
    }
    return {"command": "ba", "inputs": inputs, "result": result}


def _sweep_spec(args) -> SweepSpec:
    overrides = {}
    if args.axis is not None:
        overrides["axis"] = args.axis
    if args.powers is not None:
        overrides["power_list"] = args.powers
    if args.nsq is not None:
        overrides["n_sq"] = args.nsq
    if args.ntx is not None:
        overrides["n_tx"] = args.ntx
    if args.k_list is not None:
        overrides["k_list"] = args.k_list
    overrides["include_highsnr_proxy"] = args.include_highsnr_proxy
    overrides["include_sign_select_finite_snr"] = args.include_sign_select_finite_snr
    if args.figure == "custom":
        required = {"axis", "power_list", "n_sq"}
        if not required <= set(overrides):
            raise ValueError("custom sweeps need --axis, --powers, and --nsq")
        return SweepSpec(
            figure_id="custom", trials=args.trials, seed=args.seed, **overrides
        )
    return figure_spec(args.figure, trials=args.trials, seed=args.seed, **overrides)


def _cmd_sweep(args):
    spec = _sweep_spec(args)
    points = run_sweep(spec, workers=args.workers)
    if args.format == "csv":
        if args.out:
            emit_csv(points, args.out)
        else:
            sys.stdout.write(csv_text(points))
        return None
    inputs = {
        "figure": spec.figure_id,
        "axis": list(spec.axis),
        "power_list": list(spec.power_list),
        "nsq": spec.n_sq,
        "ntx": spec.n_tx,
        "k_list": list(spec.k_list),
        "trials": spec.trials,
        "seed": spec.seed,
        "workers": args.workers,
    }
    result = [
        {
            "figure": pt.figure_id,
            "curve": pt.curve_label,
            "x": pt.x,
            "mean": pt.mean,
            "std_err": pt.std_err,
        }
        for pt in points
    ]
    return {"command": "sweep", "inputs": inputs, "result": result}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sqcap",
        description=(
            "Capacity bounds, quantizer allocations, and achievable rates for "
            "Gaussian channels observed through a budget of sign quantizers."
        ),
    )
    parser.add_argument("--version", action="version", version=f"sqcap {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", help="write output to this path instead of stdout")

    b = sub.add_parser("bounds", help="evaluate a closed-form capacity value or bound pair")
    b.add_argument("--family", choices=BOUND_FAMILIES, required=True)
    b.add_argument("--power", type=float)
    b.add_argument("--nsq", type=int)
    b.add_argument("--h", type=_floats, help="comma-separated antenna gains")
    b.add_argument("--nrx", type=int)
    b.add_argument("--ntx", type=int)
    b.add_argument("--channel", help="channel JSON, or @path to a JSON file")
    common(b)
    b.set_defaults(handler=_cmd_bounds)

    w = sub.add_parser("waterfill", help="split power and quantizer budgets over subchannels")
    w.add_argument("--gains", type=_floats, required=True)
    w.add_argument("--power", type=float, required=True)
    w.add_argument("--nsq", type=int, required=True)
    common(w)
    w.set_defaults(handler=_cmd_waterfill)

    p = sub.add_parser("pam", help="build a PAM scheme and its exact achievable rate")
    p.add_argument("--power", type=float, required=True)
    p.add_argument("--nsq", type=int, default=2)
    p.add_argument("--levels", type=int, help="fix the constellation size directly")
    p.add_argument("--gain", type=float, default=1.0)
    common(p)
    p.set_defaults(handler=_cmd_pam)

    d = sub.add_parser("dither", help="dithered multi-antenna scheme with Monte-Carlo rate")
    d.add_argument("--h", type=_floats, required=True)
    d.add_argument("--power", type=float, required=True)
    d.add_argument("--nsq", type=int, required=True)
    d.add_argument("--k", type=int, required=True, help="number of antennas selected")
    d.add_argument("--samples", type=int, default=10**5)
    d.add_argument("--seed", type=int, default=0)
    common(d)
    d.set_defaults(handler=_cmd_dither)

    a = sub.add_parser("ba", help="capacity of the scheme-induced channel by Blahut-Arimoto")
    a.add_argument("--power", type=float, required=True)
    a.add_argument("--nsq", type=int, default=2)
    a.add_argument("--levels", type=int)
    a.add_argument("--gain", type=float, default=1.0)
    a.add_argument("--tolerance", type=float, default=1e-9)
    a.add_argument("--max-iters", type=int, default=10_000)
    common(a)
    a.set_defaults(handler=_cmd_ba)

    s = sub.add_parser("sweep", help="Monte-Carlo averaged figure curves to CSV")
    s.add_argument("--figure", choices=("fig2a", "fig2b", "fig2c", "custom"), required=True)
    s.add_argument("--trials", type=int, default=1000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--axis", type=_ints, help="receive-antenna grid, comma-separated")
    s.add_argument("--powers", type=_floats)
    s.add_argument("--nsq", type=int)
    s.add_argument("--ntx", type=int)
    s.add_argument("--k-list", type=_ints)
    s.add_argument("--include-highsnr-proxy", action="store_true")
    s.add_argument("--include-sign-select-finite-snr", action="store_true")
    s.add_argument("--format", choices=("csv", "json"), default="csv")
    common(s)
    s.set_defaults(handler=_cmd_sweep)
    return parser


def cli_dispatch(argv) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(list(argv))
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        payload = args.handler(args)
    except (
        ValueError,
        RuntimeError,
        OSError,
        BudgetError,
        ConvergenceError,
        UnsupportedCurveError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if payload is None:
        return 0
    payload["version"] = __version__
    text = json.dumps(payload, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    return 0


def main() -> None:
    sys.exit(cli_dispatch(sys.argv[1:]))
