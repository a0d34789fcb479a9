"""Command-line front end.

Every subcommand wraps one library call and prints a report to stdout.
Exit codes: 0 success, 2 input error, 3 math-domain or size-cap error.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

import numpy as np

from .envariance import decide_envariance, equiprobability_from_swaps
from .ensemble import (
    EnsembleSpec,
    attach_counter,
    build_ensemble,
    dual_decompositions,
    maverick_fraction,
    sector_table,
)
from .errors import EnvarError, InputError
from .finegraining import (
    CommensurateInput,
    born_probabilities,
    born_without_additivity,
    branch_certificate,
    coarse_grain,
    dedekind_bounds,
    exact_value,
    finegrain,
)
from .report import FORMATS, RunConfig, build_report, render, resolve_config
from .schmidt import Bipartition, schmidt_decompose
from .state import LocalUnitary, PureState, haar_unitary, phase_unitary, swap_unitary


def _labels(text: str) -> tuple:
    return tuple(x.strip() for x in text.split(",") if x.strip())


def _load_state(path: str) -> PureState:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read state file {path}: {exc}") from exc
    return PureState.from_json(text)


def _cut(state: PureState, left: str) -> Bipartition:
    try:
        return Bipartition.split(state.layout, _labels(left))
    except EnvarError as exc:
        raise InputError(str(exc)) from exc


def _rational(text: str) -> Fraction:
    return exact_value(text)


def _matrix_json(matrix: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in matrix]


# -- subcommands ---------------------------------------------------------------
# each returns (inputs, outputs, csv_table_or_None)


def cmd_schmidt(args, config: RunConfig):
    state = _load_state(args.state)
    cut = _cut(state, args.left)
    dec = schmidt_decompose(state, cut)
    outputs = {
        "left": list(dec.left_labels),
        "right": list(dec.right_labels),
        "coefficients": dec.coefficients,
        "rank": dec.rank(args.threshold),
    }
    if args.bases:
        outputs["left_basis"] = _matrix_json(dec.left_basis)
        outputs["right_basis"] = _matrix_json(dec.right_basis)
    table = [{"k": k, "coefficient": float(c)} for k, c in enumerate(dec.coefficients)]
    return {"state": args.state, "left": args.left, "threshold": args.threshold}, outputs, table


def _unitary(args, state: PureState, config: RunConfig) -> tuple[LocalUnitary, dict]:
    target = _labels(args.target)
    try:
        dim = int(np.prod([state.layout.dim(x) for x in target]))
    except EnvarError as exc:
        raise InputError(str(exc)) from exc
    chosen = [x for x in ("swap", "phase", "matrix", "haar") if getattr(args, x)]
    if len(chosen) != 1:
        raise InputError("give exactly one of --swap, --phase, --matrix, --haar")
    kind = chosen[0]
    if kind == "swap":
        i, j = args.swap
        if not (0 <= i < dim and 0 <= j < dim):
            raise InputError(f"swap levels must lie in 0..{dim - 1}")
        return swap_unitary(target, dim, i, j), {"kind": "swap", "levels": [i, j]}
    if kind == "phase":
        level, phi = int(args.phase[0]), float(args.phase[1])
        if not 0 <= level < dim:
            raise InputError(f"phase level must lie in 0..{dim - 1}")
        phases = np.zeros(dim)
        phases[level] = phi
        return phase_unitary(target, phases), {"kind": "phase", "level": level, "angle": phi}
    if kind == "haar":
        rng = np.random.default_rng(config.seed)
        return LocalUnitary(target, haar_unitary(dim, rng), config.tol), {"kind": "haar"}
    text = args.matrix
    if text.startswith("@"):
        try:
            with open(text[1:]) as fh:
                text = fh.read()
        except OSError as exc:
            raise InputError(f"cannot read matrix file: {exc}") from exc
    try:
        rows = json.loads(text)
        mat = np.array([[complex(re, im) for re, im in row] for row in rows])
    except (json.JSONDecodeError, TypeError, ValueError) as exc:
        raise InputError(f"malformed matrix: {exc}") from exc
    if mat.shape != (dim, dim):
        raise InputError(f"matrix shape {mat.shape} does not match target dimension {dim}")
    return LocalUnitary(target, mat, config.tol), {"kind": "matrix"}


def cmd_envariance(args, config: RunConfig):
    state = _load_state(args.state)
    cut = _cut(state, args.left)
    u, described = _unitary(args, state, config)
    verdict = decide_envariance(state, u, cut, config.tol)
    outputs = {
        "envariant": verdict.envariant,
        "residual": verdict.residual,
        "reduced_state_gap": verdict.rho_gap,
        "counter": None,
    }
    if verdict.counter is not None:
        outputs["counter"] = {
            "target": list(verdict.counter.target),
            "matrix": _matrix_json(verdict.counter.matrix),
        }
    if args.equiprobability:
        cert = equiprobability_from_swaps(state, cut, config.tol)
        outputs["equiprobability"] = {
            "branches": len(cert.branch_indices),
            "probability_each": cert.probability_each,
            "max_swap_residual": cert.max_residual,
        }
    inputs = {"state": args.state, "left": args.left, "target": args.target, "unitary": described}
    return inputs, outputs, None


def _commensurate(n, m) -> CommensurateInput:
    if n is None or m is None:
        raise InputError("n and m are required")
    return CommensurateInput(n, m)


def cmd_finegrain(args, config: RunConfig):
    inp = _commensurate(args.n, args.m)
    fs = finegrain(inp, config.caps)
    cert, route = branch_certificate(fs, config.tol, direct=args.direct)
    coarse = coarse_grain(fs)
    if args.state_out:
        with open(args.state_out, "w") as fh:
            fh.write(fs.state.to_json())
    outputs = {
        "branches": fs.branches,
        "branch_map": fs.branch_map,
        "dims": list(fs.state.dims),
        "probability_each": cert.probability_each,
        "max_swap_residual": cert.max_residual,
        "certificate_route": route,
        "coarse_coefficients": [abs(c) for c in coarse.coefficients],
        "coarse_residual": max(coarse.record_residual, coarse.group_residual),
    }
    table = [{"branch": i, "outcome": o} for i, o in fs.branch_map.items()]
    return {"n": inp.n, "m": inp.m, "direct": args.direct}, outputs, table


def _bounds_outputs(bounds) -> dict:
    pair = lambda inp: None if inp is None else [inp.n, inp.m]
    return {
        "lower": bounds.lower,
        "upper": bounds.upper,
        "gap": bounds.gap,
        "lower_state": pair(bounds.lower_input),
        "upper_state": pair(bounds.upper_input),
    }


def cmd_born(args, config: RunConfig):
    inputs = {"n": args.n, "m": args.m, "no_additivity": args.no_additivity}
    outputs = {}
    if args.dedekind is not None:
        if args.target is None:
            raise InputError("--dedekind needs --target")
        bounds = dedekind_bounds(_rational(args.target), args.dedekind)
        inputs.update(dedekind=args.dedekind, target=args.target)
        outputs["dedekind"] = _bounds_outputs(bounds)
        if args.n is None and args.m is None:
            return inputs, outputs, None
    inp = _commensurate(args.n, args.m)
    route = born_without_additivity if args.no_additivity else born_probabilities
    result = route(inp, config.tol, config.caps)
    outputs.update(
        p0=result.p0,
        p1=result.p1,
        derivation=[step.to_dict() for step in result.derivation],
    )
    table = [
        {"step": i, "kind": s.kind, "event": s.event, "value": s.value}
        for i, s in enumerate(result.derivation)
    ]
    return inputs, outputs, table


def cmd_dedekind(args, config: RunConfig):
    bounds = dedekind_bounds(_rational(args.target), args.denominator)
    return {"target": args.target, "denominator": args.denominator}, _bounds_outputs(bounds), None


def _spec(M: int, alpha_sq: str, config: RunConfig) -> EnsembleSpec:
    return EnsembleSpec.exact(M, _rational(alpha_sq), tol=config.tol, max_copies=config.caps.max_copies)


def cmd_ensemble(args, config: RunConfig):
    spec = _spec(args.M, args.alpha_sq, config)
    inputs = {"M": args.M, "alpha_sq": args.alpha_sq}
    rows = sector_table(spec)
    outputs = {}
    if args.sectors or not (args.dual or args.maverick is not None):
        outputs["sectors"] = rows
    if args.dual:
        state = attach_counter(build_ensemble(spec, config.caps), spec, config.caps)
        by_sequence, by_count = dual_decompositions(state)
        outputs["dual"] = {
            "sequence_cut": by_sequence.coefficients,
            "count_cut": by_count.coefficients,
        }
    if args.maverick is not None:
        inputs["maverick"] = args.maverick
        outputs["maverick_fraction"] = maverick_fraction(args.M, args.maverick, spec.weights[1])
    return inputs, outputs, rows


def cmd_maverick(args, config: RunConfig):
    bias = _rational(args.bias)
    value = maverick_fraction(args.M, args.epsilon, bias)
    return (
        {"M": args.M, "epsilon": args.epsilon, "bias": args.bias},
        {"maverick_fraction": value},
        None,
    )


COMMANDS = {
    "schmidt": cmd_schmidt,
    "envariance": cmd_envariance,
    "finegrain": cmd_finegrain,
    "born": cmd_born,
    "dedekind": cmd_dedekind,
    "ensemble": cmd_ensemble,
    "maverick": cmd_maverick,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=FORMATS, default=argparse.SUPPRESS)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--tol", type=float, default=argparse.SUPPRESS, help="sets every tolerance")
    common.add_argument("--config", default=argparse.SUPPRESS, help="key = value config file")

    parser = argparse.ArgumentParser(prog="envar", description=__doc__, parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("schmidt", parents=[common], help="Schmidt decomposition of a state file")
    p.add_argument("state")
    p.add_argument("--left", required=True, help="comma-separated labels on the left of the cut")
    p.add_argument("--threshold", type=float, default=1e-9)
    p.add_argument("--bases", action="store_true", help="include basis vectors")

    p = sub.add_parser("envariance", parents=[common], help="decide envariance of a local unitary")
    p.add_argument("state")
    p.add_argument("--left", required=True)
    p.add_argument("--target", required=True, help="label(s) the unitary acts on")
    p.add_argument("--swap", type=int, nargs=2, metavar=("I", "J"))
    p.add_argument("--phase", nargs=2, metavar=("LEVEL", "ANGLE"))
    p.add_argument("--matrix", help="JSON [[[re, im], ...], ...] or @file")
    p.add_argument("--haar", action="store_true", help="Haar-random unitary from --seed")
    p.add_argument("--equiprobability", action="store_true", help="also certify equal branches")

    p = sub.add_parser("finegrain", parents=[common], help="finegrain sqrt(n)|0> + sqrt(m)|1>")
    p.add_argument("n", type=int)
    p.add_argument("m", type=int)
    p.add_argument("--direct", action="store_true", help="decide every record swap on this state")
    p.add_argument("--state-out", help="write the finegrained state JSON here")

    p = sub.add_parser("born", parents=[common], help="Born probabilities by counting branches")
    p.add_argument("n", type=int, nargs="?")
    p.add_argument("m", type=int, nargs="?")
    p.add_argument("--no-additivity", action="store_true")
    p.add_argument("--dedekind", type=int, metavar="D")
    p.add_argument("--target")

    p = sub.add_parser("dedekind", parents=[common], help="rational bounds on a probability")
    p.add_argument("target")
    p.add_argument("denominator", type=int)

    p = sub.add_parser("ensemble", parents=[common], help="count sectors of an M-copy ensemble")
    p.add_argument("M", type=int)
    p.add_argument("alpha_sq", nargs="?", default="1/2")
    p.add_argument("--sectors", action="store_true")
    p.add_argument("--dual", action="store_true", help="explicit S|AC and SA|C decompositions")
    p.add_argument("--maverick", type=float, metavar="EPSILON")

    p = sub.add_parser("maverick", parents=[common], help="exact weight of maverick counts")
    p.add_argument("M", type=int)
    p.add_argument("epsilon", type=float)
    p.add_argument("--bias", default="1/2")
    return parser


def main(argv=None, environ=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    flags = {
        "format": getattr(args, "format", None),
        "seed": getattr(args, "seed", None),
        "tol": getattr(args, "tol", None),
    }
    try:
        config = resolve_config(flags, environ, getattr(args, "config", None))
        inputs, outputs, table = COMMANDS[args.command](args, config)
        report = build_report(args.command, inputs, outputs, config)
        text = render(report, config.format, raw=outputs, table=table)
    except InputError as exc:
        print(f"envar: error: {exc}", file=sys.stderr)
        return 2
    except EnvarError as exc:
        print(f"envar: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
