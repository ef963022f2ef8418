"""``bevc`` command line: build, certify, scan, optics-verify.

Exit codes: 0 completed, 2 invalid input, 3 numerical failure, 4 I/O error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from importlib.metadata import PackageNotFoundError, version

import numpy as np

from . import criteria, optics, states
from .config import DEFAULT, TruncationConfig, default_seed
from .errors import BevcError, NumericalError
from .hilbert import (DensityOperator, PureVector, dumps_operator, project_local, pt_residual,
                      read_operator, schmidt, write_operator)
from .witness import (InducedMap, WitnessError, build_witness, sample_map_positivity,
                      sample_product_minimum)

EXIT_OK, EXIT_INPUT, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4


def tool_version() -> str:
    try:
        return version("bevc")
    except PackageNotFoundError:
        return "0+unknown"


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _positive(text: str) -> float:
    x = float(text)
    if not x > 0:
        raise argparse.ArgumentTypeError(f"tolerance must be positive, got {text}")
    return x


def _seed(text: str) -> int:
    x = int(text, 0)
    if not 0 <= x < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return x


# -- state construction shared by build and certify -----------------------------

def _bell() -> DensityOperator:
    v = PureVector(np.array([1, 0, 0, 1]) / math.sqrt(2), (2, 2))
    return DensityOperator(v.projector(), (2, 2), trace_normalized=True, meta={"kind": "bell"})


def make_state(args) -> DensityOperator:
    kind = args.kind
    if kind == "rho":
        op = states.build_rho(states.CVParams(args.a, args.c, args.n))
    elif kind == "sigma":
        if args.alphas is None:
            raise ValueError("sigma needs --alphas")
        k = args.k if args.k is not None else len(args.alphas) + 1
        op = states.build_sigma(states.AlphaFamily(k, tuple(args.alphas)))
    elif kind == "choi":
        op = states.build_choi()
    elif kind == "bell":
        op = _bell()
    elif kind == "direct-sum":
        if args.alphas is not None:
            block = states.build_sigma(states.AlphaFamily(len(args.alphas) + 1, tuple(args.alphas)))
        else:
            block = states.build_choi()
        probs = args.probs or [0.5, 0.5]
        op = states.build_direct_sum(block, probs)
    elif kind == "squeezed":
        lam = args.lam if args.lam is not None else math.exp(-args.beta)
        op = optics.build_squeezed(lam, args.n).to_state()
        op = DensityOperator(op.matrix, op.dims, trace_normalized=True,
                             meta={"kind": "squeezed", "lambda": lam, "N": args.n})
    elif kind == "file":
        if args.input is None:
            raise ValueError("file source needs --input")
        op = read_operator(args.input)
    else:
        raise ValueError(f"unknown state kind {kind!r}")
    if getattr(args, "rows", None):
        rows = args.rows
        op = project_local(op, rows, rows)
        meta = dict(op.meta)
        meta["source"] = _describe(args)
        op = DensityOperator(op.matrix, op.dims, trace_normalized=True, meta=meta)
    return op


def _describe(args) -> dict:
    keys = ("kind", "a", "c", "n", "k", "alphas", "probs", "lam", "beta", "input")
    return {k: getattr(args, k) for k in keys if getattr(args, k, None) is not None}


def _config(args) -> TruncationConfig:
    cfg = DEFAULT.with_search(seed=args.seed, restarts=args.restarts, max_iters=args.max_iters,
                              eps_conv=args.eps_conv)
    overrides = {name: getattr(args, name) for name in
                 ("ppt_tol", "range_tol", "entangle_margin") if getattr(args, name) is not None}
    if args.no_balance:
        overrides["balance"] = False
    return replace(cfg, **overrides)


# -- commands --------------------------------------------------------------------

def cmd_build(args, out) -> int:
    op = make_state(args)
    doc = dumps_operator(op, {"tool_version": tool_version()})
    summary = (f"dims={list(op.dims)} trace={op.trace:.17g} "
               f"pt_residual={pt_residual(op):.3e}")
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(doc)
        print(summary, file=out)
    else:
        out.write(doc)
        print(summary, file=sys.stderr)
    return EXIT_OK


PRODUCT_SAMPLES, MAP_SAMPLES = 10_000, 1_000


def certify_state(op: DensityOperator, cfg: TruncationConfig, with_witness: bool,
                  witness_out: str | None = None) -> dict:
    rep = criteria.certify(op, cfg)
    witness = None
    if (with_witness or witness_out) and rep.verdict == criteria.BOUND_ENTANGLED_CERTIFIED:
        w = build_witness(op, cfg)
        witness = {k: (_tag(v, "build_witness", cfg.epsilon_floor) if isinstance(v, float) else v)
                   for k, v in w.summary(op).items()}
        seed = cfg.search.seed
        witness["product_samples"] = PRODUCT_SAMPLES
        witness["min_product_expectation"] = _tag(
            sample_product_minimum(w, PRODUCT_SAMPLES, seed), "sample_product_minimum", 1e-9)
        lam = InducedMap(w)
        witness["map_samples"] = MAP_SAMPLES
        witness["min_map_output_eigenvalue"] = _tag(
            sample_map_positivity(lam, MAP_SAMPLES, seed), "sample_map_positivity", 1e-9)
        witness["min_choi_eigenvalue"] = float(np.linalg.eigvalsh(lam.choi_matrix())[0])
        witness["positivity"] = "sampled evidence"
        if witness_out:
            meta = {"kind": "witness", "epsilon": w.epsilon, "epsilon_found": w.epsilon_found,
                    "source_id": w.source_id, "product_samples": PRODUCT_SAMPLES,
                    "map_samples": MAP_SAMPLES, "seed": seed}
            write_operator(witness_out, DensityOperator(w.W.matrix, w.dims, meta=meta),
                           {"tool_version": tool_version()})
    rep = replace(rep, witness=witness)
    return rep.to_dict()


def _tag(value, op, tol):
    return {"value": value, "op": op, "tol": tol}


def cmd_certify(args, out) -> int:
    op = make_state(args)
    cfg = _config(args)
    t0 = time.perf_counter()
    report = certify_state(op, cfg, args.witness, args.witness_out)
    report["tool_version"] = tool_version()
    if args.timings:
        report["timings"] = {"certify_seconds": time.perf_counter() - t0}
    _emit_json(report, args.output, out)
    return EXIT_OK


def _emit_json(doc, path, out):
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        out.write(text)


SCAN_FIELDS = ("index", "a", "c", "N", "K", "alphas", "rows", "min_pt_eigenvalue", "residual",
               "verdict", "psi_schmidt_rank")


def _scan_point(task) -> dict:
    kind, params, cfg = task
    if kind == "ac":
        a, c, N, rows = params
        p = states.CVParams(a, c, N)
        op = states.build_rho(p)
        if rows:
            op = project_local(op, rows, rows)
        row = {"a": a, "c": c, "N": N, "rows": ";".join(map(str, rows or []))}
        row["psi_schmidt_rank"] = schmidt(states.build_psi(p), cfg.rank_tol).rank
    else:
        K, alphas = params
        op = states.build_sigma(states.AlphaFamily(K, tuple(alphas)))
        row = {"K": K, "alphas": ";".join(repr(float(x)) for x in alphas)}
        phi = PureVector(np.eye(K).ravel(), (K, K))
        row["psi_schmidt_rank"] = schmidt(phi, cfg.rank_tol).rank
    rep = criteria.certify(op, cfg)
    row.update(min_pt_eigenvalue=rep.ppt.min_pt_eigenvalue, residual=rep.search.residual,
               verdict=rep.verdict)
    return row


def scan_tasks(args, cfg) -> list:
    if args.grid == "ac":
        if not args.a or not args.c:
            raise ValueError("ac scan needs --a and --c lists")
        return [("ac", (a, c, args.n, args.rows), cfg) for a in args.a for c in args.c]
    if args.grid == "alphas":
        if not args.alpha_sets:
            raise ValueError("alphas scan needs --alpha-sets")
        sets = [_floats(s) for s in args.alpha_sets.split(";") if s.strip()]
        return [("sigma", (len(s) + 1, s), cfg) for s in sets]
    if args.grid == "k":
        if args.k_min > args.k_max or args.k_min < 2:
            raise ValueError("need 2 <= --k-min <= --k-max")
        if not 0 < args.ratio < 1:
            raise ValueError("--ratio must lie in (0, 1)")
        # alpha_m = ratio**m: strictly decreasing inside (0, 1)
        return [("sigma", (K, [args.ratio ** m for m in range(2, K + 1)]), cfg)
                for K in range(args.k_min, args.k_max + 1)]
    raise ValueError(f"unknown grid {args.grid!r}")


def cmd_scan(args, out) -> int:
    cfg = _config(args)
    tasks = scan_tasks(args, cfg)
    if not tasks:
        raise ValueError("empty grid")
    if args.workers > 1:
        with ProcessPoolExecutor(args.workers) as pool:
            rows = list(pool.map(_scan_point, tasks))
    else:
        rows = [_scan_point(t) for t in tasks]
    for i, row in enumerate(rows):
        row["index"] = i
    if args.format == "json":
        _emit_json({"rows": rows, "seed": cfg.search.seed, "tool_version": tool_version()},
                   args.output, out)
        return EXIT_OK
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=SCAN_FIELDS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(buf.getvalue())
    else:
        out.write(buf.getvalue())
    return EXIT_OK


def cmd_optics_verify(args, out) -> int:
    p = optics.ProtocolParams(args.beta, args.gamma, args.k_max, levels=args.levels)
    if args.k_max > args.n - 2:
        raise ValueError(f"truncation mismatch: k_max = {args.k_max} > N - 2 = {args.n - 2}")
    rep = optics.verify(p, args.n, kerr_N=args.kerr_n)
    doc = {
        "params": {"beta": args.beta, "gamma": args.gamma, "N": args.n, "k_max": args.k_max,
                   "levels": args.levels, "kerr_N": args.kerr_n or args.n},
        "frobenius_distance": _tag(rep.frobenius_distance, "assemble_protocol_state", 1e-10),
        "per_k_identity_residual": {str(k): _tag(v, "build_V", 1e-12)
                                    for k, v in rep.per_k_residuals.items()},
        "squeezed_residual": _tag(rep.squeezed_residual, "build_squeezed", 1e-12),
        "kerr": rep.kerr_table,
        "comparison": "pure state only" if args.k_max == 0 else "full mixture",
        "tool_version": tool_version(),
    }
    _emit_json(doc, args.output, out)
    return EXIT_OK


# -- parser ----------------------------------------------------------------------

def _add_state_args(p, kinds):
    p.add_argument("kind", choices=kinds)
    p.add_argument("--a", type=float, default=0.5)
    p.add_argument("--c", type=float, default=0.8)
    p.add_argument("--n", type=int, default=12, help="levels per mode")
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--alphas", type=_floats, default=None)
    p.add_argument("--probs", type=_floats, default=None)
    p.add_argument("--lam", type=float, default=None)
    p.add_argument("--beta", type=float, default=math.log(2))
    p.add_argument("--rows", type=_ints, default=None,
                   help="keep these levels (1-based) on both sides")
    p.add_argument("--input", default=None)
    p.add_argument("-o", "--output", default=None)


def _add_search_args(p):
    p.add_argument("--seed", type=_seed, default=None)
    p.add_argument("--restarts", type=int, default=DEFAULT.search.restarts)
    p.add_argument("--max-iters", type=int, default=DEFAULT.search.max_iters)
    p.add_argument("--eps-conv", type=_positive, default=DEFAULT.search.eps_conv)
    p.add_argument("--ppt-tol", type=_positive, default=None)
    p.add_argument("--range-tol", type=_positive, default=None)
    p.add_argument("--entangle-margin", type=_positive, default=None)
    p.add_argument("--no-balance", action="store_true",
                   help="search the range of the state as given")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bevc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=tool_version())
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="construct a state and write it in the exchange format")
    _add_state_args(p, ["rho", "sigma", "choi", "direct-sum", "squeezed"])
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("certify", help="PPT and range-criterion certification report")
    _add_state_args(p, ["rho", "sigma", "choi", "bell", "direct-sum", "file"])
    _add_search_args(p)
    p.add_argument("--witness", action="store_true", help="also build an entanglement witness")
    p.add_argument("--witness-out", default=None,
                   help="write the witness operator in the exchange format (implies --witness)")
    p.add_argument("--timings", action="store_true", help="add wall-clock timings (not reproducible)")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("scan", help="certify every point of a parameter grid")
    p.add_argument("grid", choices=["ac", "alphas", "k"])
    p.add_argument("--a", type=_floats, default=None)
    p.add_argument("--c", type=_floats, default=None)
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--rows", type=_ints, default=None)
    p.add_argument("--alpha-sets", default=None, help="';'-separated alpha lists, e.g. '2,2;1,1'")
    p.add_argument("--k-min", type=int, default=2)
    p.add_argument("--k-max", type=int, default=8)
    p.add_argument("--ratio", type=float, default=0.8)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("-o", "--output", default=None)
    _add_search_args(p)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("optics-verify", help="optical protocol versus direct construction")
    p.add_argument("--beta", type=float, default=math.log(2))
    p.add_argument("--gamma", type=float, default=math.log(1.25))
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--k-max", type=int, default=8)
    p.add_argument("--levels", type=int, default=32)
    p.add_argument("--kerr-n", type=int, default=None)
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_optics_verify)
    return parser


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_INPUT
    if getattr(args, "seed", "absent") is None:
        args.seed = default_seed()
    try:
        return args.func(args, out)
    except (NumericalError, np.linalg.LinAlgError) as exc:
        print(f"bevc: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (OSError, json.JSONDecodeError) as exc:
        print(f"bevc: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (BevcError, ValueError, KeyError, WitnessError) as exc:
        print(f"bevc: invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
