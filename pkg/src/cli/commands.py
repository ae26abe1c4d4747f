"""
🧮 hrq command line
===================

Tables and curves for high-resolution quantization as CSV or JSON.

Data goes to stdout or ``--out``; status lines and logs go to stderr.
Every ``--out`` run also writes ``<out>.manifest.json`` so ``replay``
can re-run it and verify the checksums.

Exit codes: 0 success, 2 invalid input, 3 numerical nonconvergence or a
replay mismatch.
"""

import argparse
import json
import logging
import re
import sys
import tempfile
import time
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from src.asymptotics.pipeline import (
    concentration_curve,
    concentration_table,
    excess_rate_curve,
    excess_table,
    parse_family,
)
from src.asymptotics.statistics import VARIANTS
from src.bounds.analytic import figure1_table
from src.config.settings import (
    CSV_FLOAT_FORMAT,
    DEFAULT_N_JOBS,
    DEFAULT_SAMPLES,
    DEFAULT_SEED,
    LOG_LEVEL,
)
from src.cli.manifest import RunManifest, sha256_of, write_atomic
from src.data.sources import create_source
from src.errors import NonConvergenceError, ValidationError
from src.lattice.decoders import nearest_point, parse_lattice
from src.lattice.moments import analytic_moment, moment_table, normalized_moment_mc
from src.quantization.evaluation import EvaluationMode, evaluate, parse_quantizer

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NONCONVERGENT = 3

DEFAULT_FIGURE1_LATTICES = "Z:1,A:2,Dstar:3,D:4,E8"

Payload = Union[pd.DataFrame, str]


def status(message: str):
    print(message, file=sys.stderr)


def parse_floats(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ValidationError(f"expected comma-separated numbers, got {text!r}")


def parse_dims(text: str) -> List[int]:
    """``1-24`` or ``1,2,8``"""
    dims = []
    try:
        for part in text.split(","):
            part = part.strip()
            if "-" in part:
                lo, hi = (int(v) for v in part.split("-", 1))
                dims.extend(range(lo, hi + 1))
            elif part:
                dims.append(int(part))
    except ValueError:
        raise ValidationError(f"bad dimension list {text!r}")
    if not dims or min(dims) < 1:
        raise ValidationError(f"dimensions must be positive, got {text!r}")
    return sorted(set(dims))


def format_vector(values: np.ndarray) -> str:
    return ",".join(f"{v + 0.0:g}" for v in np.asarray(values, dtype=float))


# ---------------------------------------------------------------- commands


def cmd_figure1(args) -> pd.DataFrame:
    dims = parse_dims(args.dims)
    records: Dict[int, List[dict]] = {}
    for name in [n.strip() for n in args.lattices.split(",") if n.strip()]:
        try:
            lat = parse_lattice(name)
        except ValidationError:
            match = re.search(r"(\d+)$", name)
            if not match:
                raise
            status(f"⚠️ No decoder for {name}; its row is left blank")
            records.setdefault(int(match.group(1)), []).append(
                {"lattice": name, "ell": None, "moment_source": None, "moment_std_err": np.nan}
            )
            continue
        if lat.dimension not in dims:
            continue
        exact = analytic_moment(lat, 2.0)
        if exact is not None:
            record = {"lattice": lat.name, "ell": exact, "moment_source": "analytic",
                      "moment_std_err": 0.0}
        else:
            estimate = normalized_moment_mc(lat, 2.0, args.samples, args.seed, n_jobs=args.n_jobs)
            record = {"lattice": lat.name, "ell": estimate.ell, "moment_source": "mc",
                      "moment_std_err": estimate.std_error}
        records.setdefault(lat.dimension, []).append(record)
    return figure1_table(dims, records)


def cmd_excess(args) -> pd.DataFrame:
    source = create_source(args.source)
    curve = excess_rate_curve(source, args.r, parse_floats(args.D), parse_family(args.family),
                              n_jobs=args.n_jobs)
    table = excess_table(curve)
    if curve.partial:
        args.partial_error = curve.error
    return table


def cmd_concentration(args) -> pd.DataFrame:
    source = create_source(args.source)
    results = concentration_curve(source, args.r, parse_floats(args.D), args.rho, args.theta,
                                  parse_family(args.family), args.variant, n_jobs=args.n_jobs)
    return concentration_table(results)


def cmd_lattice_decode(args) -> Payload:
    lat = parse_lattice(args.lattice, scale=args.scale)
    points = np.array([parse_floats(p) for p in args.point.split(";")])
    decoded = np.atleast_2d(nearest_point(lat, points))
    if args.format == "json":
        return json.dumps([[v + 0.0 for v in row] for row in decoded.tolist()]) + "\n"
    return "".join(format_vector(row) + "\n" for row in decoded)


def cmd_lattice_moment(args) -> pd.DataFrame:
    lattices = [parse_lattice(n.strip(), scale=args.scale) for n in args.lattice.split(",") if n.strip()]
    return moment_table(lattices, args.r, args.samples, args.seed, n_jobs=args.n_jobs)


def cmd_evaluate(args) -> Payload:
    source = create_source(args.source)
    q = parse_quantizer(args.quantizer, source)
    if args.mode == "mc":
        mode = EvaluationMode.mc(args.samples, args.seed)
    else:
        mode = EvaluationMode.exact()
    report = evaluate(q, source, args.r, mode, n_jobs=args.n_jobs)
    if report.unreliable:
        status("⚠️ Too few samples per occupied cell; entropy flagged unreliable")
    data = report.to_dict()
    if args.format == "json":
        return json.dumps(data, indent=2, sort_keys=True) + "\n"
    low, high = data.pop("entropy_interval")
    return pd.DataFrame([{**data, "entropy_low": low, "entropy_high": high}])


def cmd_replay(args) -> int:
    manifest = RunManifest.load(args.manifest)
    argv = list(manifest.argv)
    # pin environment-dependent defaults to the recorded values
    for flag, value in (("--seed", manifest.seed), ("--samples", manifest.samples)):
        if value is not None and not any(t == flag or t.startswith(flag + "=") for t in argv):
            argv += [flag, str(value)]
    with tempfile.TemporaryDirectory() as scratch:
        original = _replace_out(argv, scratch)
        if original is None:
            raise ValidationError("manifest has no --out; nothing to verify")
        code = run(argv, write_manifest=False)
        if code != EXIT_OK:
            return code
        fresh = Path(scratch) / Path(original).name
        expected = manifest.outputs.get(Path(original).name)
        actual = sha256_of(fresh)
    if actual != expected:
        status(f"❌ Replay mismatch for {original}: {actual} != {expected}")
        return EXIT_NONCONVERGENT
    status(f"✅ Replay reproduced {original} byte for byte")
    return EXIT_OK


def _replace_out(argv: List[str], directory: str) -> Optional[str]:
    for i, token in enumerate(argv):
        if token == "--out" and i + 1 < len(argv):
            original = argv[i + 1]
            argv[i + 1] = str(Path(directory) / Path(original).name)
            return original
        if token.startswith("--out="):
            original = token.split("=", 1)[1]
            argv[i] = "--out=" + str(Path(directory) / Path(original).name)
            return original
    return None


# ------------------------------------------------------------------ parser


def _common() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=DEFAULT_SEED, help="base seed (env HRQ_SEED)")
    common.add_argument("--samples", type=int, default=DEFAULT_SAMPLES,
                        help="Monte Carlo sample count (env HRQ_SAMPLES)")
    common.add_argument("--out", default=None, help="output file; stdout when omitted")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--n-jobs", type=int, default=DEFAULT_N_JOBS, help="joblib workers")
    common.add_argument("--log-level", default=LOG_LEVEL)
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(
        prog="hrq",
        description="High-resolution entropy-constrained quantization: bounds, lattices, experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("figure1", parents=[common], help="per-dimension excess-rate bounds")
    p.add_argument("--dims", default="1-24")
    p.add_argument("--lattices", default=DEFAULT_FIGURE1_LATTICES)
    p.set_defaults(handler=cmd_figure1)

    p = sub.add_parser("excess", parents=[common], help="excess-rate curve of a quantizer family")
    p.add_argument("--source", default="gaussian:0,1")
    p.add_argument("--r", type=float, default=2.0)
    p.add_argument("--D", default="1e-2,1e-3,1e-4,1e-5")
    p.add_argument("--family", default="uniform")
    p.set_defaults(handler=cmd_excess)

    p = sub.add_parser("concentration", parents=[common], help="cell-size concentration statistic")
    p.add_argument("--source", default="gaussian:0,1")
    p.add_argument("--r", type=float, default=2.0)
    p.add_argument("--D", default="1e-3,1e-4,1e-5")
    p.add_argument("--rho", type=float, default=10.0)
    p.add_argument("--theta", type=float, default=0.5)
    p.add_argument("--family", default="uniform")
    p.add_argument("--variant", choices=VARIANTS, default="theorem2_lambda")
    p.set_defaults(handler=cmd_concentration)

    lattice = sub.add_parser("lattice", help="lattice decoding and Voronoi moments")
    lsub = lattice.add_subparsers(dest="lattice_command", required=True)
    p = lsub.add_parser("decode", parents=[common], help="nearest lattice point")
    p.add_argument("lattice")
    p.add_argument("point", help="comma-separated coordinates; separate points with ';'")
    p.add_argument("--scale", type=float, default=1.0)
    p.set_defaults(handler=cmd_lattice_decode)
    p = lsub.add_parser("moment", parents=[common], help="normalized moment by Monte Carlo")
    p.add_argument("lattice", help="comma-separated lattice names")
    p.add_argument("--r", type=float, default=2.0)
    p.add_argument("--scale", type=float, default=1.0)
    p.set_defaults(handler=cmd_lattice_moment)

    p = sub.add_parser("evaluate", parents=[common], help="distortion and entropy of one quantizer")
    p.add_argument("--quantizer", required=True)
    p.add_argument("--source", default="gaussian:0,1")
    p.add_argument("--r", type=float, default=2.0)
    p.add_argument("--mode", choices=("exact", "mc"), default="exact")
    p.set_defaults(handler=cmd_evaluate)

    p = sub.add_parser("replay", help="re-run a manifest and verify its checksums")
    p.add_argument("manifest")
    p.add_argument("--log-level", default=LOG_LEVEL)
    p.set_defaults(handler=None)
    return parser


def render(payload: Payload, fmt: str) -> str:
    if isinstance(payload, str):
        return payload
    if fmt == "json":
        return payload.to_json(orient="records", indent=2) + "\n"
    return payload.to_csv(index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")


def configure_logging(level: str):
    logging.basicConfig(
        level=getattr(logging, str(level).upper(), logging.WARNING),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )


def run(argv: Sequence[str], write_manifest: bool = True) -> int:
    """Parse and execute one command; returns the exit code"""
    argv = list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    configure_logging(args.log_level)
    args.partial_error = None

    started = time.perf_counter()
    try:
        if args.command == "replay":
            return cmd_replay(args)
        if getattr(args, "samples", 1) < 1 or getattr(args, "n_jobs", 1) == 0:
            raise ValidationError("--samples must be >= 1 and --n-jobs nonzero")
        text = render(args.handler(args), args.format)

        if args.out:
            write_atomic(args.out, text)
            if write_manifest:
                manifest = RunManifest(
                    argv=argv,
                    command=args.command,
                    seed=args.seed,
                    samples=args.samples,
                    n_jobs=args.n_jobs,
                    wall_time_s=round(time.perf_counter() - started, 3),
                )
                manifest.record_output(args.out)
                manifest.save(args.out)
            status(f"✅ Wrote {args.out}")
        else:
            sys.stdout.write(text)

        if args.partial_error:
            status(f"⚠️ Partial result: {args.partial_error}")
            return EXIT_NONCONVERGENT
        return EXIT_OK
    except ValidationError as exc:
        status(f"❌ Invalid input: {exc}")
        return EXIT_INVALID
    except NonConvergenceError as exc:
        status(f"❌ Did not converge: {exc} {exc.details or ''}")
        return EXIT_NONCONVERGENT


def main(argv: Optional[Sequence[str]] = None) -> int:
    return run(sys.argv[1:] if argv is None else argv)
