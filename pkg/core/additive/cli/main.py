"""
Command-line front end.

    python core/additive/cli/main.py count --input f.json --coeffs 1,1,-2 --method both

Exit codes: 0 success, 1 semantic failure (hypothesis, bound, chain check
or stage failure), 2 input error.
"""

import argparse
import json
import logging
import os
import sys
from typing import List, Optional

__PROJECT_ROOT__ = os.path.abspath(os.path.join(os.path.dirname(__file__), os.pardir))
if __PROJECT_ROOT__ not in sys.path:
    sys.path.insert(0, __PROJECT_ROOT__)

from additive.commands import EXAMPLE_KINDS, AdditiveToolkit  # noqa: E402
from additive.config import configure_logging  # noqa: E402
from additive.errors import AdditiveError  # noqa: E402
from additive.fileio import to_jsonable  # noqa: E402

logger = logging.getLogger("additive.cli")

EXIT_OK, EXIT_FAILED, EXIT_INPUT = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _int_list(text: str) -> List[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def parse_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    parser = _Parser(description="Weighted counting of invariant linear congruences over Z_N")
    parser.add_argument("--log-level", default=None, help="logging level (default: ADDITIVE_LOG_LEVEL)")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, coeffs=True, k=True):
        p.add_argument("--input", required=True, help="function file (JSON or CSV)")
        p.add_argument("--out", help="write the JSON report here")
        p.add_argument("--seed", type=int, default=None, help="random seed (default: ADDITIVE_SEED)")
        if coeffs:
            p.add_argument("--coeffs", required=True, help="a1,a2,...,ad summing to 0")
        if k:
            p.add_argument("--k", type=int, required=True)
            p.add_argument("--eps", type=float, default=0.1)

    p = sub.add_parser("spectrum", help="sorted spectrum and hypothesis check")
    common(p, coeffs=False)
    p.add_argument("--d", type=int, default=3)
    p.add_argument("--mode", choices=("strict", "relaxed"), default="relaxed")
    p.add_argument("--csv", help="write rank,frequency,re,im,magnitude rows here")

    p = sub.add_parser("count", help="weighted solution count")
    common(p, k=False)
    p.add_argument("--method", choices=("brute", "fourier", "both"), default="both")

    p = sub.add_parser("certify", help="lower-bound certificate")
    common(p)
    p.add_argument("--mode", choices=("strict", "relaxed"), default="relaxed")
    p.add_argument("--method", choices=("brute", "fourier"), default="fourier")

    p = sub.add_parser("transfer", help="run the Z_N to Z_M transfer chain")
    common(p)
    p.add_argument("--overrides", help="i_scale=..,band_scale=..,sep_scale=..")
    p.add_argument("--plan-out", help="write the transfer plan here")
    p.add_argument("--plan-in", help="re-verify a saved plan instead of searching")

    p = sub.add_parser("examples", help="generate an example density")
    p.add_argument("kind", choices=EXAMPLE_KINDS)
    p.add_argument("--modulus", "--N", dest="modulus", type=int, required=True)
    p.add_argument("--out", help="function file to write")
    p.add_argument("--report", help="write the JSON report here")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--size", type=int, help="sumset: |S| (default ceil(0.8 N))")
    p.add_argument("--full", action="store_true", help="sumset: use S = Z_N")
    p.add_argument("--fold", type=int, help="sumset: convolution fold t")
    p.add_argument("--ks", type=_int_list, help="sumset: ranks for the tail report")
    p.add_argument("--delta", type=float, help="gpy/smoothed: divisor cutoff exponent")
    p.add_argument("--d", type=int, help="window: step d")
    p.add_argument("--P", type=int, help="window/smoothed: kernel power")
    p.add_argument("--alpha", type=float, help="window/smoothed: width exponent")
    p.add_argument("--edge-fraction", type=float)
    p.add_argument("--star-power", type=int)
    p.add_argument("--pairs", type=int, help="trig: number of cosine pairs")
    p.add_argument("--amplitude", type=float)
    p.add_argument("--theta", type=float)

    p = sub.add_parser("bench", help="naive versus Fourier counting benchmark")
    p.add_argument("--sizes", type=_int_list, default=[64, 256, 1024])
    p.add_argument("--d", type=int, default=3)
    p.add_argument("--trials", type=int, default=3)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", help="write the JSON report here")
    p.add_argument("--csv", help="write N,brute_time,fourier_time,ratio rows here")

    return parser.parse_args(argv)


def _example_params(args: argparse.Namespace) -> dict:
    names = ("size", "fold", "ks", "delta", "d", "P", "alpha", "edge_fraction",
             "star_power", "pairs", "amplitude", "theta")
    params = {name: getattr(args, name) for name in names if getattr(args, name) is not None}
    if args.full:
        params["S"] = "full"
    return params


def dispatch(args: argparse.Namespace) -> dict:
    toolkit = AdditiveToolkit()
    if args.command == "spectrum":
        return toolkit.Spectrum(args.input, args.k, args.eps, args.d, args.mode, args.csv, args.out,
                                args.seed)
    if args.command == "count":
        return toolkit.Count(args.input, args.coeffs, args.method, args.out, args.seed)
    if args.command == "certify":
        return toolkit.Certify(args.input, args.coeffs, args.k, args.eps, args.mode, args.method,
                               args.out, args.seed)
    if args.command == "transfer":
        return toolkit.Transfer(args.input, args.coeffs, args.k, args.eps, args.overrides,
                                args.plan_out, args.plan_in, args.out, args.seed)
    if args.command == "examples":
        return toolkit.Examples(args.kind, args.modulus, args.out, args.seed,
                                _example_params(args), args.report)
    return toolkit.Bench(args.sizes, args.d, args.trials, args.seed, args.csv, args.out)


def exit_code(result: dict) -> int:
    if not result.get("success"):
        return EXIT_INPUT if result.get("input_error") else EXIT_FAILED
    return EXIT_OK if result.get("passed", True) else EXIT_FAILED


def main(argv: Optional[List[str]] = None) -> int:
    args = parse_args(argv)
    try:
        configure_logging("DEBUG" if args.verbose else args.log_level)
        result = dispatch(args)
    except (AdditiveError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    print(json.dumps(to_jsonable(result), indent=2))
    if not result.get("success"):
        print(f"error: {result.get('error')}", file=sys.stderr)
    return exit_code(result)


if __name__ == "__main__":
    sys.exit(main())
