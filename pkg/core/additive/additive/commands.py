"""
One method per command, returning plain dicts.

Both the argparse front end and the truffle agent call into
AdditiveToolkit, so a command behaves the same from either surface.
"""

import logging
import math
import time
from typing import Dict, Optional, Sequence, Union

from .bench import run_benchmark
from .config import get_settings
from .counting import EquationForm, certify, count_bruteforce, count_fourier
from .errors import AdditiveError, InvalidArgumentError, StageError, is_input_error
from .fileio import load_function, load_plan, save_function, save_plan, write_csv, write_report
from .generators import (
    SmoothingParams,
    gpy_weight,
    random_density,
    random_subset,
    smoothed_pseudoprime,
    smoothing_window,
    sumset_report,
    trigonometric_density,
    window_large_coefficients,
)
from .spectrum import check_hypothesis, sort_spectrum, top_frequencies
from .transfer import Overrides, run_chain

logger = logging.getLogger(__name__)

EXAMPLE_KINDS = ("sumset", "gpy", "smoothed", "window", "trig", "random")


def _failure(command: str, e: Exception) -> dict:
    result = {
        "success": False,
        "command": command,
        "error": str(e),
        "error_type": getattr(e, "kind", type(e).__name__),
        "input_error": is_input_error(e),
    }
    if isinstance(e, StageError):
        result["stage"] = e.stage
    if not isinstance(e, AdditiveError):
        logger.exception("%s failed unexpectedly", command)
    return result


def _elapsed_ms(start: float) -> float:
    return (time.perf_counter() - start) * 1000.0


class AdditiveToolkit:
    """Counting, certification, transfer and example generation over Z_N."""

    def __init__(self):
        self.settings = get_settings()

    def _seed(self, seed: Optional[int]) -> int:
        return self.settings.seed if seed is None else seed

    def _finish(self, result: dict, out: Optional[str], start: float) -> dict:
        result.setdefault("timings_ms", {})["total"] = _elapsed_ms(start)
        if out:
            result["report_path"] = write_report(result, out)
        return result

    def Spectrum(self, input: str, k: int, epsilon: float = 0.1, d: int = 3,
                 mode: str = "relaxed", csv_out: Optional[str] = None,
                 out: Optional[str] = None, seed: Optional[int] = None) -> dict:
        """Sorted spectrum summary and the hypothesis check for a function file."""
        start = time.perf_counter()
        try:
            f = load_function(input)
            s = sort_spectrum(f)
            report = check_hypothesis(f, d, epsilon, k, mode, s)
            result = {
                "success": True,
                "command": "spectrum",
                "inputs": {"input": input, "k": k, "epsilon": epsilon, "d": d, "mode": mode,
                           "seed": self._seed(seed)},
                "modulus": f.modulus,
                "theta": report.theta,
                "sigma_sq": report.sigma_sq,
                "tail": report.tail_energy,
                "top_frequencies": list(top_frequencies(s, k)),
                "hypothesis": report.to_dict(),
                "passed": report.passed,
            }
            if csv_out:
                rows = ((rank, int(b), c.real, c.imag, abs(c))
                        for rank, (b, c) in enumerate(s.entries(), start=1))
                result["csv_path"] = write_csv(csv_out, ("rank", "frequency", "re", "im", "magnitude"), rows)
            return self._finish(result, out, start)
        except Exception as e:
            return _failure("spectrum", e)

    def Count(self, input: str, coeffs: Union[str, Sequence[int]], method: str = "fourier",
              out: Optional[str] = None, seed: Optional[int] = None) -> dict:
        """Weighted solution count by brute force, Fourier identity, or both."""
        start = time.perf_counter()
        try:
            if method not in ("brute", "fourier", "both"):
                raise InvalidArgumentError(f"method must be brute, fourier or both, got {method!r}")
            f = load_function(input)
            eq = EquationForm.parse(coeffs) if isinstance(coeffs, str) else EquationForm(tuple(coeffs))
            result = {
                "success": True,
                "command": "count",
                "inputs": {"input": input, "coeffs": list(eq.coeffs), "method": method,
                           "seed": self._seed(seed)},
                "modulus": f.modulus,
                "theta": f.theta,
                "timings_ms": {},
            }
            if method in ("brute", "both"):
                t = time.perf_counter()
                result["count_brute"] = count_bruteforce(f, eq)
                result["timings_ms"]["brute"] = _elapsed_ms(t)
            if method in ("fourier", "both"):
                t = time.perf_counter()
                result["count_fourier"] = count_fourier(f, eq)
                result["timings_ms"]["fourier"] = _elapsed_ms(t)
            result["passed"] = True
            if method == "both":
                brute, fourier = result["count_brute"], result["count_fourier"]
                diff = abs(brute - fourier) / max(1.0, abs(brute))
                result["relative_difference"] = diff
                result["passed"] = diff <= 1e-6
            return self._finish(result, out, start)
        except Exception as e:
            return _failure("count", e)

    def Certify(self, input: str, coeffs: Union[str, Sequence[int]], k: int,
                epsilon: float = 0.1, mode: str = "relaxed", method: str = "fourier",
                out: Optional[str] = None, seed: Optional[int] = None) -> dict:
        """Hypothesis check, count and theorem lower bound in one certificate."""
        start = time.perf_counter()
        try:
            f = load_function(input)
            eq = EquationForm.parse(coeffs) if isinstance(coeffs, str) else EquationForm(tuple(coeffs))
            cert = certify(f, eq, epsilon, k, mode, method)
            result = {
                "success": True,
                "command": "certify",
                "inputs": {"input": input, "coeffs": list(eq.coeffs), "k": k,
                           "epsilon": epsilon, "mode": mode, "method": method,
                           "seed": self._seed(seed)},
                "modulus": f.modulus,
                "certificate": cert.to_dict(),
                "passed": cert.passed,
            }
            return self._finish(result, out, start)
        except Exception as e:
            return _failure("certify", e)

    def Transfer(self, input: str, coeffs: Union[str, Sequence[int]], k: int,
                 epsilon: float = 0.1, overrides: Optional[str] = None,
                 plan_out: Optional[str] = None, plan_in: Optional[str] = None,
                 out: Optional[str] = None, seed: Optional[int] = None) -> dict:
        """Run the Z_N to Z_M transfer chain, optionally re-verifying a saved plan."""
        start = time.perf_counter()
        try:
            f = load_function(input)
            eq = EquationForm.parse(coeffs) if isinstance(coeffs, str) else EquationForm(tuple(coeffs))
            plan = load_plan(plan_in) if plan_in else None
            chain = run_chain(f, eq, epsilon, k, Overrides.parse(overrides), plan=plan)
            result = {
                "success": True,
                "command": "transfer",
                "inputs": {"input": input, "coeffs": list(eq.coeffs), "k": k, "epsilon": epsilon,
                           "overrides": chain.plan.overrides.to_dict(), "plan_in": plan_in,
                           "seed": self._seed(seed)},
                "chain": chain.to_dict(),
                "passed": chain.passed,
                "timings_ms": dict(chain.timings_ms),
            }
            if plan_out:
                result["plan_path"] = save_plan(chain.plan, plan_out)
            return self._finish(result, out, start)
        except Exception as e:
            return _failure("transfer", e)

    def Examples(self, kind: str, modulus: int, out: Optional[str] = None,
                 seed: Optional[int] = None, params: Optional[Dict] = None,
                 report_out: Optional[str] = None) -> dict:
        """Generate an example density and write it in the function file format."""
        start = time.perf_counter()
        params = dict(params or {})
        seed = self._seed(seed)
        try:
            if kind not in EXAMPLE_KINDS:
                raise InvalidArgumentError(f"kind must be one of {', '.join(EXAMPLE_KINDS)}, got {kind!r}")
            N = int(modulus)
            details: Dict = {}
            if kind == "sumset":
                size = int(params.get("size", math.ceil(0.8 * N)))
                fold = int(params.get("fold", 6))
                S = params.get("S")
                S = list(range(N)) if S == "full" else (S if S is not None else random_subset(N, size, seed))
                details = sumset_report(S, N, fold, params.get("ks", (5, 10, 20)))
                f = details.pop("f")
            elif kind == "gpy":
                f = gpy_weight(N, float(params.get("delta", 0.1)))
            elif kind == "smoothed":
                smoothing = SmoothingParams(
                    P=int(params.get("P", 8)), alpha=float(params.get("alpha", 0.7)),
                    edge_fraction=float(params.get("edge_fraction", 0.1)),
                    star_power=int(params.get("star_power", 8)),
                )
                built = smoothed_pseudoprime(N, float(params.get("delta", 0.1)), smoothing)
                f, details = built.f3, built.diagnostics
            elif kind == "window":
                window = smoothing_window(int(params.get("d", 1)), N, int(params.get("P", 8)),
                                          float(params.get("alpha", 0.7)),
                                          float(params.get("edge_fraction", 0.1)))
                f = window.weights
                details = {"X": window.X, "alpha_width": window.alpha_width,
                           "width_capped": window.width_capped, "J": window.J, "span": window.span,
                           "plateau": list(window.plateau), "degenerate": window.degenerate,
                           "large_coefficients": window_large_coefficients(window)}
            elif kind == "trig":
                f = trigonometric_density(N, int(params.get("pairs", 1)),
                                          float(params.get("amplitude", 0.05)),
                                          float(params.get("theta", 0.5)), seed)
            else:
                f = random_density(N, seed)
            result = {
                "success": True,
                "command": "examples",
                "inputs": {"kind": kind, "modulus": N, "seed": seed, "params": params},
                "modulus": f.modulus,
                "theta": f.theta,
                "details": details,
                "passed": True,
            }
            if out:
                result["function_path"] = save_function(f, out)
            return self._finish(result, report_out, start)
        except Exception as e:
            return _failure("examples", e)

    def Bench(self, sizes: Sequence[int], d: int = 3, trials: int = 3,
              seed: Optional[int] = None, csv_out: Optional[str] = None,
              out: Optional[str] = None) -> dict:
        """Benchmark brute-force against Fourier counting across moduli."""
        start = time.perf_counter()
        seed = self._seed(seed)
        try:
            bench = run_benchmark(list(sizes), d, trials, seed)
            result = {"success": True, "command": "bench",
                      "inputs": {"sizes": list(sizes), "d": d, "trials": trials, "seed": seed},
                      **bench, "passed": True}
            if csv_out:
                rows = ((r["N"], r["brute_ms"], r["fourier_ms"], r["ratio"]) for r in bench["rows"])
                result["csv_path"] = write_csv(csv_out, ("N", "brute_time", "fourier_time", "ratio"), rows)
            return self._finish(result, out, start)
        except Exception as e:
            return _failure("bench", e)


__all__ = ["AdditiveToolkit", "EXAMPLE_KINDS"]
