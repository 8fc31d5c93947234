"""Naive versus Fourier counting benchmark."""

import logging
import time
from typing import Callable, Dict, List, Sequence

import numpy as np

from .counting import EquationForm, count_bruteforce, count_fourier
from .cyclic import CyclicFunction
from .errors import InvalidArgumentError, NumericalInconsistencyError

logger = logging.getLogger(__name__)

AGREEMENT_TOL = 1e-6


def default_form(d: int) -> EquationForm:
    """(1, ..., 1, -(d-1))."""
    if d < 3:
        raise InvalidArgumentError(f"d must be >= 3, got {d}")
    return EquationForm((1,) * (d - 1) + (-(d - 1),))


def _best_time_ms(fn: Callable[[], float], trials: int) -> float:
    best = float("inf")
    for _ in range(trials):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best * 1000.0


def run_benchmark(sizes: Sequence[int], d: int = 3, trials: int = 3, seed: int = 0) -> Dict:
    """Time brute-force and Fourier counting per modulus after checking they agree."""
    if trials < 1:
        raise InvalidArgumentError(f"trials must be >= 1, got {trials}")
    if not sizes:
        raise InvalidArgumentError("at least one size is required")
    for N in sizes:
        if int(N) != N or N < 8:
            raise InvalidArgumentError(f"sizes must be integers >= 8, got {N!r}")
    eq = default_form(d)
    rng = np.random.default_rng(seed)
    rows: List[Dict] = []
    for N in sizes:
        f = CyclicFunction(int(N), rng.random(int(N)), density=True)
        brute = count_bruteforce(f, eq)
        fourier = count_fourier(f, eq, method="chirp")
        diff = abs(brute - fourier) / max(1.0, abs(brute))
        if diff > AGREEMENT_TOL:
            raise NumericalInconsistencyError(
                f"N={N}: brute {brute!r} and fourier {fourier!r} differ by {diff:.3e} relative"
            )
        brute_ms = _best_time_ms(lambda: count_bruteforce(f, eq), trials)
        fourier_ms = _best_time_ms(lambda: count_fourier(f, eq, method="chirp"), trials)
        ratio = fourier_ms / brute_ms if brute_ms > 0 else float("inf")
        logger.info("bench N=%d brute=%.3fms fourier=%.3fms ratio=%.4f", N, brute_ms, fourier_ms, ratio)
        rows.append({
            "N": int(N), "count": brute, "relative_difference": diff,
            "brute_ms": brute_ms, "fourier_ms": fourier_ms, "ratio": ratio,
        })
    ratios = [row["ratio"] for row in rows]
    return {
        "coeffs": list(eq.coeffs),
        "d": d,
        "trials": trials,
        "seed": seed,
        "rows": rows,
        "ratio_decreasing": all(b < a for a, b in zip(ratios, ratios[1:])),
    }


__all__ = ["run_benchmark", "default_form"]
