"""Sorted Fourier spectra, tail energy and the smoothness hypothesis check."""

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from sympy import isprime

from .cyclic import CyclicFunction, dft
from .errors import InvalidArgumentError

logger = logging.getLogger(__name__)

MODES = ("strict", "relaxed")

# Relative resolution at which two magnitudes count as tied.
TIE_RESOLUTION = 1e12


@dataclass(frozen=True, eq=False)
class SortedSpectrum:
    """Fourier coefficients ordered by descending magnitude, ties by frequency."""

    modulus: int
    frequencies: np.ndarray
    coefficients: np.ndarray
    sigma_sq: float

    @property
    def magnitudes(self) -> np.ndarray:
        return np.abs(self.coefficients)

    def entries(self) -> List[Tuple[int, complex]]:
        return [(int(b), complex(c)) for b, c in zip(self.frequencies, self.coefficients)]

    def coefficient_at(self, frequency: int) -> complex:
        """f^(frequency), looked up through the permutation."""
        pos = np.flatnonzero(self.frequencies == frequency % self.modulus)
        return complex(self.coefficients[pos[0]])

    def transform(self) -> np.ndarray:
        """Coefficients back in frequency order."""
        out = np.empty(self.modulus, dtype=np.complex128)
        out[self.frequencies] = self.coefficients
        return out


def sort_spectrum(f: CyclicFunction, method: Optional[str] = None) -> SortedSpectrum:
    if not f.is_real:
        raise InvalidArgumentError("sort_spectrum expects a real density")
    if f.modulus < 2:
        raise InvalidArgumentError("sort_spectrum needs modulus >= 2")
    coefficients = dft(f, method).values
    mags = np.abs(coefficients)
    scale = float(mags.max()) or 1.0
    key = np.rint(mags / scale * TIE_RESOLUTION).astype(np.int64)
    freqs = np.arange(f.modulus, dtype=np.int64)
    order = np.lexsort((freqs, -key))
    sigma_sq = math.fsum((mags * mags).tolist())
    frozen_freqs = freqs[order]
    frozen_coeffs = coefficients[order]
    frozen_freqs.setflags(write=False)
    frozen_coeffs.setflags(write=False)
    return SortedSpectrum(f.modulus, frozen_freqs, frozen_coeffs, sigma_sq)


def _check_rank(s: SortedSpectrum, k: int) -> int:
    if int(k) != k or not 1 <= k <= s.modulus:
        raise InvalidArgumentError(f"k must lie in [1, {s.modulus}], got {k!r}")
    return int(k)


def tail_energy(s: SortedSpectrum, k: int) -> float:
    """sum_{j >= k} |lambda_j|^2 with ranks counted from 1."""
    k = _check_rank(s, k)
    tail = s.magnitudes[k - 1:]
    return math.fsum((tail * tail).tolist())


def top_frequencies(s: SortedSpectrum, k: int) -> Tuple[int, ...]:
    k = _check_rank(s, k)
    return tuple(int(b) for b in s.frequencies[:k])


@dataclass
class HypothesisReport:
    modulus: int
    theta: float
    k: int
    epsilon: float
    d: int
    sigma_sq: float
    tail_energy: float
    tail_threshold: float
    k_lower_strict: float
    k_lower_strict_log10: float
    k_upper: float
    mode: str
    passed: bool
    theta_positive: bool
    tail_ok: bool
    k_within_upper: bool
    k_above_lower: bool
    warnings: List[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def tail_threshold(sigma_sq: float, k: int, epsilon: float, d: int) -> float:
    return k ** (-(4 + 10 * epsilon) * (d - 2)) * sigma_sq


def strict_k_lower_log10(theta: float, N: int, epsilon: float, d: int) -> float:
    """log10 of 1000^{d/eps} theta^{-1/(eps d)} log N."""
    if theta <= 0:
        return math.inf
    return 3 * d / epsilon - math.log10(theta) / (epsilon * d) + math.log10(math.log(N))


def check_hypothesis(f: CyclicFunction, d: int, epsilon: float, k: int,
                     mode: str = "relaxed",
                     spectrum: Optional[SortedSpectrum] = None) -> HypothesisReport:
    """Test the Fourier tail condition of the lower-bound theorem.

    Relaxed mode passes on theta > 0 and the tail condition; k <= N^{1/11}
    is reported and warned about but not required. Strict mode additionally
    needs a prime modulus, k <= N^{1/11} and the theorem's lower bound on k.
    """
    if int(d) != d or d < 3:
        raise InvalidArgumentError(f"d must be an integer >= 3, got {d!r}")
    if not 0 < epsilon < 1:
        raise InvalidArgumentError(f"epsilon must lie in (0, 1), got {epsilon!r}")
    if mode not in MODES:
        raise InvalidArgumentError(f"mode must be strict or relaxed, got {mode!r}")
    N = f.modulus
    if mode == "strict" and not isprime(N):
        raise InvalidArgumentError(f"strict mode needs a prime modulus, got {N}")
    s = spectrum if spectrum is not None else sort_spectrum(f)
    if s.modulus != N:
        raise InvalidArgumentError("spectrum modulus does not match the function")
    d, k = int(d), _check_rank(s, k)

    theta = f.theta
    tail = tail_energy(s, k)
    threshold = tail_threshold(s.sigma_sq, k, epsilon, d)
    lower_log10 = strict_k_lower_log10(theta, N, epsilon, d)
    lower = 10 ** lower_log10 if lower_log10 < 300 else math.inf
    upper = N ** (1 / 11)

    warnings = []
    if epsilon >= 1 / 3:
        warnings.append(f"epsilon={epsilon} >= 1/3: the separation count assumes epsilon < 1/3")
    within_upper = k <= upper
    if not within_upper:
        warnings.append(f"k={k} exceeds N^(1/11)={upper:.6g}")
    theta_positive = theta > 0
    tail_ok = tail < threshold
    above_lower = k >= lower
    passed = theta_positive and tail_ok
    if mode == "strict":
        passed = passed and within_upper and above_lower
    for message in warnings:
        logger.warning(message)
    logger.debug("hypothesis N=%d k=%d tail=%.6g threshold=%.6g passed=%s",
                 N, k, tail, threshold, passed)
    return HypothesisReport(
        modulus=N, theta=theta, k=k, epsilon=float(epsilon), d=d,
        sigma_sq=s.sigma_sq, tail_energy=tail, tail_threshold=threshold,
        k_lower_strict=lower, k_lower_strict_log10=lower_log10, k_upper=upper,
        mode=mode, passed=passed, theta_positive=theta_positive, tail_ok=tail_ok,
        k_within_upper=within_upper, k_above_lower=above_lower, warnings=warnings,
    )


__all__ = [
    "SortedSpectrum",
    "HypothesisReport",
    "sort_spectrum",
    "tail_energy",
    "tail_threshold",
    "top_frequencies",
    "check_hypothesis",
]
