"""
Example densities: sumset convolutions, GPY pseudoprime weights and the
smoothing windows used to tame their spectra, plus seeded random helpers.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from sympy import primerange

from .cyclic import CyclicFunction, cyclic_convolve, dft, transform
from .errors import InvalidArgumentError
from .spectrum import sort_spectrum, tail_energy

logger = logging.getLogger(__name__)

# Asymptotic constants of the smoothing lemma; the defaults below are desk scale.
NOMINAL_POWER = 1000
NOMINAL_WIDTH_EXPONENT = 0.999
NOMINAL_STAR_POWER = 1000

INT64_SAFE = 2 ** 62


@dataclass(frozen=True, eq=False)
class SievePack:
    """Moebius and divisor-count tables indexed 0..limit (index 0 unused)."""

    limit: int
    moebius: np.ndarray
    tau: np.ndarray

    def max_tau(self, upto: int) -> int:
        return int(self.tau[1:upto + 1].max())


def sieve(limit: int) -> SievePack:
    if limit < 1:
        raise InvalidArgumentError(f"sieve limit must be >= 1, got {limit}")
    mu = np.ones(limit + 1, dtype=np.int64)
    mu[0] = 0
    for p in primerange(2, limit + 1):
        mu[p::p] *= -1
        mu[p * p::p * p] = 0
    tau = np.zeros(limit + 1, dtype=np.int64)
    for d in range(1, limit + 1):
        tau[d::d] += 1
    mu.setflags(write=False)
    tau.setflags(write=False)
    return SievePack(limit, mu, tau)


def random_subset(N: int, size: int, seed: int = 0) -> np.ndarray:
    if not 1 <= size <= N:
        raise InvalidArgumentError(f"subset size must lie in [1, {N}], got {size}")
    rng = np.random.default_rng(seed)
    return np.sort(rng.choice(N, size=size, replace=False))


def random_density(N: int, seed: int = 0) -> CyclicFunction:
    rng = np.random.default_rng(seed)
    return CyclicFunction(N, rng.random(N), density=True)


def trigonometric_density(N: int, pairs: int = 1, amplitude: float = 0.05,
                          theta: float = 0.5, seed: int = 0) -> CyclicFunction:
    """theta + sum_j amplitude cos(2 pi b_j n / N + phi_j) with seeded b_j, phi_j."""
    if pairs < 1 or 2 * pairs > N - 1:
        raise InvalidArgumentError(f"cannot place {pairs} frequency pairs mod {N}")
    if theta - pairs * amplitude < 0 or theta + pairs * amplitude > 1 or amplitude < 0:
        raise InvalidArgumentError("theta +- pairs * amplitude must stay within [0, 1]")
    rng = np.random.default_rng(seed)
    freqs = rng.choice(np.arange(1, (N + 1) // 2), size=pairs, replace=False)
    phases = rng.uniform(0.0, 2 * np.pi, size=pairs)
    n = np.arange(N, dtype=np.int64)
    values = np.full(N, float(theta))
    for b, phi in zip(freqs.tolist(), phases.tolist()):
        values += amplitude * np.cos(2 * np.pi * ((b * n) % N) / N + phi)
    return CyclicFunction(N, np.clip(values, 0.0, 1.0), density=True)


def sumset_density(S: Sequence[int], modulus: int, fold: int = 6) -> CyclicFunction:
    """|S|^{-(t-1)} times the t-fold self-convolution of the indicator of S."""
    S = np.unique(np.asarray(list(S), dtype=np.int64) % modulus)
    if S.size == 0:
        raise InvalidArgumentError("S must be nonempty")
    if int(fold) != fold or fold < 2:
        raise InvalidArgumentError(f"fold must be an integer >= 2, got {fold!r}")
    size = int(S.size)
    scale = size ** (fold - 1)
    exact = scale < INT64_SAFE
    dtype = np.int64 if exact else np.float64
    indicator = np.zeros(modulus, dtype=dtype)
    indicator[S] = 1
    base = CyclicFunction(modulus, indicator)
    acc = base
    for _ in range(fold - 1):
        acc = cyclic_convolve(base, acc, method="direct" if exact else "fourier")
    if not exact:
        logger.warning("sumset counts exceed int64; convolving in floating point")
    values = acc.values / float(scale)
    return CyclicFunction(modulus, np.clip(values, 0.0, 1.0), density=True)


def sumset_tail_bound(k: int, size: int, N: int, fold: int = 6) -> float:
    """k^{-(t-1)} |S|^{2-t} N^t, which bounds sum_{j >= k} |lambda_j|^2."""
    return float(k) ** (-(fold - 1)) * float(size) ** (2 - fold) * float(N) ** fold


def _divisor_cutoff(N: int, delta: float) -> int:
    return int(math.floor(N ** delta * (1 + 1e-12)))


def gpy_divisor_sum(N: int, delta: float, pack: Optional[SievePack] = None) -> np.ndarray:
    """sum_{d | n, d <= N^delta} mu(d) log(N/d) for 1 <= n <= N/2, zero elsewhere."""
    half = N // 2
    d_max = _divisor_cutoff(N, delta)
    pack = pack or sieve(max(half, d_max, 1))
    inner = np.zeros(N)
    for d in range(1, min(d_max, half) + 1):
        mu = int(pack.moebius[d])
        if mu:
            inner[d:half + 1:d] += mu * math.log(N / d)
    return inner


def _check_gpy(N: int, delta: float) -> None:
    if int(N) != N or N < 16:
        raise InvalidArgumentError(f"N must be an integer >= 16, got {N!r}")
    if not 0 < delta < 0.5:
        raise InvalidArgumentError(f"delta must lie in (0, 1/2), got {delta!r}")


def gpy_weight(N: int, delta: float, pack: Optional[SievePack] = None) -> CyclicFunction:
    """(divisor sum)^2 / ((log N)^2 max_{n <= N/2} tau(n)^2) on [1, N/2]."""
    _check_gpy(N, delta)
    pack = pack or sieve(N // 2)
    log_n = math.log(N)
    max_tau = pack.max_tau(N // 2)
    values = (gpy_divisor_sum(N, delta, pack) / log_n) ** 2 / max_tau ** 2
    values[0] = 0.0
    return CyclicFunction(N, values, density=True)


@dataclass(frozen=True, eq=False)
class SmoothingWindow:
    """w_d: X^{-P} phi^{*P} convolved with a comb of J+1 points, all at step d.

    phi is the indicator of {d n : 0 <= n < X}; w_d(d n) = 1 for n in
    [span, J] where span = P (X - 1).
    """

    d: int
    N: int
    P: int
    alpha: float
    X: int
    J: int
    span: int
    weights: CyclicFunction

    @property
    def alpha_width(self) -> int:
        """floor(N^alpha), the bump width before the edge cap."""
        return int(math.floor(self.N ** self.alpha))

    @property
    def width_capped(self) -> bool:
        return self.X < self.alpha_width

    @property
    def degenerate(self) -> bool:
        return self.J < self.span

    @property
    def plateau(self) -> Tuple[int, int]:
        """Integer range [lo, hi] of m on which w_d(m) = [d | m]."""
        return self.d * self.span, self.d * self.J

    def phi_transform(self, a) -> np.ndarray:
        """sum_{0 <= n < X} e^{2 pi i a d n / N}."""
        a = np.asarray(a, dtype=np.int64)
        n = np.arange(self.X, dtype=np.int64)
        phase = (np.multiply.outer(a * self.d % self.N, n)) % self.N
        return np.exp(2j * np.pi * phase / self.N).sum(axis=-1)

    def transform(self, a) -> np.ndarray:
        """Closed form X^{-P} phi^(a)^P C^(a) of the window's transform."""
        a = np.asarray(a, dtype=np.int64)
        j = np.arange(self.J + 1, dtype=np.int64)
        comb = np.exp(2j * np.pi * (np.multiply.outer(a * self.d % self.N, j) % self.N) / self.N).sum(axis=-1)
        return (self.phi_transform(a) / self.X) ** self.P * comb


def power_kernel(width: int, power: int) -> np.ndarray:
    """width^{-power} (1_{[0,width)})^{*power}, total mass 1."""
    box = np.ones(width)
    kernel = box / width
    for _ in range(power - 1):
        kernel = np.convolve(kernel, box) / width
    return kernel


def smoothing_window(d: int, N: int, P: int = 8, alpha: float = 0.7,
                     edge_fraction: float = 0.1) -> SmoothingWindow:
    if int(P) != P or P < 2 or P % 2:
        raise InvalidArgumentError(f"P must be an even integer >= 2, got {P!r}")
    if int(d) != d or d < 1:
        raise InvalidArgumentError(f"d must be a positive integer, got {d!r}")
    if not 0 < alpha < 1:
        raise InvalidArgumentError(f"alpha must lie in (0, 1), got {alpha!r}")
    if not 0 < edge_fraction <= 0.5:
        raise InvalidArgumentError(f"edge_fraction must lie in (0, 1/2], got {edge_fraction!r}")
    if d > N ** 0.25:
        logger.debug("window step d=%d exceeds N^(1/4)", d)
    X = min(int(math.floor(N ** alpha)), max(1, int(edge_fraction * N / (d * P))))
    span = P * (X - 1)
    J = N // (2 * d) - span
    if J < 0:
        raise InvalidArgumentError(f"N={N} is too small for a window with d={d}, P={P}")
    bump = power_kernel(X, P)
    steps = np.convolve(bump, np.ones(J + 1))
    values = np.zeros(N)
    values[(d * np.arange(steps.size, dtype=np.int64)) % N] = steps
    window = SmoothingWindow(d=d, N=N, P=P, alpha=alpha, X=X, J=J, span=span,
                             weights=CyclicFunction(N, np.clip(values, 0.0, 1.0), density=True))
    if window.width_capped:
        logger.debug("window width capped by edge_fraction: X=%d < floor(N^alpha)=%d",
                     X, window.alpha_width)
    if window.degenerate:
        logger.warning("degenerate window: d=%d N=%d has empty plateau (J=%d < span=%d)",
                       d, N, J, span)
    return window


def window_large_coefficients(window: SmoothingWindow, threshold: Optional[float] = None) -> Dict:
    """Scan every a for |w^(a)| >= threshold and test the bump criterion there.

    With |C^(a)| <= J + 1 <= N, |w^(a)| >= N^{-2} forces
    |phi^(a)| > X N^{-3/P} / 2.
    """
    N = window.N
    threshold = N ** -2.0 if threshold is None else threshold
    spectrum = np.abs(dft(window.weights).values)
    large = np.flatnonzero(spectrum >= threshold)
    phi = np.abs(window.phi_transform(large)) if large.size else np.zeros(0)
    floor = window.X * N ** (-3.0 / window.P) / 2
    return {
        "threshold": threshold,
        "large_count": int(large.size),
        "criterion_floor": floor,
        "criterion_holds": bool(np.all(phi > floor)),
        "min_phi_on_large": float(phi.min()) if phi.size else None,
        "nominal_allowance": N ** 0.005,
    }


@dataclass(frozen=True)
class SmoothingParams:
    P: int = 8
    alpha: float = 0.7
    edge_fraction: float = 0.1
    star_power: int = 8
    star_width: Optional[int] = None
    threshold_scales: Tuple[float, ...] = (1.0, 10.0, 100.0)
    tail_ks: Tuple[int, ...] = (5, 10, 20)


@dataclass
class PseudoprimeResult:
    f: CyclicFunction
    f3: CyclicFunction
    g: np.ndarray
    g2: np.ndarray
    f2: np.ndarray
    w_star: np.ndarray
    diagnostics: Dict = field(default_factory=dict)


def star_window(N: int, power: int, width: Optional[int] = None) -> Tuple[np.ndarray, Tuple[int, int]]:
    """w*: the power kernel shifted to start at ceil(N/5), scaled so sup w* = 1."""
    width = width or max(1, N // (5 * power))
    kernel = power_kernel(width, power)
    kernel = kernel / kernel.max()
    start = -(-N // 5)
    values = np.zeros(N)
    values[(start + np.arange(kernel.size)) % N] = kernel
    return values, (start, start + kernel.size - 1)


def _large_count(F: np.ndarray, threshold: float, bound: float) -> Dict:
    count = int(np.count_nonzero(np.abs(F) > threshold))
    return {"threshold": threshold, "count": count, "bound": bound, "within_bound": count <= bound}


def smoothed_pseudoprime(N: int, delta: float,
                         params: SmoothingParams = SmoothingParams()) -> PseudoprimeResult:
    """Build f3 = f w* from the GPY weight f and report the smoothing diagnostics."""
    _check_gpy(N, delta)
    pack = sieve(N // 2)
    f = gpy_weight(N, delta, pack)
    g = gpy_divisor_sum(N, delta, pack)
    log_n = math.log(N)
    max_tau = pack.max_tau(N // 2)

    g2 = np.zeros(N)
    lo, hi = 1, N // 2
    degenerate = []
    widths = {}
    for d in range(1, min(_divisor_cutoff(N, delta), N // 2) + 1):
        mu = int(pack.moebius[d])
        if not mu:
            continue
        window = smoothing_window(d, N, params.P, params.alpha, params.edge_fraction)
        g2 += mu * math.log(N / d) * window.weights.values
        widths[str(d)] = {"X": window.X, "alpha_width": window.alpha_width,
                          "capped": window.width_capped}
        if window.degenerate:
            degenerate.append(d)
        plateau_lo, plateau_hi = window.plateau
        lo, hi = max(lo, plateau_lo), min(hi, plateau_hi)
    f2 = g2 ** 2 / (log_n ** 2 * max_tau ** 2)

    w_star, star_support = star_window(N, params.star_power, params.star_width)
    f3 = CyclicFunction(N, f.values * w_star, density=True)
    positivity = bool(np.all(f.values[f3.values > 0] > 0))

    agreement = np.arange(lo, hi + 1) if lo <= hi else np.zeros(0, dtype=np.int64)
    g2_dev = float(np.max(np.abs(g2[agreement] - g[agreement]), initial=0.0))
    f2_dev = float(np.max(np.abs(f2[agreement] - f.values[agreement]), initial=0.0))

    # |g2^(a)| and |f2^(a)| above N^{-1}, against N^{delta+0.005} and N^{2 delta+0.01}
    g2_large = _large_count(transform(g2), 1.0 / N, N ** (delta + 0.005))
    f2_large = _large_count(transform(f2), 1.0 / N, N ** (2 * delta + 0.01))

    s = sort_spectrum(f3)
    mags = s.magnitudes
    scale = N ** -0.5
    large_counts = {f"{c:g}": int(np.count_nonzero(mags > c * scale)) for c in params.threshold_scales}
    tails = {}
    for k in params.tail_ks:
        if k <= N:
            tails[str(k)] = {
                "tail": tail_energy(s, k),
                "threshold_k5": float(k) ** -5 * s.sigma_sq,
            }
    diagnostics = {
        "N": N, "delta": delta, "params": {
            "P": params.P, "alpha": params.alpha, "edge_fraction": params.edge_fraction,
            "star_power": params.star_power, "star_width": params.star_width,
            "nominal_P": NOMINAL_POWER, "nominal_alpha": NOMINAL_WIDTH_EXPONENT,
            "nominal_star_power": NOMINAL_STAR_POWER,
        },
        "max_tau": max_tau,
        "agreement_range": [lo, hi] if lo <= hi else None,
        "g2_deviation": g2_dev,
        "f2_deviation": f2_dev,
        "g2_large": g2_large,
        "f2_large": f2_large,
        "window_widths": widths,
        "degenerate_windows": degenerate,
        "star_support": list(star_support),
        "star_within_agreement": lo <= star_support[0] and star_support[1] <= hi,
        "positivity_implication": positivity,
        "f3_mass": float(s.coefficients[0].real),
        "large_coefficients": large_counts,
        "large_threshold_unit": scale,
        "tails": tails,
        "nominal_k_estimate": N ** (2 * delta + 0.02),
        "k_upper": N ** (1 / 11),
    }
    return PseudoprimeResult(f=f, f3=f3, g=g, g2=g2, f2=f2, w_star=w_star, diagnostics=diagnostics)


def sumset_report(S: np.ndarray, N: int, fold: int, ks: Sequence[int]) -> Dict:
    """Measured tails of a sumset density against the k^{-(t-1)}|S|^{2-t}N^t bound."""
    f = sumset_density(S, N, fold)
    s = sort_spectrum(f)
    rows = {}
    for k in ks:
        if 1 <= k <= N:
            tail = tail_energy(s, k)
            bound = sumset_tail_bound(k, len(S), N, fold)
            rows[str(k)] = {"tail": tail, "bound": bound, "holds": tail <= bound}
    theta = f.theta
    return {
        "f": f, "theta": theta, "size": int(len(S)), "fold": fold, "tails": rows,
        "theta_k_log10": -66 * math.log10(theta) if theta > 0 else None,
        "k_upper_log10": math.log10(N) / 11,
        "k_upper": N ** (1 / 11),
    }


__all__ = [
    "SievePack",
    "SmoothingWindow",
    "SmoothingParams",
    "PseudoprimeResult",
    "sieve",
    "random_subset",
    "random_density",
    "trigonometric_density",
    "sumset_density",
    "sumset_tail_bound",
    "sumset_report",
    "gpy_divisor_sum",
    "gpy_weight",
    "power_kernel",
    "smoothing_window",
    "window_large_coefficients",
    "star_window",
    "smoothed_pseudoprime",
]
