"""Weighted solution counts of a_1 x_1 + ... + a_d x_d = 0 (mod N)."""

import itertools
import logging
import math
from dataclasses import asdict, dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .cyclic import CyclicFunction, dft
from .errors import InvalidArgumentError, NumericalInconsistencyError
from .spectrum import HypothesisReport, check_hypothesis

logger = logging.getLogger(__name__)

IMAG_TOL = 1e-6


@dataclass(frozen=True)
class EquationForm:
    """An invariant linear form: nonzero integer coefficients summing to zero."""

    coeffs: Tuple[int, ...]

    def __post_init__(self):
        try:
            coeffs = tuple(int(a) for a in self.coeffs)
        except (TypeError, ValueError):
            raise InvalidArgumentError(f"coefficients must be integers, got {self.coeffs!r}")
        if any(a != c for a, c in zip(coeffs, self.coeffs)):
            raise InvalidArgumentError(f"coefficients must be integers, got {self.coeffs!r}")
        if len(coeffs) < 3:
            raise InvalidArgumentError(f"need at least 3 coefficients, got {len(coeffs)}")
        if any(a == 0 for a in coeffs):
            raise InvalidArgumentError(f"coefficients must be nonzero: {coeffs}")
        if sum(coeffs) != 0:
            raise InvalidArgumentError(f"coefficients must sum to 0, got sum {sum(coeffs)}")
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def parse(cls, text: str) -> "EquationForm":
        """Parse '1,1,-2'."""
        parts = [p.strip() for p in str(text).split(",") if p.strip()]
        try:
            return cls(tuple(int(p) for p in parts))
        except ValueError:
            raise InvalidArgumentError(f"could not parse coefficients {text!r}")

    @property
    def d(self) -> int:
        return len(self.coeffs)

    @property
    def big_d(self) -> int:
        return 4 * self.d * max(abs(a) for a in self.coeffs)

    def __str__(self) -> str:
        return ",".join(str(a) for a in self.coeffs)


def _check_modulus(f: CyclicFunction) -> int:
    if f.modulus < 2:
        raise InvalidArgumentError("counting needs modulus >= 2")
    return f.modulus


def count_bruteforce(f: CyclicFunction, eq: EquationForm) -> float:
    """Exact weighted count by enumerating the first d-1 variables.

    x_d is solved through a residue table: table[r] sums f over the
    gcd(a_d, N) solutions of a_d x = r, and is zero off the image. All
    products are summed with a single correctly rounded fsum.
    """
    N = _check_modulus(f)
    values = f.values
    a = eq.coeffs
    xs = np.arange(N, dtype=np.int64)
    table = np.bincount((a[-1] * xs) % N, weights=values, minlength=N) \
        if f.is_real else _complex_table(values, a[-1], N)
    # the residue a_d x_d must equal -(a_1 x_1 + ... + a_{d-1} x_{d-1})
    grid_shift = (a[-3] * xs[:, None] + a[-2] * xs[None, :]) % N

    def terms():
        for prefix in itertools.product(range(N), repeat=eq.d - 3):
            weight = 1.0
            shift = 0
            for coef, x in zip(a, prefix):
                weight = weight * values[x]
                shift += coef * x
            if weight == 0:
                continue
            left = weight * values if prefix else values
            grid = left[:, None] * values[None, :] * table[(-(grid_shift + shift)) % N]
            yield from grid.ravel().tolist()

    if not f.is_real:
        items = list(terms())
        return complex(math.fsum(z.real for z in items), math.fsum(z.imag for z in items))
    return math.fsum(terms())


def _complex_table(values: np.ndarray, coef: int, N: int) -> np.ndarray:
    residues = (coef * np.arange(N, dtype=np.int64)) % N
    return (np.bincount(residues, weights=values.real, minlength=N)
            + 1j * np.bincount(residues, weights=values.imag, minlength=N))


def count_from_transform(F: np.ndarray, eq: EquationForm,
                         frequencies: Optional[Sequence[int]] = None) -> complex:
    """N^{-1} sum_b prod_i F(a_i b), optionally restricted to given b."""
    F = np.asarray(F)
    N = F.shape[0]
    b = np.arange(N, dtype=np.int64) if frequencies is None \
        else np.asarray(frequencies, dtype=np.int64) % N
    coeffs = np.array(eq.coeffs, dtype=np.int64)[:, None]
    products = np.prod(F[(coeffs * b[None, :]) % N], axis=0)
    real = math.fsum(products.real.tolist())
    imag = math.fsum(products.imag.tolist())
    return complex(real, imag) / N


def count_fourier(f: CyclicFunction, eq: EquationForm, method: Optional[str] = None) -> float:
    _check_modulus(f)
    z = count_from_transform(dft(f, method).values, eq)
    if abs(z.imag) > IMAG_TOL * (1 + abs(z.real)):
        raise NumericalInconsistencyError(
            f"Fourier count has imaginary residue {z.imag:.3e} (real part {z.real:.6g})"
        )
    return z.real


def theorem_lower_bound(theta: float, N: int, k: int, epsilon: float, d: int) -> float:
    """0.1 4^{-d} k^{-2(d-2) - 2 eps (d - 3/2)} theta (theta N)^{d-1}."""
    if not 0 < theta <= 1:
        raise InvalidArgumentError(f"theta must lie in (0, 1], got {theta!r}")
    if k < 1:
        raise InvalidArgumentError(f"k must be >= 1, got {k!r}")
    if not 0 < epsilon < 1:
        raise InvalidArgumentError(f"epsilon must lie in (0, 1), got {epsilon!r}")
    if int(d) != d or d < 3:
        raise InvalidArgumentError(f"d must be an integer >= 3, got {d!r}")
    exponent = -2 * (d - 2) - 2 * epsilon * (d - 1.5)
    return 0.1 * 4.0 ** (-d) * float(k) ** exponent * theta * (theta * N) ** (d - 1)


@dataclass
class Certificate:
    hypothesis: HypothesisReport
    count: float
    lower_bound: float
    satisfied: bool
    method: str
    hypothesis_failed: bool

    @property
    def passed(self) -> bool:
        return self.satisfied and not self.hypothesis_failed

    def to_dict(self) -> dict:
        out = asdict(self)
        out["passed"] = self.passed
        return out


def count(f: CyclicFunction, eq: EquationForm, method: str = "fourier") -> float:
    if method == "brute":
        return count_bruteforce(f, eq)
    if method == "fourier":
        return count_fourier(f, eq)
    raise InvalidArgumentError(f"method must be brute or fourier, got {method!r}")


def certify(f: CyclicFunction, eq: EquationForm, epsilon: float, k: int,
            mode: str = "relaxed", method: str = "fourier") -> Certificate:
    hypothesis = check_hypothesis(f, eq.d, epsilon, k, mode)
    value = count(f, eq, method)
    theta = hypothesis.theta
    bound = theorem_lower_bound(theta, f.modulus, k, epsilon, eq.d) if theta > 0 else 0.0
    satisfied = value > bound
    if not hypothesis.passed:
        logger.info("hypothesis failed for N=%d k=%d; certificate reported anyway", f.modulus, k)
    return Certificate(hypothesis=hypothesis, count=value, lower_bound=bound,
                       satisfied=satisfied, method=method,
                       hypothesis_failed=not hypothesis.passed)


__all__ = [
    "EquationForm",
    "Certificate",
    "count_bruteforce",
    "count_from_transform",
    "count_fourier",
    "count",
    "theorem_lower_bound",
    "certify",
]
