"""
Arithmetic on the cyclic group Z_N.

Functions on Z_N, the Fourier transform with the positive-exponent convention
f^(a) = sum_n f(n) e^{2 pi i a n / N}, cyclic convolution, the CRT split of
Z_M into V + W and the distance-to-nearest-integer norm.
"""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Optional, Sequence, Union

import numpy as np

from .config import get_settings
from .errors import InvalidArgumentError

logger = logging.getLogger(__name__)

# Root table entries materialised per block in the direct transform.
ROOT_CHUNK = 1 << 20

Number = Union[int, float, Fraction]


@dataclass(frozen=True, eq=False)
class CyclicFunction:
    """A function on Z_N stored as its N values.

    With ``density=True`` the values must be real and lie in [0, 1] up to
    the configured tolerance.
    """

    modulus: int
    values: np.ndarray
    density: bool = False

    def __post_init__(self):
        if int(self.modulus) != self.modulus or self.modulus < 1:
            raise InvalidArgumentError(f"modulus must be a positive integer, got {self.modulus!r}")
        values = np.array(self.values, copy=True)
        if values.ndim != 1 or values.shape[0] != self.modulus:
            raise InvalidArgumentError(
                f"expected {self.modulus} values, got shape {values.shape}"
            )
        if self.density:
            if np.iscomplexobj(values):
                if np.max(np.abs(values.imag), initial=0.0) > 0:
                    raise InvalidArgumentError("density values must be real")
                values = values.real.copy()
            values = values.astype(np.float64)
            if not np.all(np.isfinite(values)):
                raise InvalidArgumentError("density values must be finite")
            tol = get_settings().density_tol
            low, high = float(values.min()), float(values.max())
            if low < -tol or high > 1 + tol:
                raise InvalidArgumentError(
                    f"density values must lie in [0, 1], found range [{low!r}, {high!r}]"
                )
        values.setflags(write=False)
        object.__setattr__(self, "modulus", int(self.modulus))
        object.__setattr__(self, "values", values)

    @classmethod
    def constant(cls, modulus: int, value: float) -> "CyclicFunction":
        return cls(modulus, np.full(modulus, float(value)), density=True)

    @classmethod
    def indicator(cls, modulus: int, support: Sequence[int]) -> "CyclicFunction":
        values = np.zeros(modulus)
        values[np.asarray(list(support), dtype=np.int64) % modulus] = 1.0
        return cls(modulus, values, density=True)

    @classmethod
    def from_values(cls, values: Sequence[float], density: bool = True) -> "CyclicFunction":
        values = np.asarray(values)
        return cls(values.shape[0], values, density=density)

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.values)

    @cached_property
    def theta(self) -> float:
        """Mean value N^{-1} sum_n f(n)."""
        if not self.is_real:
            raise InvalidArgumentError("theta is defined for real functions only")
        return math.fsum(self.values.tolist()) / self.modulus

    def __len__(self) -> int:
        return self.modulus


def _resolve_method(n: int, method: Optional[str]) -> str:
    settings = get_settings()
    method = method or settings.dft_method
    if method == "auto":
        return "direct" if n <= settings.direct_limit else "chirp"
    if method not in ("direct", "chirp"):
        raise InvalidArgumentError(f"unknown transform method {method!r}")
    return method


def _direct(x: np.ndarray, sign: int) -> np.ndarray:
    n = x.shape[-1]
    idx = np.arange(n, dtype=np.int64)
    roots = np.exp(sign * 2j * np.pi * idx / n)
    out = np.empty(x.shape, dtype=np.complex128)
    rows = max(1, ROOT_CHUNK // n)
    for start in range(0, n, rows):
        block = idx[start:start + rows]
        phase = roots[np.outer(block, idx) % n]
        out[..., start:start + rows] = x @ phase.T
    return out


def _chirp(x: np.ndarray, sign: int) -> np.ndarray:
    # Bluestein: a n = (a^2 + n^2 - (a - n)^2) / 2 turns the transform into a
    # linear convolution that a power-of-two FFT can evaluate.
    n = x.shape[-1]
    k = np.arange(n, dtype=np.int64)
    chirp = np.exp(sign * 1j * np.pi * ((k * k) % (2 * n)) / n)
    size = 1 << (2 * n - 2).bit_length()
    y = np.zeros(x.shape[:-1] + (size,), dtype=np.complex128)
    y[..., :n] = x * chirp
    kernel = np.zeros(size, dtype=np.complex128)
    kernel[:n] = np.conj(chirp)
    if n > 1:
        kernel[size - n + 1:] = np.conj(chirp[1:])[::-1]
    conv = np.fft.ifft(np.fft.fft(y, axis=-1) * np.fft.fft(kernel), axis=-1)
    return chirp * conv[..., :n]


def transform(x: np.ndarray, sign: int = 1, method: Optional[str] = None) -> np.ndarray:
    """Unnormalised transform sum_n x[n] e^{sign 2 pi i a n / N} along the last axis."""
    x = np.asarray(x)
    n = x.shape[-1]
    if n < 2:
        raise InvalidArgumentError(f"transform needs modulus >= 2, got {n}")
    if _resolve_method(n, method) == "direct":
        return _direct(x, sign)
    return _chirp(x, sign)


def dft(f: CyclicFunction, method: Optional[str] = None) -> CyclicFunction:
    if f.modulus < 2:
        raise InvalidArgumentError(f"dft needs modulus >= 2, got {f.modulus}")
    return CyclicFunction(f.modulus, transform(f.values, 1, method))


def idft(F: CyclicFunction, method: Optional[str] = None) -> CyclicFunction:
    if F.modulus < 2:
        raise InvalidArgumentError(f"idft needs modulus >= 2, got {F.modulus}")
    return CyclicFunction(F.modulus, transform(F.values, -1, method) / F.modulus)


def cyclic_convolve(f: CyclicFunction, g: CyclicFunction, method: str = "auto") -> CyclicFunction:
    """(f * g)(n) = sum_{a + b = n mod N} f(a) g(b).

    ``direct`` shifts g once per nonzero value of f and keeps integer dtypes
    exact; ``fourier`` multiplies transforms.
    """
    if f.modulus != g.modulus:
        raise InvalidArgumentError(f"modulus mismatch: {f.modulus} != {g.modulus}")
    n = f.modulus
    if method == "auto":
        nnz = int(np.count_nonzero(f.values))
        method = "direct" if nnz * n <= 50_000_000 else "fourier"
    if method == "direct":
        dtype = np.result_type(f.values, g.values)
        out = np.zeros(n, dtype=dtype)
        for a in np.flatnonzero(f.values):
            out += f.values[a] * np.roll(g.values, int(a))
        return CyclicFunction(n, out)
    if method != "fourier":
        raise InvalidArgumentError(f"unknown convolution method {method!r}")
    product = transform(f.values, 1) * transform(g.values, 1)
    values = transform(product, -1) / n
    if f.is_real and g.is_real:
        values = values.real
    return CyclicFunction(n, values)


@dataclass(frozen=True)
class CrtSplit:
    """Z_M = V + W with V = m1 Z_M (order m2) and W = m2 Z_M (order m1)."""

    m1: int
    m2: int

    def __post_init__(self):
        if self.m1 < 1 or self.m2 < 1:
            raise InvalidArgumentError("CRT factors must be positive")
        if math.gcd(self.m1, self.m2) != 1:
            raise InvalidArgumentError(f"gcd({self.m1}, {self.m2}) != 1")

    @property
    def M(self) -> int:
        return self.m1 * self.m2

    @cached_property
    def _inv_m1(self) -> int:
        return pow(self.m1, -1, self.m2) if self.m2 > 1 else 0

    @property
    def V(self) -> np.ndarray:
        return self.m1 * np.arange(self.m2, dtype=np.int64)

    @property
    def W(self) -> np.ndarray:
        return self.m2 * np.arange(self.m1, dtype=np.int64)

    def v_index(self, a):
        """x in [0, m2) with v(a) = m1 x."""
        return (np.asarray(a, dtype=np.int64) % self.m2 * self._inv_m1) % self.m2

    def v(self, a):
        out = self.m1 * self.v_index(a)
        return int(out) if np.ndim(out) == 0 else out

    def w(self, a):
        out = (np.asarray(a, dtype=np.int64) - self.v(a)) % self.M
        return int(out) if np.ndim(out) == 0 else out

    def w_index(self, a):
        """t in [0, m1) with w(a) = m2 t."""
        out = self.w(a) // self.m2
        return int(out) if np.ndim(out) == 0 else out

    def in_V(self, a):
        return np.asarray(a) % self.m1 == 0

    def in_W(self, a):
        return np.asarray(a) % self.m2 == 0


def crt_decompose(m1: int, m2: int) -> CrtSplit:
    return CrtSplit(int(m1), int(m2))


def mod_norm(x: Number) -> Number:
    """Distance from x to the nearest integer.

    Exact (a Fraction) for int and Fraction input, float otherwise.
    """
    if isinstance(x, (int, np.integer)):
        return Fraction(0)
    if isinstance(x, Fraction):
        r = x - math.floor(x)
        return min(r, 1 - r)
    x = float(x)
    return abs(x - round(x))


def mod_norm_int(num, den: int):
    """Numerator of ||num/den|| over den, elementwise, in integer arithmetic."""
    r = np.asarray(num, dtype=np.int64) % den
    return np.minimum(r, den - r)


__all__ = [
    "CyclicFunction",
    "CrtSplit",
    "transform",
    "dft",
    "idft",
    "cyclic_convolve",
    "crt_decompose",
    "mod_norm",
    "mod_norm_int",
]
