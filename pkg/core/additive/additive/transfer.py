"""
Transfer of the counting problem from Z_N to Z_M.

The pipeline dilates f so its large frequencies are well separated, picks
M = m1 m2 with the correspondence property on the exceptional frequencies
Xc, lifts f to a window-smoothed g on Z_M and replaces g by the
W-invariant h = (V_u g) * W. Every structural claim along the way is
checked numerically and reported.
"""

import logging
import math
import time
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from sympy import isprime, nextprime

from .counting import EquationForm, count_bruteforce, count_from_transform
from .cyclic import CrtSplit, CyclicFunction, cyclic_convolve, dft, mod_norm_int, transform
from .errors import (
    InternalError,
    InvalidArgumentError,
    NumericalInconsistencyError,
    PlanRejectedError,
    SearchFailureError,
    StageError,
)
from .spectrum import SortedSpectrum, check_hypothesis, sort_spectrum, top_frequencies

logger = logging.getLogger(__name__)

# Moduli up to this size also get a brute-force count of h as an oracle.
BRUTE_ORACLE_LIMIT = 2500
# Frequencies sampled (besides 0 and Xc) when checking g^ against its closed form.
ELL_SAMPLES = 64


@dataclass(frozen=True)
class Overrides:
    """Multiplicative relaxations of the construction's constants.

    i_scale shrinks the interval I, band_scale the band k^{3 eps} defining
    Xc, sep_scale the separation threshold k^{4 eps}/m2.
    """

    i_scale: float = 1.0
    band_scale: float = 1.0
    sep_scale: float = 1.0

    def __post_init__(self):
        for name in ("i_scale", "band_scale", "sep_scale"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise InvalidArgumentError(f"override {name} must be a positive number, got {value!r}")

    @classmethod
    def parse(cls, text: Optional[str]) -> "Overrides":
        """Parse 'i_scale=0.03,band_scale=0.3'."""
        if not text:
            return cls()
        values = {}
        for item in text.split(","):
            if not item.strip():
                continue
            key, sep, raw = item.partition("=")
            key = key.strip()
            if not sep or key not in cls.__dataclass_fields__:
                raise InvalidArgumentError(f"unknown or malformed override {item.strip()!r}")
            try:
                values[key] = float(raw)
            except ValueError:
                raise InvalidArgumentError(f"override {key} is not a number: {raw!r}")
        return cls(**values)

    @property
    def active(self) -> bool:
        return (self.i_scale, self.band_scale, self.sep_scale) != (1.0, 1.0, 1.0)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class TransferPlan:
    N: int
    k: int
    epsilon: float
    eq: EquationForm
    L: int
    q: int
    m2: int
    m1: int
    M: int
    b_set: Tuple[int, ...]
    I_half: int
    Xc: Tuple[int, ...]
    u_g: Optional[int] = None
    u_h: Optional[int] = None
    overrides: Overrides = field(default_factory=Overrides)
    top_frequencies: Tuple[int, ...] = ()
    separation_fraction: float = 0.0
    m1_range: Tuple[int, int] = (0, 0)

    @property
    def split(self) -> CrtSplit:
        return CrtSplit(self.m1, self.m2)

    @property
    def X(self) -> np.ndarray:
        return np.setdiff1d(np.arange(self.M, dtype=np.int64), np.asarray(self.Xc, dtype=np.int64))

    @property
    def I_size(self) -> int:
        return 2 * self.I_half + 1

    @property
    def band(self) -> float:
        return self.k ** (3 * self.epsilon) * self.overrides.band_scale

    def to_dict(self) -> dict:
        return {
            "N": self.N, "k": self.k, "epsilon": self.epsilon,
            "coeffs": list(self.eq.coeffs), "L": self.L, "q": self.q,
            "m2": self.m2, "m1": self.m1, "M": self.M,
            "b_set": list(self.b_set), "I_half": self.I_half, "Xc": list(self.Xc),
            "u_g": self.u_g, "u_h": self.u_h, "overrides": self.overrides.to_dict(),
            "top_frequencies": list(self.top_frequencies),
            "separation_fraction": self.separation_fraction,
            "m1_range": list(self.m1_range),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TransferPlan":
        try:
            plan = cls(
                N=int(data["N"]), k=int(data["k"]), epsilon=float(data["epsilon"]),
                eq=EquationForm(tuple(data["coeffs"])), L=int(data["L"]), q=int(data["q"]),
                m2=int(data["m2"]), m1=int(data["m1"]), M=int(data["M"]),
                b_set=tuple(int(b) for b in data["b_set"]), I_half=int(data["I_half"]),
                Xc=tuple(int(a) for a in data["Xc"]),
                u_g=None if data.get("u_g") is None else int(data["u_g"]),
                u_h=None if data.get("u_h") is None else int(data["u_h"]),
                overrides=Overrides(**data.get("overrides", {})),
                top_frequencies=tuple(int(b) for b in data.get("top_frequencies", ())),
                separation_fraction=float(data.get("separation_fraction", 0.0)),
                m1_range=tuple(int(x) for x in data.get("m1_range", (0, 0))),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise InvalidArgumentError(f"malformed transfer plan: {e}")
        if plan.M != plan.m1 * plan.m2:
            raise InvalidArgumentError("malformed transfer plan: M != m1 * m2")
        return plan


def log_size(N: int) -> int:
    """L = floor(ln N) + 1."""
    return int(math.floor(math.log(N))) + 1


def choose_m2(k: int, epsilon: float) -> int:
    """Smallest prime >= k^{2+2 eps}; it lies below 2 k^{2+2 eps} by Bertrand."""
    if int(k) != k or k < 2:
        raise InvalidArgumentError(f"k must be an integer >= 2, got {k!r}")
    if not 0 < epsilon < 1:
        raise InvalidArgumentError(f"epsilon must lie in (0, 1), got {epsilon!r}")
    target = k ** (2 + 2 * epsilon)
    m2 = int(nextprime(math.ceil(target) - 1))
    if m2 > 2 * target:
        raise InternalError(f"no prime in [{target}, {2 * target}]")
    return m2


def m1_interval(N: int, k: int, epsilon: float) -> Tuple[int, int]:
    """Integers J = [k^{-2-eps} N, 2 k^{-2-eps} N]."""
    scale = k ** (-2 - epsilon) * N
    return math.ceil(scale), math.floor(2 * scale)


def separation_threshold(k: int, epsilon: float, m2: int, sep_scale: float = 1.0) -> float:
    return k ** (4 * epsilon) / m2 * sep_scale


def cross_differences(b_set: Sequence[int], eq: EquationForm, N: int) -> np.ndarray:
    """Distinct nonzero a_u b_i - a_v b_j mod N."""
    b = np.asarray(b_set, dtype=np.int64) % N
    coeffs = np.asarray(sorted(set(eq.coeffs)), dtype=np.int64)
    products = np.unique((coeffs[:, None] * b[None, :]).ravel() % N)
    diffs = np.unique((products[:, None] - products[None, :]).ravel() % N)
    return diffs[diffs != 0]


def _bad_m1(m1s: np.ndarray, diffs: np.ndarray, N: int, tau: float) -> np.ndarray:
    if diffs.size == 0:
        return np.zeros(m1s.shape, dtype=bool)
    dist = mod_norm_int(m1s[:, None] * diffs[None, :], N)
    return np.any(dist <= tau * N, axis=1)


def separation_fraction(b_set: Sequence[int], eq: EquationForm, N: int, k: int,
                        epsilon: float, m2: int, sep_scale: float = 1.0) -> float:
    """Fraction of m1 in J for which some quadruple violates separation."""
    lo, hi = m1_interval(N, k, epsilon)
    if lo > hi:
        raise SearchFailureError(f"empty m1 interval [{lo}, {hi}]")
    m1s = np.arange(lo, hi + 1, dtype=np.int64)
    tau = separation_threshold(k, epsilon, m2, sep_scale)
    bad = _bad_m1(m1s, cross_differences(b_set, eq, N), N, tau)
    return float(np.count_nonzero(bad)) / m1s.size


def separation_search(spectrum: SortedSpectrum, eq: EquationForm, k: int, epsilon: float,
                      m2: int, sep_scale: float = 1.0) -> int:
    """Smallest dilation q whose dilated top-k frequencies separate for most m1."""
    N = spectrum.modulus
    b = np.asarray(top_frequencies(spectrum, k), dtype=np.int64)
    limit = k ** -2
    for q in range(1, N):
        if math.gcd(q, N) != 1:
            continue
        fraction = separation_fraction((q * b) % N, eq, N, k, epsilon, m2, sep_scale)
        if fraction <= limit:
            logger.debug("separation: q=%d bad fraction %.4f", q, fraction)
            return q
    raise SearchFailureError(f"no dilation q in [1, {N - 1}] separates the top {k} frequencies")


def dilate(f: CyclicFunction, q: int) -> CyclicFunction:
    """f*(n) = f(q n)."""
    N = f.modulus
    if math.gcd(int(q), N) != 1:
        raise InvalidArgumentError(f"dilation {q} is not invertible mod {N}")
    idx = (int(q) * np.arange(N, dtype=np.int64)) % N
    return CyclicFunction(N, f.values[idx], density=f.density)


def compute_X(M: int, N: int, b_set: Sequence[int], band: float) -> Tuple[np.ndarray, np.ndarray]:
    """Split Z_M into X and Xc = {a : ||a/M - b/N|| <= band/M for some b}."""
    MN = M * N
    members = set()
    for b in b_set:
        center = (int(b) % N) * M / N
        for a in range(math.floor(center - band), math.ceil(center + band) + 1):
            z = (a * N - int(b) * M) % MN
            if min(z, MN - z) <= band * N:
                members.add(a % M)
    Xc = np.array(sorted(members), dtype=np.int64)
    X = np.setdiff1d(np.arange(M, dtype=np.int64), Xc)
    return X, Xc


def in_Xc(a: int, M: int, N: int, b_set: Sequence[int], band: float) -> bool:
    """Direct membership test, one frequency at a time."""
    MN = M * N
    for b in b_set:
        z = (int(a) * N - int(b) * M) % MN
        if min(z, MN - z) <= band * N:
            return True
    return False


def xc_bound(k: int, band: float) -> int:
    """Largest possible |Xc|: k bands, each holding at most floor(2 band) + 1 integers."""
    return k * (math.floor(2 * band) + 1)


@dataclass
class CorrespondenceResult:
    holds: bool
    projection_holds: bool
    pairs_checked: int
    witness: Optional[Tuple[int, int, int, int]] = None

    def __bool__(self) -> bool:
        return self.holds and self.projection_holds


def verify_correspondence(M: int, m1: int, m2: int, Xc: Sequence[int],
                          eq: EquationForm) -> CorrespondenceResult:
    """a_i x = a_j y (mod M) iff (mod m2), for all x, y in Xc.

    The projection form compares v(a_i x) with v(a_j y) instead of residues
    mod m2.
    """
    if m1 * m2 != M:
        raise InvalidArgumentError("m1 * m2 must equal M")
    split = CrtSplit(m1, m2)
    xs = np.asarray(Xc, dtype=np.int64) % M
    holds = projection_holds = True
    witness = None
    checked = 0
    coeffs = sorted(set(eq.coeffs))
    for ai in coeffs:
        A = (ai * xs) % M
        for aj in coeffs:
            B = (aj * xs) % M
            same_M = A[:, None] == B[None, :]
            same_m2 = (A % m2)[:, None] == (B % m2)[None, :]
            same_v = split.v(A)[:, None] == split.v(B)[None, :]
            checked += same_M.size
            for mismatch, name in ((same_M != same_m2, "residue"), (same_M != same_v, "projection")):
                if mismatch.any():
                    i, j = np.argwhere(mismatch)[0]
                    if witness is None:
                        witness = (int(xs[i]), int(xs[j]), ai, aj)
                    if name == "residue":
                        holds = False
                    else:
                        projection_holds = False
    return CorrespondenceResult(holds, projection_holds, checked, witness)


def v_injective_on(split: CrtSplit, Xc: Sequence[int]) -> bool:
    v = split.v(np.asarray(Xc, dtype=np.int64))
    return np.unique(v).size == len(Xc)


def check_tuple_form(split: CrtSplit, Xc: Sequence[int], eq: EquationForm) -> Tuple[bool, int]:
    """Every Xc tuple whose projections read (a_1 v, ..., a_d v) is (a_1 b, ..., a_d b).

    Returns (holds, number of tuples examined).
    """
    M = split.M
    xs = np.asarray(Xc, dtype=np.int64)
    by_v = {int(v): int(x) for v, x in zip(split.v(xs), xs)}
    inv_a1 = pow(eq.coeffs[0], -1, M)
    examined = 0
    for v in split.V:
        tuple_ = [by_v.get(int(split.v(a * int(v)))) for a in eq.coeffs]
        if any(x is None for x in tuple_):
            continue
        examined += 1
        b = (inv_a1 * tuple_[0]) % M
        if any((a * b - x) % M for a, x in zip(eq.coeffs, tuple_)):
            return False, examined
    return True, examined


def _m1_qualifies(m1: int, m2: int, eq: EquationForm, diffs: np.ndarray, N: int, tau: float) -> bool:
    M = m1 * m2
    return (M % 2 == 1 and math.gcd(m1, m2) == 1
            and all(math.gcd(M, a) == 1 for a in eq.coeffs)
            and not _bad_m1(np.array([m1], dtype=np.int64), diffs, N, tau)[0])


def choose_m1(N: int, k: int, epsilon: float, eq: EquationForm, b_set: Sequence[int],
              m2: int, overrides: Overrides = Overrides()) -> Tuple[int, np.ndarray]:
    """Smallest m1 in J meeting the coprimality, separation and correspondence conditions.

    Returns m1 and the Xc it determines.
    """
    lo, hi = m1_interval(N, k, epsilon)
    diffs = cross_differences(b_set, eq, N)
    tau = separation_threshold(k, epsilon, m2, overrides.sep_scale)
    band = k ** (3 * epsilon) * overrides.band_scale
    for m1 in range(lo, hi + 1):
        if not _m1_qualifies(m1, m2, eq, diffs, N, tau):
            continue
        M = m1 * m2
        _, Xc = compute_X(M, N, b_set, band)
        if verify_correspondence(M, m1, m2, Xc, eq):
            logger.debug("m1=%d M=%d |Xc|=%d", m1, M, Xc.size)
            return m1, Xc
    raise SearchFailureError(f"no m1 in [{lo}, {hi}] qualifies for m2={m2}")


def interval_window(I_half: int, L: int) -> np.ndarray:
    """|I|^{-L+1} (1_I)^{*L} on the integers [-L I_half, L I_half]."""
    size = 2 * I_half + 1
    box = np.ones(size)
    w = box.copy()
    for _ in range(L - 1):
        w = np.convolve(w, box) / size
    return np.clip(w, 0.0, 1.0)


def structural_support_ok(plan: TransferPlan) -> bool:
    """Window support fits in (-N/2, N/2] and sum |a_i| x_i cannot wrap mod M."""
    reach = plan.L * plan.I_half
    return 2 * reach < plan.N and sum(abs(a) for a in plan.eq.coeffs) * reach < plan.M


def representatives_mask(N: int, M: int) -> np.ndarray:
    """True at residues mod M of the integers in (-N/2, N/2]."""
    mask = np.zeros(M, dtype=bool)
    mask[np.arange(-((N - 1) // 2), N // 2 + 1) % M] = True
    return mask


def _spread_sum(f_values: np.ndarray, w: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    """S(u) = sum_n w(n) f(n - u) for every u in Z_N."""
    N = f_values.shape[0]
    us = np.arange(N, dtype=np.int64)
    total = np.zeros(N)
    for n, weight in zip(offsets.tolist(), w.tolist()):
        total += weight * f_values[(n - us) % N]
    return total


def ell_ratio(z: np.ndarray, size: int, MN: int) -> np.ndarray:
    """sin(pi |I| t) / (|I| sin(pi t)) at t = z / MN, equal to 1 where z = 0."""
    z = np.asarray(z, dtype=np.int64) % MN
    z = np.where(z > MN // 2, z - MN, z)
    t = z / MN
    den = size * np.sin(np.pi * t)
    safe = np.where(z == 0, 1.0, den)
    return np.where(z == 0, 1.0, np.sin(np.pi * size * t) / safe)


def g_transform_direct(f_hat: np.ndarray, plan: TransferPlan, a_values: Sequence[int]) -> np.ndarray:
    """g^(a) = N^{-1} |I| sum_b e^{2 pi i u b/N} f^(b) r(a/M - b/N)^L."""
    N, M = plan.N, plan.M
    b = np.arange(N, dtype=np.int64)
    phase = np.exp(2j * np.pi * ((plan.u_g * b) % N) / N) * np.asarray(f_hat)
    out = np.empty(len(a_values), dtype=np.complex128)
    for pos, a in enumerate(a_values):
        r = ell_ratio(int(a) * N - b * M, plan.I_size, M * N)
        out[pos] = np.sum(phase * r ** plan.L)
    return out * plan.I_size / N


@dataclass
class GBuild:
    g: CyclicFunction
    u_g: int
    transform: np.ndarray
    checks: Dict[str, bool]
    metrics: Dict[str, float]


def build_g(f_dilated: CyclicFunction, plan: TransferPlan, u_g: Optional[int] = None) -> GBuild:
    """Lift f to g(n) = f(n - u_g) w(n) on Z_M, n in (-N/2, N/2]."""
    N, M = plan.N, plan.M
    if f_dilated.modulus != N:
        raise InvalidArgumentError("f modulus does not match the plan")
    asymptotic_feasible = plan.k ** plan.epsilon > 2 * plan.L
    if not plan.overrides.active and not asymptotic_feasible:
        raise PlanRejectedError(
            f"k^eps = {plan.k ** plan.epsilon:.4g} <= 2L = {2 * plan.L}; pass overrides for desk-scale runs"
        )
    if not structural_support_ok(plan):
        raise PlanRejectedError(
            f"L * I_half = {plan.L * plan.I_half} does not fit: need 2 L I_half < N "
            f"and sum|a_i| L I_half < M = {M}"
        )

    w = interval_window(plan.I_half, plan.L)
    reach = plan.L * plan.I_half
    offsets = np.arange(-reach, reach + 1, dtype=np.int64)
    mass_w = math.fsum(w.tolist())
    mass_ok = abs(mass_w - plan.I_size) <= 1e-6 * plan.I_size

    scores = _spread_sum(f_dilated.values, w, offsets)
    best = int(np.argmax(scores))
    if u_g is None:
        u_g = best
    elif scores[u_g] < scores[best] * (1 - 1e-12):
        raise PlanRejectedError(f"u_g={u_g} does not maximise the window mass")

    values = np.zeros(M)
    values[offsets % M] = f_dilated.values[(offsets - u_g) % N] * w
    g = CyclicFunction(M, values, density=True)
    G = dft(g).values

    theta = f_dilated.theta
    g_mass = float(G[0].real)
    if g_mass < theta * plan.I_size * (1 - 1e-9):
        raise InternalError(f"g^(0) = {g_mass} is below the average {theta * plan.I_size}")
    mass_bound = plan.overrides.i_scale * plan.k ** (-plan.epsilon) * theta * N
    leak = float(np.max(np.abs(values[~representatives_mask(N, M)]), initial=0.0))

    plan = replace(plan, u_g=u_g)
    step = max(1, M // ELL_SAMPLES)
    sample = sorted(set(range(0, M, step)) | set(plan.Xc) | {0})
    closed = g_transform_direct(dft(f_dilated).values, plan, sample)
    ell_dev = float(np.max(np.abs(closed - G[sample])))

    checks = {
        "g_window_mass": mass_ok,
        "g_support": leak < 1e-9,
        "g_mass": g_mass >= mass_bound,
        "g_ell_formula": ell_dev <= 1e-6 * max(g_mass, 1.0),
    }
    metrics = {
        "window_mass": mass_w, "g_mass": g_mass, "g_mass_bound": mass_bound,
        "g_support_leak": leak, "g_ell_deviation": ell_dev,
        "k_eps_over_2L": asymptotic_feasible,
    }
    logger.debug("g built: u_g=%d mass=%.6g bound=%.6g", u_g, g_mass, mass_bound)
    return GBuild(g=g, u_g=u_g, transform=G, checks=checks, metrics=metrics)


@dataclass
class HBuild:
    h: CyclicFunction
    u_h: int
    sigma_value: float
    transform: np.ndarray
    checks: Dict[str, bool]
    metrics: Dict[str, float]


def sigma_profile(G: np.ndarray, plan: TransferPlan) -> Tuple[np.ndarray, np.ndarray]:
    """Inner Sigma expression for each u mod m1, and the table h_u^(v) behind it.

    h_u^(m1 s) = sum_t e^{-2 pi i t u/m1} g^(m1 s + m2 t) depends on u only
    through u mod m1, so the profile has m1 entries.
    """
    m1, m2, M = plan.m1, plan.m2, plan.M
    split = plan.split
    s_idx = np.arange(m2, dtype=np.int64)[:, None]
    t_idx = np.arange(m1, dtype=np.int64)[None, :]
    table = G[(m1 * s_idx + m2 * t_idx) % M]
    H = transform(table, -1) if m1 >= 2 else table.copy()

    xc = np.asarray(plan.Xc, dtype=np.int64)
    r = np.arange(m1, dtype=np.int64)
    inner = np.zeros(m1)
    used = np.zeros(m2, dtype=bool)
    for a in xc.tolist():
        s_a, t_a = int(split.v_index(a)), split.w_index(a)
        used[s_a] = True
        rotated = np.exp(2j * np.pi * ((t_a * r) % m1) / m1) * H[s_a]
        inner += np.abs(G[a] - rotated) ** 2
    if (~used).any():
        inner += np.sum(np.abs(H[~used]) ** 2, axis=0)
    return inner, H


def build_h(g: CyclicFunction, plan: TransferPlan, G: Optional[np.ndarray] = None,
            u_h: Optional[int] = None) -> HBuild:
    """h = (1_{u_h + V} g) * 1_W with u_h minimising the Sigma expression."""
    m1, m2, M = plan.m1, plan.m2, plan.M
    if g.modulus != M:
        raise InvalidArgumentError("g modulus does not match the plan")
    G = dft(g).values if G is None else G
    inner, H = sigma_profile(G, plan)
    best = int(np.argmin(inner))
    if u_h is None:
        u_h = best
    elif inner[u_h % m1] > inner[best] + 1e-12 * (1 + inner[best]):
        raise PlanRejectedError(f"u_h={u_h} does not minimise the Sigma expression")
    sigma_value = float(inner[u_h % m1])
    average = math.fsum(inner.tolist()) / m1
    if sigma_value > average * (1 + 1e-12) + 1e-300:
        raise InternalError("Sigma minimiser exceeds the average")

    sigma_total = m2 * math.fsum(inner.tolist())
    x_energy = math.fsum((np.abs(G[plan.X]) ** 2).tolist())
    sigma_expected = M * x_energy
    g_mass = float(G[0].real)
    sigma_slack = 1e-6 * sigma_expected + 1e-12 * M * g_mass ** 2

    n = np.arange(M, dtype=np.int64)
    restricted = CyclicFunction(M, np.where((n - u_h) % m1 == 0, g.values, 0.0))
    w_indicator = CyclicFunction(M, (n % m2 == 0).astype(np.float64))
    h_values = cyclic_convolve(restricted, w_indicator, method="direct").values
    h = CyclicFunction(M, np.clip(h_values, 0.0, 1.0), density=True)
    Hh = dft(h).values
    h_mass = float(Hh[0].real)

    on_v = n % m1 == 0
    off_v = float(np.max(np.abs(Hh[~on_v]), initial=0.0))
    formula = H[np.arange(m2), u_h % m1]
    formula_dev = float(np.max(np.abs(Hh[m1 * np.arange(m2)] - formula)))
    w_shift = float(np.max(np.abs(np.roll(h.values, -m2) - h.values)))

    checks = {
        "h_off_v": off_v < 1e-8 * (1 + h_mass),
        "h_formula": formula_dev <= 1e-6 * (1 + h_mass),
        "h_w_invariant": w_shift < 1e-9,
        "sigma_identity": abs(sigma_total - sigma_expected) <= sigma_slack,
        "sigma_min_le_average": sigma_value <= average * (1 + 1e-12) + 1e-300,
    }
    metrics = {
        "h_mass": h_mass, "h_off_v_max": off_v, "h_formula_deviation": formula_dev,
        "h_w_shift_max": w_shift, "sigma_value": sigma_value, "sigma_average": average,
        "sigma_total": sigma_total, "sigma_expected": sigma_expected, "x_energy": x_energy,
        "x_energy_fraction": x_energy / (M * math.fsum((g.values ** 2).tolist()) or 1.0),
    }
    logger.debug("h built: u_h=%d sigma=%.6g avg=%.6g", u_h, sigma_value, average)
    return HBuild(h=h, u_h=u_h, sigma_value=sigma_value, transform=Hh, checks=checks, metrics=metrics)


@dataclass
class ChainReport:
    plan: TransferPlan
    count_f: float
    count_g: float
    count_h: float
    count_h_v: float
    count_h_brute: Optional[float]
    h_floor: float
    g_mass: float
    h_mass: float
    sigma_value: float
    checks: Dict[str, bool]
    metrics: Dict[str, float]
    hypothesis: dict
    timings_ms: Dict[str, float]
    warnings: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def to_dict(self) -> dict:
        return {
            "plan": self.plan.to_dict(),
            "count_f": self.count_f, "count_g": self.count_g, "count_h": self.count_h,
            "count_h_v": self.count_h_v, "count_h_brute": self.count_h_brute,
            "h_floor": self.h_floor, "g_mass": self.g_mass, "h_mass": self.h_mass,
            "sigma_value": self.sigma_value, "checks": dict(self.checks),
            "metrics": dict(self.metrics), "hypothesis": self.hypothesis,
            "timings_ms": dict(self.timings_ms), "warnings": list(self.warnings),
            "passed": self.passed,
        }


@contextmanager
def _stage(name: str, timings: Dict[str, float]):
    start = time.perf_counter()
    try:
        yield
    except StageError:
        raise
    except Exception as e:
        raise StageError(name, e) from e
    finally:
        timings[name] = (time.perf_counter() - start) * 1000.0


def _real_count(F: np.ndarray, eq: EquationForm, frequencies=None) -> float:
    z = count_from_transform(F, eq, frequencies)
    if abs(z.imag) > 1e-6 * (1 + abs(z.real)):
        raise NumericalInconsistencyError(f"count has imaginary residue {z.imag:.3e}")
    return z.real


def _new_plan(N: int, k: int, epsilon: float, eq: EquationForm, q: int, m2: int, m1: int,
              Xc: np.ndarray, top: np.ndarray, fraction: float, overrides: Overrides) -> TransferPlan:
    return TransferPlan(
        N=N, k=k, epsilon=epsilon, eq=eq, L=log_size(N), q=q, m2=m2, m1=m1, M=m1 * m2,
        b_set=tuple(int(x) for x in (q * top) % N),
        I_half=int(math.floor(k ** (-epsilon) * N * overrides.i_scale)),
        Xc=tuple(int(a) for a in Xc), overrides=overrides,
        top_frequencies=tuple(int(x) for x in top), separation_fraction=fraction,
        m1_range=m1_interval(N, k, epsilon),
    )


def _verify_loaded_plan(plan: TransferPlan, f: CyclicFunction, eq: EquationForm, epsilon: float,
                        k: int, spectrum: SortedSpectrum) -> None:
    N = f.modulus
    if (plan.N, plan.k, plan.eq) != (N, k, eq) or abs(plan.epsilon - epsilon) > 1e-15:
        raise PlanRejectedError("plan was built for different inputs")
    if plan.m2 != choose_m2(k, epsilon) or plan.L != log_size(N):
        raise PlanRejectedError("plan constants m2/L disagree with recomputation")
    b = np.asarray(top_frequencies(spectrum, k), dtype=np.int64)
    if tuple(int(x) for x in (plan.q * b) % N) != plan.b_set:
        raise PlanRejectedError("plan b_set is not the dilated top frequencies")
    expected_half = int(math.floor(k ** (-epsilon) * N * plan.overrides.i_scale))
    if plan.I_half != expected_half:
        raise PlanRejectedError("plan I_half disagrees with recomputation")
    _, Xc = compute_X(plan.M, N, plan.b_set, plan.band)
    if tuple(int(a) for a in Xc) != plan.Xc:
        raise PlanRejectedError("plan Xc disagrees with recomputation")


def run_chain(f: CyclicFunction, eq: EquationForm, epsilon: float, k: int,
              overrides: Optional[Overrides] = None,
              plan: Optional[TransferPlan] = None) -> ChainReport:
    """Run the whole transfer and check every inequality along the chain.

    With ``plan`` the searches are skipped and the loaded constants are
    re-verified instead.
    """
    overrides = plan.overrides if plan is not None else (overrides or Overrides())
    timings: Dict[str, float] = {}
    warnings: List[str] = []
    N = f.modulus
    if overrides.active:
        warnings.append(f"overrides in effect: {overrides.to_dict()}")
        logger.warning("transfer overrides in effect: %s", overrides.to_dict())

    with _stage("hypothesis", timings):
        if not isprime(N):
            raise InvalidArgumentError(f"transfer needs a prime modulus, got {N}")
        spectrum = sort_spectrum(f)
        hypothesis = check_hypothesis(f, eq.d, epsilon, k, "relaxed", spectrum)
        warnings.extend(hypothesis.warnings)
        if not hypothesis.passed:
            raise PlanRejectedError(
                f"hypothesis fails: tail {hypothesis.tail_energy:.6g} vs threshold "
                f"{hypothesis.tail_threshold:.6g}, theta {hypothesis.theta:.6g}"
            )

    with _stage("separation-search", timings):
        if plan is None:
            m2 = choose_m2(k, epsilon)
            q = separation_search(spectrum, eq, k, epsilon, m2, overrides.sep_scale)
        else:
            _verify_loaded_plan(plan, f, eq, epsilon, k, spectrum)
            m2, q = plan.m2, plan.q
        b = np.asarray(top_frequencies(spectrum, k), dtype=np.int64)
        b_set = tuple(int(x) for x in (q * b) % N)
        fraction = separation_fraction(b_set, eq, N, k, epsilon, m2, overrides.sep_scale)

    with _stage("m1-search", timings):
        if plan is None:
            m1, Xc = choose_m1(N, k, epsilon, eq, b_set, m2, overrides)
            plan = _new_plan(N, k, epsilon, eq, q, m2, m1, Xc, b, fraction, overrides)
        split = plan.split
        diffs = cross_differences(plan.b_set, eq, N)
        tau = separation_threshold(k, epsilon, m2, overrides.sep_scale)
        lo, hi = m1_interval(N, k, epsilon)
        correspondence = verify_correspondence(plan.M, plan.m1, plan.m2, plan.Xc, eq)
        form_ok, form_tuples = check_tuple_form(split, plan.Xc, eq)
        asymptotic_xc = 3 * k ** (1 + 3 * epsilon)
        checks = {
            "separation_fraction": fraction <= k ** -2,
            "m1_in_range": lo <= plan.m1 <= hi,
            "m1_conditions": _m1_qualifies(plan.m1, plan.m2, eq, diffs, N, tau),
            "M_range": k ** epsilon * N < plan.M <= 4 * k ** epsilon * N,
            "correspondence": bool(correspondence),
            "unique": v_injective_on(split, plan.Xc),
            "the_form": form_ok,
            "xc_size": len(plan.Xc) <= xc_bound(k, plan.band),
        }
        if len(plan.Xc) >= asymptotic_xc:
            warnings.append(f"|Xc| = {len(plan.Xc)} is not below 3 k^(1+3 eps) = {asymptotic_xc:.4g}")
        metrics: Dict[str, float] = {
            "separation_fraction": fraction, "xc_size": len(plan.Xc),
            "xc_asymptotic_bound": asymptotic_xc, "xc_within_asymptotic_bound": len(plan.Xc) < asymptotic_xc,
            "the_form_tuples": form_tuples, "correspondence_pairs": correspondence.pairs_checked,
        }

    with _stage("g-build", timings):
        f_dilated = dilate(f, plan.q)
        lifted = build_g(f_dilated, plan, u_g=plan.u_g)
        plan = replace(plan, u_g=lifted.u_g)
        checks.update(lifted.checks)
        metrics.update(lifted.metrics)

    with _stage("h-build", timings):
        smoothed = build_h(lifted.g, plan, G=lifted.transform, u_h=plan.u_h)
        plan = replace(plan, u_h=smoothed.u_h)
        checks.update(smoothed.checks)
        metrics.update(smoothed.metrics)

    with _stage("counting", timings):
        count_f = _real_count(dft(f).values, eq)
        count_g = _real_count(lifted.transform, eq)
        count_h = _real_count(smoothed.transform, eq)
        count_h_v = _real_count(smoothed.transform, eq, split.V)
        count_h_brute = count_bruteforce(smoothed.h, eq) if plan.M <= BRUTE_ORACLE_LIMIT else None
        h_floor = plan.m1 ** (eq.d - 2) * math.fsum((smoothed.h.values ** eq.d).tolist())
        checks["fg"] = count_f >= count_g - 1e-6 * (1 + count_f)
        checks["h_floor"] = count_h >= h_floor - 1e-6 * (1 + count_h)
        checks["h_count_v"] = abs(count_h - count_h_v) <= 1e-6 * max(1.0, count_h)
        if count_h_brute is not None:
            checks["h_count_brute"] = abs(count_h - count_h_brute) <= 1e-6 * max(1.0, count_h)

    report = ChainReport(
        plan=plan, count_f=count_f, count_g=count_g, count_h=count_h, count_h_v=count_h_v,
        count_h_brute=count_h_brute, h_floor=h_floor, g_mass=lifted.metrics["g_mass"],
        h_mass=smoothed.metrics["h_mass"], sigma_value=smoothed.sigma_value,
        checks=checks, metrics=metrics, hypothesis=hypothesis.to_dict(),
        timings_ms=timings, warnings=warnings,
    )
    failed = [name for name, ok in checks.items() if not ok]
    if failed:
        logger.warning("transfer chain checks failed: %s", ", ".join(failed))
    return report


__all__ = [
    "Overrides",
    "TransferPlan",
    "ChainReport",
    "CorrespondenceResult",
    "GBuild",
    "HBuild",
    "choose_m2",
    "m1_interval",
    "separation_fraction",
    "separation_search",
    "dilate",
    "choose_m1",
    "compute_X",
    "in_Xc",
    "xc_bound",
    "verify_correspondence",
    "check_tuple_form",
    "interval_window",
    "g_transform_direct",
    "build_g",
    "sigma_profile",
    "build_h",
    "run_chain",
]
