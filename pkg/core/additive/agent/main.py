import os
import sys
from typing import Dict, List, Optional, Union

import truffle

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), os.pardir)))

from additive.commands import AdditiveToolkit  # noqa: E402
from additive.config import configure_logging  # noqa: E402
from additive.fileio import to_jsonable  # noqa: E402


class AdditiveCountingTool:
    """Tool for counting solutions of invariant linear congruences and certifying lower bounds."""

    def __init__(self):
        self.client = truffle.TruffleClient()
        self.toolkit = AdditiveToolkit()
        configure_logging(os.getenv("ADDITIVE_LOG_LEVEL", "WARNING"))

    @truffle.tool(
        description="Sorted Fourier spectrum of a density file and the smoothness hypothesis check",
        icon="activity"
    )
    @truffle.args(
        path="Function file (JSON with modulus and values, or index,value CSV)",
        k="Rank at which the spectrum tail starts",
        epsilon="Exponent epsilon in (0, 1)",
        d="Number of variables in the equation",
        mode="strict or relaxed"
    )
    def Spectrum(self, path: str, k: int, epsilon: float = 0.1, d: int = 3, mode: str = "relaxed") -> Dict:
        """Report theta, sigma^2, the tail energy and the hypothesis verdict."""
        return to_jsonable(self.toolkit.Spectrum(os.path.expanduser(path), k, epsilon, d, mode))

    @truffle.tool(
        description="Count weighted solutions of a1 x1 + ... + ad xd = 0 mod N",
        icon="hash"
    )
    @truffle.args(
        path="Function file",
        coeffs="Comma-separated coefficients summing to zero, e.g. 1,1,-2",
        method="brute, fourier or both"
    )
    def Count(self, path: str, coeffs: str, method: str = "both") -> Dict:
        """Count by enumeration, by the Fourier identity, or both."""
        return to_jsonable(self.toolkit.Count(os.path.expanduser(path), coeffs, method))

    @truffle.tool(
        description="Check the hypothesis and compare the count with the theorem's lower bound",
        icon="badge-check"
    )
    @truffle.args(
        path="Function file",
        coeffs="Comma-separated coefficients summing to zero",
        k="Spectrum rank k",
        epsilon="Exponent epsilon in (0, 1)",
        mode="strict or relaxed"
    )
    def Certify(self, path: str, coeffs: str, k: int, epsilon: float = 0.1, mode: str = "relaxed") -> Dict:
        """Produce a lower-bound certificate."""
        return to_jsonable(self.toolkit.Certify(os.path.expanduser(path), coeffs, k, epsilon, mode))

    @truffle.tool(
        description="Transfer the counting problem to Z_M and verify every step of the chain",
        icon="git-merge"
    )
    @truffle.args(
        path="Function file over a prime modulus",
        coeffs="Comma-separated coefficients summing to zero",
        k="Spectrum rank k",
        epsilon="Exponent epsilon in (0, 1)",
        overrides="Optional i_scale=..,band_scale=..,sep_scale=..",
        plan_out="Optional path to save the transfer plan"
    )
    def Transfer(self, path: str, coeffs: str, k: int, epsilon: float = 0.1,
                 overrides: Optional[str] = None, plan_out: Optional[str] = None) -> Dict:
        """Run the transfer chain and return the chain report."""
        plan_out = os.path.expanduser(plan_out) if plan_out else None
        return to_jsonable(self.toolkit.Transfer(os.path.expanduser(path), coeffs, k, epsilon,
                                                 overrides, plan_out))

    @truffle.tool(
        description="Generate an example density (sumset, gpy, smoothed, window, trig, random)",
        icon="sparkles"
    )
    @truffle.args(
        kind="Example family",
        modulus="Modulus N",
        path="Where to write the function file",
        seed="Random seed",
        params="Family parameters, e.g. {\"delta\": 0.1}"
    )
    def Examples(self, kind: str, modulus: int, path: str, seed: int = 0,
                 params: Optional[Dict[str, Union[int, float, str]]] = None) -> Dict:
        """Write a generated density and report its parameters."""
        return to_jsonable(self.toolkit.Examples(kind, modulus, os.path.expanduser(path), seed, params))

    @truffle.tool(
        description="Benchmark brute-force against Fourier counting",
        icon="timer"
    )
    @truffle.args(
        sizes="Moduli to benchmark",
        d="Number of variables",
        trials="Timing repetitions per size"
    )
    def Bench(self, sizes: List[int], d: int = 3, trials: int = 3) -> Dict:
        """Time both counting methods after checking that they agree."""
        return to_jsonable(self.toolkit.Bench(sizes, d, trials))


if __name__ == "__main__":
    app = truffle.TruffleApp(AdditiveCountingTool())
    app.launch()
