"""
Additive counting toolkit.
Weighted solution counts of invariant linear congruences over Z_N, Fourier
smoothness checks, lower-bound certificates and the transfer to Z_M.
"""

from .commands import AdditiveToolkit
from .counting import (
    Certificate,
    EquationForm,
    certify,
    count_bruteforce,
    count_fourier,
    theorem_lower_bound,
)
from .cyclic import CrtSplit, CyclicFunction, crt_decompose, cyclic_convolve, dft, idft, mod_norm
from .errors import (
    AdditiveError,
    InputFormatError,
    InternalError,
    InvalidArgumentError,
    NumericalInconsistencyError,
    PlanRejectedError,
    SearchFailureError,
    StageError,
)
from .spectrum import HypothesisReport, SortedSpectrum, check_hypothesis, sort_spectrum, tail_energy, top_frequencies
from .transfer import ChainReport, Overrides, TransferPlan, run_chain

__all__ = [
    'AdditiveToolkit',
    'CyclicFunction',
    'CrtSplit',
    'dft',
    'idft',
    'cyclic_convolve',
    'crt_decompose',
    'mod_norm',
    'SortedSpectrum',
    'HypothesisReport',
    'sort_spectrum',
    'tail_energy',
    'top_frequencies',
    'check_hypothesis',
    'EquationForm',
    'Certificate',
    'count_bruteforce',
    'count_fourier',
    'theorem_lower_bound',
    'certify',
    'Overrides',
    'TransferPlan',
    'ChainReport',
    'run_chain',
    'AdditiveError',
    'InvalidArgumentError',
    'InputFormatError',
    'NumericalInconsistencyError',
    'SearchFailureError',
    'PlanRejectedError',
    'InternalError',
    'StageError',
]
