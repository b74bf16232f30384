"""haarlab: dyadic Haar systems, martingale operators, Schatten-Lorentz
norms, the complex median partition, and discretized singular-integral
commutators, with an experiment harness verifying their exact identities
and two-sided norm equivalences at desk scale."""

from .grid import Box, Cube, GridFamily, GridSpec, adjacent_family, cover, cube_at
from .haar import (
    HaarCoefficients,
    SampledFunction,
    WaveletIndex,
    analyze,
    difference,
    expectation,
    haar_function,
    product_index,
    synthesize,
)
from .kernels import KernelSpec, ball_pair, discretize, nondegenerate_witness, sio_commutator
from .martops import (
    DenseOperator,
    ShiftCoefficients,
    block_extract,
    commutator,
    diagonal_part,
    dyadic_shift,
    cascade,
    multiplier,
    paraproduct,
    paraproduct_adjoint,
    remainder,
    shift_weight_bound,
)
from .median import (
    OrthoLinePair,
    QuarterSplit,
    WeightedPointSet,
    complex_median,
    halving_line,
    quadrant_masses,
    quarter_partition,
)
from .norms import (
    LorentzIndex,
    besov_continuous,
    besov_martingale,
    besov_martingale_diff,
    besov_martingale_tail,
    bmo_martingale,
    lorentz_norm,
    mo1,
    mo2,
    schatten,
    sobolev_seminorm,
    weak_besov,
)
from .lab import ExperimentConfig, Report, necessity_frame, run_experiment

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
