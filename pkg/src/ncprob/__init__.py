"""Noncommutative probability on the real line.

Measures and their holomorphic transforms, the five additive convolutions
and their limit theorems, Loewner evolutions, graph products, and the
classical Markov-chain, Metropolis, and random-matrix oracles.
"""

import os as _os

# honor the thread cap before any BLAS/numba pools spin up
_threads = _os.environ.get("NCPROB_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                 "MKL_NUM_THREADS", "NUMBA_NUM_THREADS"):
        _os.environ.setdefault(_var, _threads)

from ._backend import backend_name
from .measures import (AtomicMeasure, GridMeasure, MomentSequence, Dirac,
                       Bernoulli, Normal, Arcsine, Semicircle, Poisson,
                       MarchenkoPastur, FreeMeixner, levy_distance, moments,
                       sample)
from .transforms import (HerglotzMap, cauchy, f_transform, b_transform,
                         stieltjes_invert, measure_from_ftransform,
                         nevanlinna_extract, hilbert_transform, f_series,
                         b_series, r_series, moment_quadrature)
from .convolutions import (convolve, convolve_power, clt_iterate,
                           boolean_divisibility_root)
from .loewner import (DrivingFunction, HerglotzField, ChainPoint,
                      evaluate_chain, evaluate_chain_point, slit_chain,
                      inverse_flow, chain_measure, scale_chain,
                      approximate_field_by_slits, nonlinear_resolvent,
                      sle_driving)
from .graphs import (RootedGraph, SpidernetSpec, spidernet, comb_product,
                     star_product, direct_product, walk_moments,
                     spectral_distribution, approx_process)
from .markov import (TransitionMatrix, MDPSpec, KrausChannel, IsingState,
                     stationary_distribution, is_irreducible, period,
                     iterate_distribution, convergence_report, mrp_value,
                     mdp_value_iteration, channel_apply, channel_fixed_point,
                     metropolis_ising, magnetization, exact_boltzmann,
                     curie_temperature, lerw, loop_erase, homogeneous_kernel)
from .randmat import (sample_gue, esd, wigner_check, haar_unitary,
                      freeness_statistic, free_ar1, trace_state)

__version__ = "0.1.0"
