"""Detection of a covert transmitter over block Rayleigh fading.

The adversary observes n noisy samples split into M fading blocks and tests
"noise only" against "noise plus a faded Gaussian signal". This package
provides the model and samplers, the optimal and energy-based detectors,
closed-form divergence bounds, and sweep/contour experiments.
"""
__version__ = "0.1.0"

from .model import (Field, Hypothesis, SystemParams, FadingRealization, Observation,
                    block_energies, sample_h0, sample_h1, sample_fading, sample_energies)
from .numerics import (QuadratureSpec, QuadratureError, DEFAULT_QUADRATURE, ei,
                       log_int_identity, reg_gamma_q, reg_gamma_q_inv, logsumexp)
from .detectors import (DetectorKind, CalibratedDetector, ErrorEstimate, LlrTable,
                        QuantileInfeasibleError, FingerprintMismatchError, block_llr,
                        lrt_statistic, power_statistic, mean_threshold_statistic, calibrate,
                        estimate_errors, pd_threshold_analytic)
from .bounds import (Direction, KlReport, ConverseMoments, UnsupportedConfigurationError,
                     kl_bound_ei, kl_bound_simple, kl_bound_quartic, kl_mc, kl_report,
                     pe_floor, converse_moments)
from .experiments import (SweepConfig, SweepRow, ContourGrid, run_sweep, run_phase_sweep,
                          run_block_sweep, run_contour, read_sweep_csv, write_sweep_csv,
                          read_contour_csv, write_contour_csv)
