"""Quantum-limited linewidth of a good-cavity laser.

Exact propagation of the field correlation in the photon-number basis,
checked against closed-form linewidth, variance and Mandel-Q expressions.
"""
from .model import (
    CorrelationTrace,
    LaserError,
    LaserParams,
    LinewidthReport,
    OffDiagState,
    PhotonDistribution,
    Truncation,
    validate_params,
)
from .steady import check_balance, moments, steady_distribution
from .kernels import assemble_diagonal_generator, assemble_offdiag_generator, gain_A, gain_B
from .dynamics import (
    fit_decay_rate,
    initial_offdiag,
    numeric_b,
    propagate_correlation,
    slowest_decay_rate,
    spectrum,
)
from .report import linewidth_report

__version__ = "0.1.0"
