"""Numerical toolkit for 1-D quasi-periodic discrete Schrodinger operators.

The operator acts on sequences by

    (H phi)(n) = -phi(n+1) - phi(n-1) + lam * V(x + n*omega) * phi(n)

with a torus-periodic sampling function V.  The package provides
finite-volume blocks and their Dirichlet determinants, Sturm-bisection
spectra, Green's functions, transfer-matrix cocycles and Lyapunov-exponent
estimation, localized potential variations, interval/rectangle set algebra
with exact measures, and a capped multi-scale driver that audits the
standard localization hypotheses (eigenfunction decay, eigenvalue
separation, Morse lower bounds, absence of multiple resonances) on
computed instances.
"""

__version__ = "0.1.0"

from .errors import (
    QpsError,
    ConfigError,
    HypothesisError,
    ResonanceError,
    DegenerateGapError,
    ScaleTooAmbitiousError,
    NoAdmissibleScaleError,
    AuditFailure,
)
from .signedlog import SignedLog
from .torus import TorusPoint, wrap01, torus_dist
from .potential import (
    PotentialSpec,
    CutoffFunction,
    VariationSpec,
    potential_preset,
    eval_variation,
    implied_remainder,
    verify_variation_derivative_bounds,
    perturbed_potential,
)
from .blocks import (
    IndexInterval,
    HamiltonianBlock,
    SpectrumResult,
    det_f,
    det_f_table,
    sturm_count,
    spectrum,
    green,
    poisson_reconstruct,
    eig_derivative,
    near_eigen_exists,
)
from .matrixlemmas import (
    tridiag_eigenvalues,
    tridiag_spectral_norm,
    weyl_check,
    interlace_check,
    rank_pert_det_check,
    det_perturbation_check,
    tridiag_normalization_check,
)
from .cocycle import (
    ScaledMat2,
    LyapunovEstimate,
    monodromy,
    lyapunov_estimate,
    avalanche_verify,
    avalanche_det,
)
from .sets import SimpleSet1D, SimpleSet2D
from .measure import (
    implicit_slab,
    sublevel_measure_check,
    double_resonance_measure,
    hyperplane_slab_check,
)
from .multiscale import (
    ScaleParams,
    EigenBranch,
    ScaleState,
    flat_slope_sets,
    resonance_free_domain,
    first_scale_branch,
    diophantine_min,
    resonance_count,
    find_N1,
    separation_check,
    orthogonality_separation_audit,
    morse_sample,
    multiscale_run,
    potential_limit_compare,
)

GOLDEN_MEAN = 0.6180339887498949  # (sqrt(5)-1)/2, the canonical test frequency
