"""Numerical laboratory for sums of weighted rank-one projections on
isotropic random vectors: ensemble sampling, the self-consistent limiting
spectral law, fluctuation (CLT) functionals, and Monte-Carlo verification
experiments.
"""

__version__ = "1.0.0"

from .ensemble import (
    SigmaMeasure,
    SpectralSample,
    TestFunction,
    assemble,
    bump_phi,
    eigenvalues,
    exp_phi,
    g_diag,
    linear_statistic,
    make_taus,
    parse_phi,
    poly_phi,
    rank_one_resolvent_check,
)
from .montecarlo import (
    ExperimentConfig,
    clt_statistics,
    draw_sample,
    replicate_spectra,
    run_clt,
    run_cov,
    run_esd,
    run_g_diag,
    run_moment_check,
)
from .mp_limit import (
    ConvergenceError,
    EdgeProximityError,
    closed_form_f_mp,
    density,
    density_curve,
    f_derivatives,
    f_prime,
    limit_cdf,
    solve_f,
    solve_f_grid,
    support_edges_mp,
)
from .variance import (
    GridError,
    cov_kernel,
    sobolev_norm,
    variance_bound_ratio,
    variance_eta,
    variance_limit,
    variance_mp_closed,
)
from .vectors import (
    MomentProfile,
    VectorLaw,
    estimate_moments,
    isotropy_scale_lp,
    moment_profile,
    quadratic_form_variance,
    sample_matrix,
    sample_vector,
)
