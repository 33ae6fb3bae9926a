"""Blind separation of bounded sources by peak-amplitude minimization.

The package separates linear instantaneous mixtures of amplitude-bounded
signals: observations are whitened (or merely centered when the mixing
is known to be orthogonal) and an orthogonal separating matrix is found
by grid search over Givens rotation angles, minimizing the sum of the
estimates' infinity norms. A volume-maximization baseline criterion, the
evaluation metrics (SER, PSNR, ISI), direction-sweep verification
utilities, and a deterministic Monte Carlo campaign harness round out
the toolkit.
"""

from .analysis import (
    BoundReport,
    ExtractionReport,
    SphereSweep,
    check_extreme_points,
    circle_sweep,
    histogram_entropy,
    infinity_norm_landscape,
    sphere_sweep,
    verify_extraction_theorem,
    verify_separation_bound,
)
from .bench import (
    ExperimentConfig,
    ExperimentReport,
    config_from_dict,
    derive_seed,
    make_cell_data,
    read_report_json,
    run_campaign,
    write_report_csv,
    write_report_json,
)
from .errors import (
    CampaignError,
    ContractViolationError,
    DegenerateMixtureError,
    LinfBcaError,
    NumericalError,
    PgmFormatError,
)
from .fileio import load_matrix_csv, load_pgm, save_matrix_csv, save_pgm
from .linalg import (
    EigenDecomposition,
    covariance,
    givens_matrix,
    jacobi_eigen,
    make_rng,
    matmul,
    random_gaussian_matrix,
    random_orthogonal,
)
from .metrics import (
    MatchResult,
    MetricRecord,
    global_matrix,
    isi,
    match_sources,
    psnr,
    symbol_error_rate,
)
from .separation import (
    METHODS,
    SeparationOutcome,
    WhiteningResult,
    brute_force_2d,
    givens_search,
    range_per_row,
    separate,
    sum_linf,
    unit_ball_volume,
    volume_objective,
    whiten,
)
from .sources import (
    Constellation,
    SourceEnsemble,
    add_awgn,
    gen_copula_t,
    gen_pam4,
    gen_uniform,
    hypercube_vertices,
    inject_extremes,
    mix,
    pam4_multimodal,
    pam4_uniform,
    student_t_cdf,
    toeplitz_correlation,
)

__version__ = "0.1.0"
