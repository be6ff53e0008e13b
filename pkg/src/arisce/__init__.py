"""Pilot-based channel estimation for links aided by an active reflecting
surface: channel synthesis, scaled-DFT training-pattern design, whitened
least-squares / Bayesian estimators, and a Monte Carlo sweep harness."""

from .channel import (
    ArrayGeometry,
    ChannelRealization,
    Direction,
    gen_backward,
    gen_channel,
    gen_rayleigh,
    large_scale,
    square_geometry,
    steering_vector,
)
from .estimator import (
    EstimateReport,
    ObservationSet,
    StackedModel,
    build_model,
    cascaded_estimate,
    combine_replicas,
    estimate_block,
    estimate_covariance,
    fast_ls_estimate,
    ls_estimate,
    make_report,
    mmse_estimate,
    synthesize_rx,
)
from .harness import (
    ExperimentConfig,
    SweepResult,
    SweepRow,
    cli,
    derive_rng,
    run_trial,
    sweep,
    validate,
    write_csv,
)
from .training import (
    DftSubmatrix,
    NoiseProfile,
    TrainingPlan,
    conventional_dft_patterns,
    dft_submatrix,
    onoff_patterns,
    optimal_beta,
    predict_variance_elements,
    predict_variance_sum,
    proposed_patterns,
    quantize_phases,
)

__version__ = "0.1.0"
