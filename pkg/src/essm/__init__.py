"""Evolutionary state-space decomposition of multi-epoch multichannel
signals into latent oscillatory AR(2) sources.
"""

from .diagnostics import (
    ClusterResult,
    ResidualReport,
    acf,
    cluster_mixing,
    ljung_box,
    pacf,
    residual_report,
    residuals,
)
from .errors import (
    CausalityError,
    CollinearityError,
    ConditioningError,
    IngestionError,
    InitializationError,
    NoOscillationError,
    OptimizationError,
)
from .estimation import (
    BenchmarkFit,
    FitConfig,
    MultiEpochFit,
    SingleEpochFit,
    default_start,
    estimate_mixing,
    fit_benchmark_ssm,
    fit_multi_epoch,
    fit_single_epoch,
    optimize_epoch_params,
)
from .io import (
    DatasetManifest,
    RunConfig,
    load_dataset,
    load_manifest,
    parse_config,
    save_dataset,
)
from .kalman import (
    FilterInit,
    FilterOutput,
    innovations_nll,
    kalman_filter,
    rts_smooth,
)
from .model import (
    Ar2Coeffs,
    BandSpec,
    CompanionSystem,
    EpochParams,
    EpochSeries,
    MixingMatrix,
    ar2_from_polar,
    ar2_spectrum,
    build_companion,
    coeffs_for_epoch,
    evolutionary_spectrum,
    polar_from_ar2,
)
from .simulation import (
    SimSpec,
    SimulatedDataset,
    coeff_mse,
    mse_report,
    simulate_ar2,
    simulate_epochs,
)
from .spectral import (
    Periodogram,
    PhaseSpectra,
    parse_phases,
    periodogram,
    phase_average,
    relative_periodogram,
)

__version__ = "0.1.0"

__all__ = [
    "Ar2Coeffs",
    "BandSpec",
    "BenchmarkFit",
    "CausalityError",
    "ClusterResult",
    "CollinearityError",
    "CompanionSystem",
    "ConditioningError",
    "DatasetManifest",
    "EpochParams",
    "EpochSeries",
    "FilterInit",
    "FilterOutput",
    "FitConfig",
    "IngestionError",
    "InitializationError",
    "MixingMatrix",
    "MultiEpochFit",
    "NoOscillationError",
    "OptimizationError",
    "Periodogram",
    "PhaseSpectra",
    "ResidualReport",
    "RunConfig",
    "SimSpec",
    "SimulatedDataset",
    "SingleEpochFit",
    "acf",
    "ar2_from_polar",
    "ar2_spectrum",
    "build_companion",
    "cluster_mixing",
    "coeff_mse",
    "coeffs_for_epoch",
    "default_start",
    "estimate_mixing",
    "evolutionary_spectrum",
    "fit_benchmark_ssm",
    "fit_multi_epoch",
    "fit_single_epoch",
    "innovations_nll",
    "kalman_filter",
    "ljung_box",
    "load_dataset",
    "load_manifest",
    "mse_report",
    "optimize_epoch_params",
    "pacf",
    "parse_config",
    "parse_phases",
    "periodogram",
    "phase_average",
    "polar_from_ar2",
    "relative_periodogram",
    "residual_report",
    "residuals",
    "rts_smooth",
    "save_dataset",
    "simulate_ar2",
    "simulate_epochs",
]
