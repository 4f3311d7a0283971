"""Co-movement analytics: dispersion, correlation, spectra and maps.

The package estimates how a cross-section of assets moves together at
several time scales: binned intraday returns with their cross-sectional
dispersion, asynchronous tick-level covariance that needs no common
grid, rolling daily correlations, the eigen-spectrum of the resulting
matrices, and low-dimensional maps annealed from correlation distances.
A compiled kernel extension accelerates the hot loops when available;
the pure Python fallback produces bit-identical numbers.
"""

__version__ = "0.1.0"

from .data import (
    BinGrid,
    BinnedReturnPanel,
    CorrelationMatrix,
    DailyPanel,
    DistanceMatrix,
    TickSeries,
    bin_panel,
    correlation_from_json,
    correlation_to_json,
    daily_returns,
    log_price_series,
    panel_from_json,
    panel_to_json,
    parse_session,
    read_daily_csv,
    read_matrix_csv,
    read_ticks_csv,
    write_daily_csv,
    write_matrix_csv,
    write_ticks_csv,
)
from .embedding import (
    AnnealingSchedule,
    EmbeddingMap,
    average_coords_across_days,
    average_correlations_across_days,
    center,
    chain_embed,
    map_from_json,
    map_to_json,
    mds_embed,
    mean_distance_from_center,
    read_map_coords,
    stress,
    to_distance,
    write_map_csv,
)
from .errors import (
    ComoveError,
    EstimationWarning,
    InsufficientDataError,
    NumericalError,
    ValidationError,
)
from .estimators import (
    BinMoments,
    DispersionSeries,
    HYResult,
    RealizedResult,
    WindowCorrelation,
    WindowSpec,
    average_correlations,
    average_pairwise_correlation,
    binwise_correlation,
    binwise_correlations,
    dispersion,
    hayashi_yoshida,
    hy_bin_matrices,
    hy_correlation_matrix,
    normalize_panel,
    pearson_windowed,
    realized_covariance,
    sync_grid,
    temporal_moments,
)
from .pipeline import (
    PipelineConfig,
    load_config,
    run_daily_pipeline,
    run_intraday_pipeline,
    run_pipeline,
)
from .spectral import (
    EigenSpectrum,
    binwise_spectrum_series,
    clean_spectrum,
    eigendecompose,
    market_mode_strength,
    mp_upper_edge,
)
from .synth import (
    DiffusionSpec,
    default_symbols,
    equicorrelated,
    planted_daily,
    planted_panel,
    simulate_asynchronous_ticks,
    simulate_daily_closes,
    simulate_planted_panel,
    simulate_sessions,
    trading_days,
)

__all__ = [
    "__version__",
    # errors
    "ComoveError", "ValidationError", "InsufficientDataError",
    "NumericalError", "EstimationWarning",
    # data
    "TickSeries", "BinGrid", "BinnedReturnPanel", "DailyPanel",
    "CorrelationMatrix", "DistanceMatrix", "bin_panel", "daily_returns",
    "log_price_series", "parse_session", "read_ticks_csv", "write_ticks_csv",
    "read_daily_csv", "write_daily_csv", "read_matrix_csv", "write_matrix_csv",
    "panel_to_json", "panel_from_json", "correlation_to_json",
    "correlation_from_json",
    # estimators
    "BinMoments", "DispersionSeries", "temporal_moments", "dispersion",
    "normalize_panel", "binwise_correlation", "binwise_correlations",
    "WindowSpec", "WindowCorrelation", "pearson_windowed", "RealizedResult",
    "realized_covariance", "sync_grid", "HYResult", "hayashi_yoshida",
    "hy_correlation_matrix", "hy_bin_matrices", "average_pairwise_correlation",
    "average_correlations",
    # spectral
    "EigenSpectrum", "eigendecompose", "market_mode_strength",
    "binwise_spectrum_series", "mp_upper_edge", "clean_spectrum",
    # embedding
    "AnnealingSchedule", "EmbeddingMap", "to_distance", "stress", "mds_embed",
    "center", "mean_distance_from_center", "chain_embed",
    "average_coords_across_days", "average_correlations_across_days",
    "write_map_csv", "read_map_coords", "map_to_json", "map_from_json",
    # synth
    "DiffusionSpec", "default_symbols", "trading_days", "equicorrelated",
    "simulate_asynchronous_ticks", "simulate_sessions", "simulate_daily_closes",
    "planted_panel", "simulate_planted_panel", "planted_daily",
    # pipeline
    "PipelineConfig", "load_config", "run_intraday_pipeline",
    "run_daily_pipeline", "run_pipeline",
]
