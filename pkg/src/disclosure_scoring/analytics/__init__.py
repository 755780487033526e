from .panel import (
    P_FLOOR,
    SIGNIFICANCE,
    CorrelationMatrix,
    Distribution,
    PercentileTable,
    ScoreSeries,
    SignedPValue,
    SignedPValueSeries,
    TauReport,
    YearTau,
    as_values,
    correlation_matrix,
    group_mean_series,
    percentile_ranks,
    score_distribution,
    series_correlation,
    signed_pvalue,
    validate_rank_consistency,
    yoy_signed_pvalues,
)
from .stats import (
    InsufficientOverlap,
    TauResult,
    WelchResult,
    kendall_tau,
    midrank_percentiles,
    time_correlation,
    welch_test,
)
