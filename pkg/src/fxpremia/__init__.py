"""Time-varying FX risk premia from monthly spot/forward series.

Two complementary routes: univariate regressions on the forward-spot
differential (existence and time variation of the premium), and an ARMA
signal-plus-noise state space estimated by maximum likelihood through a
generalized Kalman filter that allows the expectation error and the premium
innovation to be correlated.
"""

from .errors import (
    ContinuityError,
    CovarianceDomainError,
    DegenerateInputError,
    DomainError,
    FilterDivergenceError,
    FxPremiaError,
    InsufficientDataError,
    NonStationaryError,
    ParameterError,
    ParseError,
    SingularDesignError,
    UnsupportedProcessError,
)
from .series import (
    AlignedSeries,
    Month,
    RateObservation,
    aligned_to_csv,
    build_aligned,
    filter_observations,
    ingest_csv,
)
from .diagnostics import (
    CorrelogramRow,
    MomentSummary,
    TestResult,
    adf_test,
    breusch_godfrey,
    correlogram,
    jarque_bera,
    ljung_box,
    moments,
    significance_threshold,
)
from .regressions import (
    AdjustedFits,
    FamaFits,
    OlsFit,
    PremiaTimeVariationVerdict,
    ols,
    run_adjusted,
    run_fama,
    test_time_varying_premia,
)
from .state_space import (
    FilterOutput,
    FittedModel,
    PremiaSeries,
    SimulationResult,
    StateSpaceSpec,
    build_arma_spec,
    extract_premia,
    information_criteria,
    kalman_filter,
    log_likelihood,
    mle_fit,
    simulate,
    stationary_init,
)
from .identification import (
    CandidateReport,
    IdentifiedOrders,
    fit_candidates,
    identify_orders,
    map_fe_to_rp_process,
)
from .pipeline import (
    AnalysisReport,
    PipelineConfig,
    WhitenessReport,
    check_residual_whiteness,
    run_pipeline,
)

__version__ = "0.1.0"
