"""Post-drift retraining window sizing for multivariate data streams.

Given a drift alarm, the criterion in :mod:`caliper.criterion` watches the
growing post-drift window and triggers retraining once local one-step
predictability is established: an effective-sample-size gate plus a monotone
non-increase of cumulative proxy error as the locality kernel tightens.
The package also ships the drift detectors, synthetic dynamical streams and
baseline learners needed to exercise the method end to end.
"""

from .core import (
    DEFAULT_WINDOW_CAP,
    NormalizedSplit,
    PostDriftWindow,
    Sample,
    WindowStats,
    denormalize,
    normalize_window,
    push,
    split,
)
from .criterion import (
    CaliperConfig,
    CaliperState,
    Decision,
    EssGateFailed,
    InsufficientWindow,
    LocalityGrid,
    NotMonotone,
    Trigger,
    caliper_step,
    decision_label,
    effective_radius,
    ess,
    ess_gate,
    kernel_weights,
    monotone_test,
    proxy_error,
    scaled_distances,
    wlr_fit,
    wlr_predict,
)
from .detectors import AdwinDetector, KswinDetector, ks_pvalue, ks_statistic, monitor_statistic
from .dynamics import (
    DriftEvent,
    DriftSchedule,
    OdeSystem,
    StreamSpec,
    builtin_system,
    generate_stream,
    rk4_step,
)
from .errors import (
    CaliperError,
    ConfigError,
    DivergenceError,
    IngestError,
    InsufficientWindowError,
    NumericalError,
    StreamError,
    UndefinedEstimateError,
)
from .learners import (
    AdaptationStrategy,
    CaliperStrategy,
    DelayEmbedding,
    EpisodeReport,
    FixedWindow,
    Incremental,
    IncrementalLearner,
    KrrLearner,
    RetrainEvent,
    RidgeLearner,
    embed,
    fit_krr,
    fit_ridge,
    run_adaptation,
    sgd_update,
)
from .statedep import (
    StateDepEstimate,
    alpha_hat,
    compare_windows,
    default_expansion_constant,
    local_expansion_estimate,
)

__version__ = "0.1.0"
