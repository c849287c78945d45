"""Transaction monitoring for investment funds.

Pipeline: ingest raw subscription/redemption CSVs, aggregate per customer x
fund x period, compute the delta1/delta2 suspicion features, screen, cluster
the candidates, train a scoring network on the suspicious cluster, then work
the resulting cases through an analyst loop (CLI, HTTP service, web console).
"""

__version__ = "0.1.0"

from .casepipeline import (
    AlertLevel,
    AlertThresholds,
    Disposition,
    RunProfile,
    RunStore,
    ScoredCase,
    combine_alert,
    investigate,
    record_disposition,
    retrain,
    run_batch,
    score_all,
)
from .classifier import (
    NetworkConfig,
    TrainedModel,
    TrainingSet,
    build_training_set,
    gradient_check,
    load_model,
    model_fingerprint,
    predict,
    predict_batch,
    save_model,
    train,
)
from .clustering import (
    ClusteringConfig,
    ClusteringResult,
    drilldown,
    kmeans,
    rank_clusters_by_suspicion,
)
from .errors import (
    ConfigurationError,
    FundwatchError,
    InputError,
    NotFoundError,
    RequestError,
    StageError,
    StoreBusyError,
    TrainingError,
)
from .features import (
    DeltaPoint,
    PeriodAggregate,
    PeriodGranularity,
    bucketize,
    compute_points,
    delta1_lookback,
    delta1_simple,
    delta2,
    period_bounds,
    period_index,
    period_label,
)
from .ingest import (
    CleaningReport,
    CustomerType,
    Direction,
    RawTransactionRecord,
    clean_mapping_errors,
    parse_transactions,
    partition_by_customer_type,
)
from .screening import ScreeningThresholds, screen
from .synthgen import (
    GroundTruth,
    InjectionSpec,
    PatternKind,
    PopulationSpec,
    generate,
)
