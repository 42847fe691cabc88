"""shadowrank: constraint-compliant ranking at serving speed.

Offline, solve each user's exposure-constrained ranking exactly via the
matching dual; online, predict the dual prices from user covariates and
rank by one sort.  See README for the full tour.
"""

from .assignment import (
    AssignStrategy,
    InfeasibleError,
    assign,
    brute_force_assign,
    greedy_assign,
    hungarian_assign,
    is_inverse_monge,
    sorted_identity_assign,
    verify_potentials,
)
from .data import (
    DataFormatError,
    Dataset,
    InfeasibleConfigError,
    LambdaLaw,
    SynthConfig,
    load_artifact,
    load_dataset,
    read_dataset,
    save_artifact,
    synth_generate,
    write_dataset,
)
from .dual import (
    DEFAULT_EPSILON_GRID,
    ComplianceReport,
    DualConfig,
    dual_value,
    rank_with_lambda,
    solve_dual,
    tune_epsilon,
)
from .pipeline import (
    EvaluationReport,
    PredictorConfig,
    Strategy,
    StrategyResult,
    TrainedArtifact,
    evaluate,
    offline_train,
    online_rank,
)
from .predictor import LambdaPredictor, PredictorKind, fit, predict
from .problem import (
    Assignment,
    BoundKind,
    ConstraintSpec,
    DiscountVector,
    MemoryBudgetExceeded,
    RankingInstance,
    Sense,
    ShadowPriceVector,
    constraint_attainment,
    materialize_weight_matrix,
    normalize_constraints,
    raw_utility,
    score_vector,
)
from .reporting import REPORT_COLUMNS, emit_report
from .server import handle_request_line, make_tcp_server, serve_stream

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # problem
    "Assignment",
    "BoundKind",
    "ConstraintSpec",
    "DiscountVector",
    "MemoryBudgetExceeded",
    "RankingInstance",
    "Sense",
    "ShadowPriceVector",
    "constraint_attainment",
    "materialize_weight_matrix",
    "normalize_constraints",
    "raw_utility",
    "score_vector",
    # assignment
    "AssignStrategy",
    "InfeasibleError",
    "assign",
    "brute_force_assign",
    "greedy_assign",
    "hungarian_assign",
    "is_inverse_monge",
    "sorted_identity_assign",
    "verify_potentials",
    # dual
    "DEFAULT_EPSILON_GRID",
    "ComplianceReport",
    "DualConfig",
    "dual_value",
    "rank_with_lambda",
    "solve_dual",
    "tune_epsilon",
    # predictor
    "LambdaPredictor",
    "PredictorKind",
    "fit",
    "predict",
    # pipeline
    "EvaluationReport",
    "PredictorConfig",
    "Strategy",
    "StrategyResult",
    "TrainedArtifact",
    "evaluate",
    "offline_train",
    "online_rank",
    # data
    "DataFormatError",
    "Dataset",
    "InfeasibleConfigError",
    "LambdaLaw",
    "SynthConfig",
    "load_artifact",
    "load_dataset",
    "read_dataset",
    "save_artifact",
    "synth_generate",
    "write_dataset",
    # reporting
    "REPORT_COLUMNS",
    "emit_report",
    # server
    "handle_request_line",
    "make_tcp_server",
    "serve_stream",
]
