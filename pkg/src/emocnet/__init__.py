"""Active learning for layered neural classifiers driven by expected
model output change, with uncertainty and random baselines, a continual
training loop, an experiment harness, and an annotation service."""

from .data import (
    Dataset,
    LabeledPool,
    Sample,
    SyntheticSpec,
    UnlabeledPool,
    generate_synthetic,
    load_cifar100,
    synthetic_dataset,
)
from .layers import (
    Convolution2D,
    FullyConnected,
    MaxPool2D,
    ReLU,
    ShapeError,
    Softmax,
)
from .network import Network, expand_final_classifier, network_from_config
from .protocol import (
    ExperimentRecord,
    ProtocolConfig,
    build_protocol,
    evaluate,
    export_results,
    import_results,
    run_experiment,
    summarize,
)
from .selection import (
    CandidateSet,
    ScoredRound,
    SelectionConfig,
    Strategy,
    baseline_score,
    emoc_score,
    generate_candidate_sets,
    l1_distance,
    map_label,
    select_batch,
)
from .training import (
    LossKind,
    OptimizerState,
    RegularizerConfig,
    TrainingConfig,
    continual_update,
    draw_mixed_batch,
    mean_gradient,
    objective,
    sample_gradient,
    sgd_step,
)

__version__ = "0.1.0"
