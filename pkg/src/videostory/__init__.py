"""Video-story composition: two-stream recurrent coherence learning, greedy
story ranking, and evaluation tooling."""

__version__ = "0.1.0"

from .config import PipelineConfig
from .features import ClipFeatures, clip_motion_feature, dynamics_score, hoof, spp_hoof_frame
from .dataio import (
    build_feature_store,
    compute_clip_features,
    load_manifest,
    read_feature_store,
    read_flo,
    read_semantic_vector,
    write_feature_store,
    write_flo,
)
from .rnn import (
    EpochStats,
    ForwardTrace,
    Gradients,
    NumericError,
    RnnParams,
    SgdMomentum,
    TrainConfig,
    TrainResult,
    bptt_gradients,
    forward_sequence,
    forward_step,
    init_params,
    load_checkpoint,
    next_clip_probs,
    save_checkpoint,
    sequence_log_likelihood,
    train,
)
from .coherence import (
    TwoStreamModel,
    coherence_matrix,
    fused_coherence,
    greedy_compose,
    read_coherence_csv,
    select_initial_clip,
    write_coherence_csv,
    write_ordering_json,
)
from .ranker import (
    RankResult,
    StoryGraph,
    activity_dynamics,
    facility_location,
    greedy_rank,
    lazy_greedy_rank,
    objective,
    write_dynamics_csv,
    write_rank_json,
)
from .evaluation import (
    BTScores,
    DisconnectedPreferencesError,
    DynamicsReport,
    PairwisePreferences,
    RocCurve,
    UndefinedAucError,
    bradley_terry,
    dynamics_report,
    load_labels_json,
    load_preferences_json,
    pairwise_roc,
)
