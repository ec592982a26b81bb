"""Saliency-driven embedding dimension selection and a compact TC-GRU
regressor for dimensional (valence / activation / dominance) emotion
estimation, with a concordance-correlation training loss."""

from .corpus import (
    AffectLabels,
    Corpus,
    SyntheticSpec,
    UtteranceRecord,
    generate_synthetic,
    load_manifest,
    mean_pool,
    pool_corpus,
    read_embedding_file,
    save_manifest,
    write_embedding_file,
)
from .degrade import DegradeSpec, degrade_corpus, perturb
from .errors import DegenerateInputError, FormatError, ManifestError, TrainingDiverged
from .metrics import (
    BinnedMse,
    CccBreakdown,
    LossWeights,
    ccc,
    ccc_loss,
    ccc_loss_with_variance,
    mse_by_bin,
)
from .model import (
    ModelConfig,
    RegressorModel,
    TcGruRegressor,
    TrainConfig,
    TrainHistory,
    backward,
    evaluate,
    forward,
    init_model,
    load_checkpoint,
    model_size_report,
    parameter_count,
    save_checkpoint,
    train,
)
from .pca import PcaProjection, PcaReducer, apply_pca, fit_pca, subsample_frames
from .saliency import (
    SaliencyScores,
    SaliencySelector,
    SelectionMask,
    abs_correlation,
    apply_mask,
    gamma,
    mutual_information,
    rank_and_select,
    score_saliency,
    write_saliency_report,
)

__version__ = "0.1.0"
