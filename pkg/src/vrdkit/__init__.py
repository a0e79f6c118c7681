"""Visual relationship detection as object-detection post-processing.

The toolkit scores ordered detection pairs with a from-scratch boosted-tree
classifier, combines the result with detector confidences, decodes
attribute ("is") detections, concatenates the two streams, and evaluates
with relationship mAP, Recall@N, and phrase mAP. A deterministic synthetic
scene generator with planted geometric rules supports end-to-end testing
at desk scale.
"""

__version__ = "0.1.0"

from .datamodel import (
    DataError,
    Detection,
    GroundTruthRelation,
    RelationshipPrediction,
    TripletVocabulary,
    challenge_vocabulary,
    group_by_image,
    load_vocabulary,
    parse_detections,
    parse_predictions,
    parse_relations,
    write_detections,
    write_predictions,
    write_relations,
    write_vocabulary,
)
from .features import FeatureSchema, extract_pair_features
from .gbdt import (
    BoostedModel,
    ModelFormatError,
    Objective,
    TrainConfig,
    load_model,
    save_model,
    train,
)
from .geometry import Box, center, center_distance, enclose, iou
from .metrics import EvalConfig, EvalReport, evaluate
from .scoring import (
    IsTripletClassMap,
    RelationshipCandidate,
    combine_confidence,
    decode_is_predictions,
    ensemble_concat,
    generate_candidates,
    score_images,
)
from .synth import SynthConfig, default_vocabulary, generate
from .trainset import TrainingSet, build_training_set

__all__ = [
    "BoostedModel",
    "Box",
    "DataError",
    "Detection",
    "EvalConfig",
    "EvalReport",
    "FeatureSchema",
    "GroundTruthRelation",
    "IsTripletClassMap",
    "ModelFormatError",
    "Objective",
    "RelationshipCandidate",
    "RelationshipPrediction",
    "SynthConfig",
    "TrainConfig",
    "TrainingSet",
    "TripletVocabulary",
    "__version__",
    "build_training_set",
    "center",
    "challenge_vocabulary",
    "center_distance",
    "combine_confidence",
    "decode_is_predictions",
    "default_vocabulary",
    "enclose",
    "ensemble_concat",
    "evaluate",
    "extract_pair_features",
    "generate",
    "generate_candidates",
    "group_by_image",
    "iou",
    "load_model",
    "load_vocabulary",
    "parse_detections",
    "parse_predictions",
    "parse_relations",
    "save_model",
    "score_images",
    "train",
    "write_detections",
    "write_predictions",
    "write_relations",
    "write_vocabulary",
]
