from .wire import (
    CATEGORIES,
    DimensionMismatch,
    EmotionReport,
    PersonReading,
    RawPrediction,
    Thresholds,
    parse_response,
    render_response,
    select_categories,
)
from .metrics import (
    LossWeights,
    NoPositives,
    average_precision,
    combined_loss,
    mean_ap,
    mean_vad_error,
    vad_error,
)
from .service import BadImage, EmotionAnalyzer, PredictorFailure, create_emotion_app

__all__ = [
    "CATEGORIES",
    "DimensionMismatch",
    "EmotionReport",
    "PersonReading",
    "RawPrediction",
    "Thresholds",
    "parse_response",
    "render_response",
    "select_categories",
    "LossWeights",
    "NoPositives",
    "average_precision",
    "combined_loss",
    "mean_ap",
    "mean_vad_error",
    "vad_error",
    "BadImage",
    "EmotionAnalyzer",
    "PredictorFailure",
    "create_emotion_app",
]
