"""Low-rate DoS detection from packet timing and size with two reconstruction models.

A time-domain LSTM autoencoder and a frequency-domain convolutional residual
network are trained on normal traffic only; a 10-second segment is flagged
when either reconstruction error reaches its calibrated threshold.
"""

__version__ = "0.1.0"

from .errors import TFDError  # noqa: E402
from .ingest import (  # noqa: E402
    FeatureMatrix,
    NormalizationStats,
    PacketRecord,
    Segment,
    apply_normalization,
    extract_features,
    features_array,
    fit_normalization,
    parse_packets,
    read_packets,
    segment_stream,
    write_packets,
)
from .reconstructors import FreqReconstructor, TimeReconstructor  # noqa: E402
from .pipeline import (  # noqa: E402
    Detector,
    DetectionResult,
    Hyperparams,
    Thresholds,
    TrainingTrace,
    calibrate,
    calibrate_threshold,
    detect,
    detect_batch,
    fit_detector,
    train,
)
from .modelio import load_model, save_model  # noqa: E402
from .evaluation import ConfusionMatrix, Metrics, confusion, evaluate_runs, metrics, report  # noqa: E402
