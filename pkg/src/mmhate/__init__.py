"""Multimodal hate-speech detection toolkit.

Speech emotion-attribute embeddings (valence/arousal/dominance, via a
multi-task dense regressor over MFCC/chroma/spectral features) fused with
768-dim text embeddings through a joint-representation classifier.
"""

__version__ = "0.1.0"

from .emotion import EmotionAttributes, MtlConfig, MtlModel, SpeechEmbedding, mtl_loss, train_mtl
from .features import FeatureKind, FeatureRepresentation, FeatureScaler, FrameSpec
from .fusion import FusedEmbedding, FusionConfig, FusionModel, Label, Prediction, fuse, train_fusion
from .metrics import ConfusionMatrix, MacroScores, confusion, macro_scores
from .signal_io import AudioSignal, NoiseProfile, decode_wav, encode_wav, resample, spectral_gate
from .text import PoolingMode, TextEmbedding, TokenSequence, Vocabulary, preprocess_text, stub_embed, tokenize

__all__ = [
    "AudioSignal",
    "ConfusionMatrix",
    "EmotionAttributes",
    "FeatureKind",
    "FeatureRepresentation",
    "FeatureScaler",
    "FrameSpec",
    "FusedEmbedding",
    "FusionConfig",
    "FusionModel",
    "Label",
    "MacroScores",
    "MtlConfig",
    "MtlModel",
    "NoiseProfile",
    "PoolingMode",
    "Prediction",
    "SpeechEmbedding",
    "TextEmbedding",
    "TokenSequence",
    "Vocabulary",
    "confusion",
    "decode_wav",
    "encode_wav",
    "fuse",
    "macro_scores",
    "mtl_loss",
    "preprocess_text",
    "resample",
    "spectral_gate",
    "stub_embed",
    "tokenize",
    "train_fusion",
    "train_mtl",
]
