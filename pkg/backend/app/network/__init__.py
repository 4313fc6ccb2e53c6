"""Encoder, heads, losses and the gradient contract."""

from app.network.encoder import ForwardTrace, ModalityEncoder, MultimodalEncoder
from app.network.gradients import (
    GradCheckReport,
    apply_gradients,
    check_gradients,
    compute_gradients,
)
from app.network.heads import FusionHead, PretextHead
from app.network.losses import pretext_loss, supervised_loss
from app.network.models import EmotionModel, PretextModel, build_emotion_model, build_pretext_model
from app.network.tcn import TCN, TemporalBlock, receptive_field
from app.network.transformer import MultiHeadSelfAttention, PositionalEncoding, TransformerBlock

__all__ = [
    "EmotionModel",
    "ForwardTrace",
    "FusionHead",
    "GradCheckReport",
    "ModalityEncoder",
    "MultiHeadSelfAttention",
    "MultimodalEncoder",
    "PositionalEncoding",
    "PretextHead",
    "PretextModel",
    "TCN",
    "TemporalBlock",
    "TransformerBlock",
    "apply_gradients",
    "build_emotion_model",
    "build_pretext_model",
    "check_gradients",
    "compute_gradients",
    "pretext_loss",
    "receptive_field",
    "supervised_loss",
]
