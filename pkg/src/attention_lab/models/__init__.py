"""Encoder models built from the attention variants"""

from .encoder import AttentionEncoder, EncoderBlock, EncoderOutput

__all__ = ["AttentionEncoder", "EncoderBlock", "EncoderOutput"]
