# Defines the full segmentation model with its matching and contrastive paths
#
# Copyright (c) 2026, pcan developers and contributors


from dataclasses import dataclass, replace
from functools import partial

import jax
import jax.numpy as jnp
from jax import jit

from pcan.Network.encoders import VisualEncoder, TextEncoder, LanguageGate
from pcan.Network.mask_head import MaskHead
from pcan.Network.queries import init_anchor_logits, make_contrastive_bundles, make_matching_bundle
from pcan.Network.transformer import TransformerEncoder, TransformerDecoder, box_head_init
from pcan.SynthData.grammar import VOCABULARY, MAX_TOKENS
from pcan.Util.exceptions import ConfigurationError
from pcan.Util.image_util import resize_bilinear


__all__ = ['ModelConfig', 'PCANModel']


@dataclass(frozen=True)
class ModelConfig(object):
    """
    :param hidden_dim: channel dimension C shared by all blocks
    :param num_queries: number N of decoder queries
    :param mask_channels: channels of the fused map used by the dynamic convolution
    :param embed_dim: dimension D of the contrastive embeddings
    :param pooling: 'mean' or 'max' sentence pooling
    :param language_gate: gate visual features with the sentence feature
    :param refine_anchors: refine anchors between decoder layers
    :param normalize_embeddings: L2-normalize the contrastive embeddings
    """
    hidden_dim: int = 32
    num_queries: int = 12
    enc_layers: int = 4
    dec_layers: int = 4
    num_heads: int = 4
    ffn_ratio: int = 4
    mask_channels: int = 8
    embed_dim: int = 64
    backbone_width: int = 16
    vocab_size: int = len(VOCABULARY)
    max_tokens: int = MAX_TOKENS
    pooling: str = 'mean'
    language_gate: bool = True
    refine_anchors: bool = True
    normalize_embeddings: bool = True
    anchor_init_range: float = 1.5

    def validate(self):
        if self.hidden_dim % 8 != 0 or self.hidden_dim % self.num_heads != 0:
            raise ConfigurationError("hidden_dim must be a multiple of 8 and of num_heads")
        if self.num_queries < 1 or self.enc_layers < 1 or self.dec_layers < 1:
            raise ConfigurationError("num_queries and layer counts must be positive")
        if self.pooling not in ('mean', 'max'):
            raise ConfigurationError(f"Pooling '{self.pooling}' is not supported")
        if self.vocab_size < len(VOCABULARY):
            raise ConfigurationError(f"vocab_size must cover the {len(VOCABULARY)} words of the grammar")


class PCANModel(object):
    """Referring segmentation model.

    The matching path decodes learnable anchors and is all that inference
    runs. The contrastive path decodes the boxes of the contrastive groups
    with the very same decoder parameters.
    """

    def __init__(self, config=None):
        self.config = ModelConfig() if config is None else config
        self.config.validate()
        c = self.config
        self.visual = VisualEncoder(c.hidden_dim, c.backbone_width)
        self.text = TextEncoder(c.vocab_size, c.hidden_dim, c.num_heads, c.max_tokens, c.pooling, c.ffn_ratio)
        self.gate = LanguageGate(c.hidden_dim, enabled=c.language_gate)
        self.encoder = TransformerEncoder(c.hidden_dim, c.enc_layers, c.num_heads, c.ffn_ratio)
        self.decoder = TransformerDecoder(c.hidden_dim, c.dec_layers, c.num_heads, c.ffn_ratio,
                                          refine_anchors=c.refine_anchors)
        self.mask_head = MaskHead(c.hidden_dim, c.mask_channels, c.embed_dim, c.normalize_embeddings)

    def init_params(self, key):
        keys = jax.random.split(key, 8)
        return {'visual': self.visual.init_params(keys[0]),
                'text': self.text.init_params(keys[1]),
                'gate': self.gate.init_params(keys[2]),
                'encoder': self.encoder.init_params(keys[3]),
                'decoder': self.decoder.init_params(keys[4]),
                'box_head': box_head_init(keys[5], self.config.hidden_dim),
                'anchors': init_anchor_logits(keys[6], self.config.num_queries,
                                              self.config.anchor_init_range),
                'mask_head': self.mask_head.init_params(keys[7])}

    def features(self, params, image, tokens):
        """Shared front end: (memory, fused map, sentence feature)."""
        text = self.text(params['text'], tokens)
        pyramid = self.gate(params['gate'], self.visual(params['visual'], image), text.sentence)
        memory = self.encoder(params['encoder'], pyramid)
        fused = self.mask_head.fuse_fpn(params['mask_head'], memory)
        return memory, fused, text.sentence

    def decode_bundle(self, params, memory, fused, bundle):
        """Decoder plus heads for one QueryBundle."""
        out = self.decoder(params['decoder'], params['box_head'], memory, bundle.content, bundle.position)
        return self.mask_head(params['mask_head'], params['box_head'], out, fused)

    @partial(jit, static_argnums=(0,))
    def predict(self, params, image, tokens):
        """Matching path only: the PredictionSet of one scene."""
        memory, fused, sentence = self.features(params, image, tokens)
        return self.decode_bundle(params, memory, fused, make_matching_bundle(sentence, params['anchors']))

    @partial(jit, static_argnums=(0,))
    def predict_train(self, params, image, tokens, group_boxes):
        """Matching and contrastive paths sharing one forward of the front end.

        :param group_boxes: (G, K, 4) center-size boxes of the contrastive groups
        :return: (matching PredictionSet, contrastive PredictionSet with a
         leading group axis)
        """
        memory, fused, sentence = self.features(params, image, tokens)
        matching_bundle = make_matching_bundle(sentence, params['anchors'])
        matching = self.decode_bundle(params, memory, fused, matching_bundle)
        bundles = make_contrastive_bundles(sentence, group_boxes, params['anchors'])
        # the groups only differ by their positions
        positions = jnp.stack([b.position for b in bundles])
        contrastive = jax.vmap(
            lambda p: self.decode_bundle(params, memory, fused, replace(bundles[0], position=p)))(positions)
        return matching, contrastive

    @partial(jit, static_argnums=(0,))
    def segment(self, params, image, tokens):
        """Full-resolution logits of the highest-scoring query, and its index."""
        preds = self.predict(params, image, tokens)
        best = jnp.argmax(preds.class_logits)
        logits = resize_bilinear(preds.mask_logits[best], image.shape[0], image.shape[1])
        return logits, best
