import jax
import jax.numpy as jnp
import numpy as np
import numpy.testing as npt
import pytest

from pcan.Network.encoders import LanguageGate, TextEncoder, VisualEncoder
from pcan.SynthData import grammar
from pcan.Util.exceptions import ShapeError


@pytest.fixture
def tokens():
    return jnp.asarray(grammar.encode('the small red circle left of the square'.split()))


def test_visual_pyramid_shapes():
    encoder = VisualEncoder(16, width=4)
    params = encoder.init_params(jax.random.PRNGKey(0))
    pyramid = encoder(params, jnp.zeros((64, 96, 3)))
    assert [level.shape for level in pyramid] == [(8, 12, 16), (4, 6, 16), (2, 3, 16)]


@pytest.mark.parametrize("shape", [(64, 64), (60, 64, 3), (64, 64, 4)])
def test_visual_encoder_rejects_bad_images(shape):
    encoder = VisualEncoder(16, width=4)
    with pytest.raises(ShapeError):
        encoder(encoder.init_params(jax.random.PRNGKey(0)), jnp.zeros(shape))


@pytest.mark.parametrize("pooling", ['mean', 'max'])
def test_sentence_feature_ignores_padding(tokens, pooling):
    encoder = TextEncoder(len(grammar.VOCABULARY), 16, num_heads=2, pooling=pooling)
    params = encoder.init_params(jax.random.PRNGKey(1))
    short = encoder(params, tokens)
    padded = encoder(params, jnp.pad(tokens, (0, grammar.MAX_TOKENS - tokens.shape[0])))
    assert short.words.shape == (tokens.shape[0], 16)
    assert padded.mask.sum() == tokens.shape[0]
    npt.assert_allclose(padded.sentence, short.sentence, atol=1e-10)
    npt.assert_allclose(padded.words[:tokens.shape[0]], short.words, atol=1e-10)


def test_sentence_depends_on_the_words(tokens):
    encoder = TextEncoder(len(grammar.VOCABULARY), 16, num_heads=2)
    params = encoder.init_params(jax.random.PRNGKey(1))
    other = jnp.asarray(grammar.encode('the small red circle right of the square'.split()))
    assert not np.allclose(encoder(params, tokens).sentence, encoder(params, other).sentence)


@pytest.mark.parametrize("pooling", ["mean", "max"])
def test_token_order_changes_the_sentence(tokens, pooling):
    encoder = TextEncoder(len(grammar.VOCABULARY), 16, num_heads=2, pooling=pooling)
    params = encoder.init_params(jax.random.PRNGKey(2))
    reversed_tokens = tokens[::-1]
    # same bag of word embeddings, only the positions differ
    npt.assert_allclose(encoder.embed(params, reversed_tokens), encoder.embed(params, tokens)[::-1])
    forward = encoder(params, tokens).sentence
    backward = encoder(params, reversed_tokens).sentence
    assert np.all(np.isfinite(forward)) and np.all(np.isfinite(backward))
    assert not np.allclose(forward, backward, atol=1e-6)


@pytest.mark.parametrize(
    "bad",
    [np.zeros((2, 3), dtype=int), np.zeros(0, dtype=int), np.zeros(17, dtype=int) + 1,
     np.array([1, 999]), np.array([-1, 2]), np.zeros(4, dtype=int)],
)
def test_text_encoder_rejects_bad_tokens(bad):
    encoder = TextEncoder(len(grammar.VOCABULARY), 16, num_heads=2)
    with pytest.raises(ShapeError):
        encoder(encoder.init_params(jax.random.PRNGKey(1)), jnp.asarray(bad))


def test_unknown_pooling():
    with pytest.raises(ValueError):
        TextEncoder(10, 16, pooling='attention')


def test_language_gate():
    pyramid = (jnp.ones((4, 4, 8)), jnp.ones((2, 2, 8)))
    sentence = jnp.linspace(-1., 1., 8)
    gate = LanguageGate(8)
    params = gate.init_params(jax.random.PRNGKey(2))
    gated = gate(params, pyramid, sentence)
    expected = jax.nn.sigmoid(sentence @ params['w'] + params['b'])
    npt.assert_allclose(gated[1][0, 0], expected, atol=1e-12)
    assert LanguageGate(8, enabled=False)(params, pyramid, sentence) is pyramid
    with pytest.raises(ShapeError):
        gate(params, pyramid, jnp.ones(4))
