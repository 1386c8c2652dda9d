import jax.numpy as jnp
import numpy as np
import numpy.testing as npt

from pcan.Util import util


def test_inverse_sigmoid():
    x = jnp.array([.1, .5, .9])
    npt.assert_allclose(util.inverse_sigmoid(x), np.log(x / (1. - x)), atol=1e-12)
    assert np.all(np.isfinite(util.inverse_sigmoid(jnp.array([0., 1.]))))


def test_seeded_streams_are_independent_of_call_order():
    a = util.seeded_rng(0, 5).uniform(size=3)
    util.seeded_rng(0, 4).uniform(size=100)
    npt.assert_array_equal(util.seeded_rng(0, 5).uniform(size=3), a)
    assert not np.array_equal(util.seeded_rng(0, 6).uniform(size=3), a)
    assert not np.array_equal(util.seeded_rng(0, 5, 0).uniform(size=3), a)


def test_counted():
    @util.counted
    def square(x):
        return x * x
    assert square.calls == 0
    assert square(3) == 9 and square(2) == 4
    assert square.calls == 2 and square.__name__ == 'square'


def test_json_with_comments(tmp_path):
    path = tmp_path / 'config.json'
    path.write_text('{\n  // a line comment\n  "a": 1, /* block\n comment */ "b": "http://x"\n}\n')
    assert util.read_json(str(path)) == {'a': 1, 'b': 'http://x'}
    util.write_json({'z': 1, 'a': [1, 2]}, str(tmp_path / 'out.json'))
    assert util.read_json(str(tmp_path / 'out.json')) == {'z': 1, 'a': [1, 2]}
    assert util.canonical_json({'b': 1, 'a': {'d': 2, 'c': 3}}) == '{"a":{"c":3,"d":2},"b":1}'
