import numpy as np
import pytest

from racinggan import diffcore as dc
from racinggan.models import (MlpSpec, discriminate, discriminator_spec, generate, generator_spec,
                              init_net, read_params_csv, sample_latent, write_params_csv)

from gradcheck import max_rel_error, numeric_grad


def test_spec_validation():
    with pytest.raises(ValueError):
        MlpSpec((4,))
    with pytest.raises(ValueError):
        MlpSpec((4, 0, 1))
    with pytest.raises(ValueError):
        MlpSpec((4, 1), hidden_activation="gelu")


def test_zero_discriminator_outputs_half(rng):
    d = init_net(discriminator_spec(16), None, zero=True)
    out = discriminate(d, dc.Tensor(rng.normal(size=(5, 16))))
    assert np.all(out.values == 0.5)


def test_parameter_count():
    net = init_net(MlpSpec((4, 8, 1), "relu", "sigmoid"), np.random.default_rng(0))
    assert net.params.count() == 49


def test_init_deterministic():
    a = init_net(generator_spec(), np.random.default_rng(5)).params.flat()
    b = init_net(generator_spec(), np.random.default_rng(5)).params.flat()
    assert np.array_equal(a, b)


def test_glorot_bounds():
    net = init_net(MlpSpec((8, 32, 16)), np.random.default_rng(1))
    s = np.sqrt(6 / 40)
    assert np.abs(net.params["W0"].values).max() <= s
    assert np.abs(net.params["W0"].values).max() > 0.8 * s
    assert not net.params["b0"].values.any()


def test_sample_latent_rejects_empty(rng):
    with pytest.raises(ValueError):
        sample_latent(8, 0, rng)


def test_sample_latent_moments():
    z = sample_latent(1, 100_000, np.random.default_rng(0)).values
    assert abs(z.mean()) < 0.02
    assert abs(z.var() - 1) < 0.05


def test_sample_latent_seeded():
    a = sample_latent(4, 3, np.random.default_rng(9)).values
    b = sample_latent(4, 3, np.random.default_rng(9)).values
    assert np.array_equal(a, b)


def test_shapes(rng):
    g = init_net(generator_spec(8, 16), rng)
    d = init_net(discriminator_spec(16), rng)
    x = generate(g, sample_latent(8, 7, rng))
    assert x.shape == (7, 16)
    out = discriminate(d, x)
    assert out.shape == (7, 1)
    assert np.all((out.values > 0) & (out.values < 1))
    with pytest.raises(dc.ShapeError):
        generate(g, sample_latent(5, 7, rng))


@pytest.mark.parametrize("seed", range(3))
def test_gradient_through_d_of_g(seed):
    rng = np.random.default_rng(seed)
    g = init_net(generator_spec(4, 6, hidden=(10, 10)), rng)
    d = init_net(discriminator_spec(6, hidden=(12, 12)), rng)
    z = sample_latent(4, 5, rng)
    with dc.Tape():
        loss = dc.mean(discriminate(d, generate(g, z)))
    dc.backward(loss)

    def f():
        with dc.no_grad():
            return dc.mean(discriminate(d, generate(g, z))).item()

    for name, p in g.params:
        assert max_rel_error(p.grad, numeric_grad(f, p.values)) < 1e-4, name


def test_params_csv_roundtrip(tmp_path, rng):
    net = init_net(generator_spec(3, 5, hidden=(4,)), rng)
    path = write_params_csv(tmp_path / "p.csv", net.params)
    assert path.read_text().splitlines()[0] == "name,row,col,value"
    back = read_params_csv(path)
    for name, p in net.params:
        assert np.array_equal(back[name], p.values)
