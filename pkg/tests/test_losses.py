import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from racinggan import diffcore as dc
from racinggan.diffcore import Tensor
from racinggan.losses import (CouplingGraph, LossConfig, coupling_term, discriminator_loss,
                              generator_loss, hinge)

LN2 = math.log(2)
LAG = LossConfig(hinge_convention="lag_penalty")
LEAD = LossConfig(hinge_convention="lead_penalty")


def col(*vals):
    return Tensor(np.array(vals, dtype=float).reshape(-1, 1))


def test_graph_validation():
    with pytest.raises(ValueError, match="self-edge"):
        CouplingGraph(2, {(1, 1)})
    with pytest.raises(ValueError, match="out of range"):
        CouplingGraph(2, {(0, 2)})
    with pytest.raises(ValueError):
        CouplingGraph(0)


def test_fully_connected():
    g = CouplingGraph.fully_connected(3)
    assert len(g.edges) == 6
    assert g.opponents(1) == [0, 2]


def test_loss_config_validation():
    with pytest.raises(ValueError):
        LossConfig(formulation="wgan")
    with pytest.raises(ValueError):
        LossConfig(hinge_convention="both")


@pytest.mark.parametrize("k, expected", [(1, 2 * LN2), (2, 3 * LN2)])
def test_discriminator_loss_at_half(k, expected):
    half = col(0.5, 0.5, 0.5)
    assert discriminator_loss(half, [half] * k).item() == pytest.approx(expected, abs=1e-15)


def test_discriminator_loss_confident():
    # -ln 0.9 - ln(1 - 0.1), evaluated independently
    assert discriminator_loss(col(0.9), [col(0.1)]).item() == pytest.approx(0.21072103131565256,
                                                                           abs=1e-15)


def test_discriminator_paper_literal():
    v = discriminator_loss(col(0.5), [col(0.5)], "paper_literal").item()
    assert v == pytest.approx(LN2 - (1 + LN2), abs=1e-15)


def test_discriminator_loss_errors():
    with pytest.raises(ValueError):
        discriminator_loss(col(0.5), [])
    with pytest.raises(ValueError):
        discriminator_loss(col(1.5), [col(0.5)])


def test_discriminator_gradient_reaches_both_branches():
    real = Tensor([[0.6], [0.7]], requires_grad=True)
    fake = Tensor([[0.3], [0.2]], requires_grad=True)
    with dc.Tape():
        loss = discriminator_loss(real, [fake])
    dc.backward(loss)
    np.testing.assert_allclose(real.grad, -0.5 / real.values)
    np.testing.assert_allclose(fake.grad, 0.5 / (1 - fake.values))


def test_generator_base_at_half():
    g = CouplingGraph(2)
    assert generator_loss(0, [col(0.5), col(0.5)], g).item() == pytest.approx(LN2, abs=1e-15)


@pytest.mark.parametrize("config", [LAG, LEAD])
def test_generator_tie_has_no_hinge(config):
    g = CouplingGraph(2, {(0, 1)})
    s = col(0.3, 0.8)
    assert generator_loss(0, [s, s], g, config).item() == generator_loss(0, [s, s], CouplingGraph(2)).item()


def test_generator_lag_penalty_value():
    g = CouplingGraph(2, {(0, 1)})
    # -ln 0.4 + (0.7 - 0.4), evaluated independently
    assert generator_loss(0, [col(0.4), col(0.7)], g, LAG).item() == pytest.approx(1.216290731874155,
                                                                                   abs=1e-15)
    assert generator_loss(0, [col(0.4), col(0.7)], g, LEAD).item() == pytest.approx(-math.log(0.4))


def test_generator_index_checked():
    with pytest.raises(IndexError):
        generator_loss(2, [col(0.5), col(0.5)], CouplingGraph(2))


@pytest.mark.parametrize("a, b, out", [(0.7, 0.4, 0.3), (0.4, 0.7, 0.0), (0.55, 0.55, 0.0)])
def test_hinge_values(a, b, out):
    assert hinge(Tensor(a), Tensor(b)).item() == pytest.approx(out, abs=1e-15)


def test_hinge_tie_subgradient():
    a = Tensor(0.5, requires_grad=True)
    with dc.Tape():
        loss = dc.mean(hinge(a, Tensor(0.5)))
    dc.backward(loss)
    assert a.grad[0, 0] == 0.0


scores = st.lists(st.floats(0.01, 0.99), min_size=1, max_size=6)


@settings(max_examples=100, deadline=None)
@given(a=scores, b=scores, conv=st.sampled_from(["lag_penalty", "lead_penalty"]))
def test_hinge_nonnegative(a, b, conv):
    n = min(len(a), len(b))
    da, db = col(*a[:n]), col(*b[:n])
    g = CouplingGraph(2, {(0, 1)})
    coupled = generator_loss(0, [da, db], g, LossConfig(hinge_convention=conv)).item()
    base = generator_loss(0, [da, db], CouplingGraph(2)).item()
    assert coupled >= base


@settings(max_examples=100, deadline=None)
@given(a=scores, b=scores)
def test_convention_duality(a, b):
    n = min(len(a), len(b))
    di, dj = col(*a[:n]), col(*b[:n])
    assert coupling_term(di, dj, "lag_penalty").item() == coupling_term(dj, di, "lead_penalty").item()


def test_inactive_hinge_gradient_is_bitwise_base():
    # generator 0 leads everywhere, so its lag hinge is inactive on the whole batch
    rng = np.random.default_rng(0)
    own_vals = rng.uniform(0.6, 0.9, size=(8, 1))
    other = Tensor(rng.uniform(0.1, 0.5, size=(8, 1)))

    def grad(graph):
        own = Tensor(own_vals, requires_grad=True)
        with dc.Tape():
            loss = generator_loss(0, [own, other], graph, LAG)
        dc.backward(loss)
        return loss.item(), own.grad

    l1, g1 = grad(CouplingGraph(2, {(0, 1)}))
    l0, g0 = grad(CouplingGraph(2))
    assert l1 == l0
    assert np.array_equal(g1, g0)


def test_lag_hinge_gradient_pushes_same_way_as_base():
    own = Tensor([[0.3]], requires_grad=True)
    with dc.Tape():
        base = generator_loss(0, [own, col(0.8)], CouplingGraph(2))
    dc.backward(base)
    base_grad = own.grad[0, 0]

    own2 = Tensor([[0.3]], requires_grad=True)
    with dc.Tape():
        h = coupling_term(own2, col(0.8), "lag_penalty")
    dc.backward(h)
    assert np.sign(own2.grad[0, 0]) == np.sign(base_grad) == -1.0


def test_lead_hinge_gradient_opposes_base():
    own = Tensor([[0.8]], requires_grad=True)
    with dc.Tape():
        h = coupling_term(own, col(0.3), "lead_penalty")
    dc.backward(h)
    assert own.grad[0, 0] > 0


def test_opponent_receives_no_gradient():
    own = Tensor([[0.3], [0.4]], requires_grad=True)
    other = Tensor([[0.8], [0.9]], requires_grad=True)
    with dc.Tape():
        loss = generator_loss(0, [own, other], CouplingGraph(2, {(0, 1)}), LAG)
    dc.backward(loss)
    assert not other.grad.any()


def test_single_generator_reduces_to_classic_gan():
    real, fake = col(0.8, 0.6), col(0.3, 0.1)
    expected = -np.mean(np.log([0.8, 0.6])) - np.mean(np.log([0.7, 0.9]))
    assert discriminator_loss(real, [fake]).item() == pytest.approx(expected, abs=1e-15)
    assert generator_loss(0, [fake], CouplingGraph(1)).item() == pytest.approx(
        -np.mean(np.log([0.3, 0.1])), abs=1e-15)
