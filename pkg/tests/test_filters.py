from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from finhmc import filters as fl
from finhmc import kronlab as kl
from finhmc import models as md
from finhmc.models import HmcModel, SigmaPModel, SigmaSModel
from support import all_histories, brute_posterior, hmc_models, model_grid

F = Fraction
G2 = kl.matrix([[F(3, 4), F(1, 4)], [F(1, 4), F(3, 4)]])
HALF = [F(1, 2), F(1, 2)]


def test_sigma_p_init_hand_bayes():
    model = HmcModel(kl.eye(2), G2, HALF)
    st0 = fl.sigma_p_init(md.hmc_to_sigma_p(model), 0)
    assert list(st0.x_filt) == [F(3, 4), F(1, 4)]
    assert st0.lik_inc == F(1, 2)


def test_sigma_p_init_trivial_and_impossible():
    one = SigmaPModel(([[1]],), [1])
    assert list(fl.sigma_p_init(one, 0).x_filt) == [1]
    sp = SigmaPModel((kl.eye(2), kl.zeros((2, 2))), [F(1, 2), F(1, 2), 0, 0])
    with pytest.raises(fl.ImpossibleObservation, match="t=0"):
        fl.sigma_p_init(sp, 1)


def test_hmc_first_step_matches_sigma_p_init():
    model = HmcModel(kl.matrix([[F(1, 2), F(1, 4)], [F(1, 2), F(3, 4)]]), G2, HALF)
    st0 = fl.hmc_filter_step(model, model.p0, 0, t=0)
    assert list(st0.x_filt) == [F(3, 4), F(1, 4)]


def test_sigma_p_single_output_is_propagation():
    A = kl.matrix([[F(1, 3), F(1, 2)], [F(2, 3), F(1, 2)]])
    sp = SigmaPModel((A,), HALF)
    st0 = fl.sigma_p_init(sp, 0)
    st1 = fl.sigma_p_step(sp, st0, 0)
    assert np.array_equal(st1.x_filt, A @ st0.x_filt)
    assert st1.lik_inc == 1


def test_perfect_observation():
    A = kl.matrix([[F(1, 3), F(1, 2)], [F(2, 3), F(1, 2)]])
    model = HmcModel(A, kl.eye(2), HALF)
    sp = md.hmc_to_sigma_p(model)
    prev = fl.sigma_p_init(sp, 0)
    for y in (1, 0, 1):
        prev = fl.sigma_p_step(sp, prev, y)
        assert list(prev.x_filt) == list(kl.basis(y, 2))


def test_sigma_s_predict_identity():
    ss = md.hmc_to_sigma_s(HmcModel(kl.eye(2), kl.eye(2), HALF))
    assert list(fl.sigma_s_predict_step(ss, kl.as_exact(HALF), 1)) == [0, 1]
    one = SigmaSModel(([[F(1, 4)]], [[F(3, 4)]]), [1])
    assert list(fl.sigma_s_predict_step(one, kl.as_exact([1]), 1)) == [1]


def test_sigma_s_filter_cases():
    x = kl.as_exact([F(3, 4), F(1, 4)])
    assert list(fl.sigma_s_filter(G2, x, 1)) == [F(1, 2), F(1, 2)]
    assert np.array_equal(fl.sigma_s_filter(kl.matrix([[1, 1]]), x, 0), x)
    assert list(fl.sigma_s_filter(kl.eye(2), x, 1)) == [0, 1]


def test_hmc_step_uniform_mixing():
    A = kl.matrix([[F(1, 3)] * 3] * 3)
    G = kl.matrix([[1, 0, F(1, 2)], [0, 1, F(1, 2)]])
    model = HmcModel(A, G, [F(1, 3)] * 3)
    for y in (0, 1):
        st_ = fl.hmc_filter_step(model, kl.as_exact([F(1, 2), F(1, 4), F(1, 4)]), y)
        assert list(st_.x_pred) == [F(1, 3)] * 3


def test_g_map_cases():
    assert fl.g_map(kl.matrix([[1]]), kl.as_exact([1])).tolist() == [[1]]
    G = kl.matrix([[1, 1, 0], [0, 0, 1]])
    x = kl.as_exact([F(1, 2), F(1, 3), F(1, 6)])
    assert np.array_equal(G @ fl.g_map(G, x), kl.eye(2))
    with pytest.raises(fl.SingularOutputMass):
        fl.g_map(G, kl.as_exact([F(1, 2), F(1, 2), 0]))


def test_ratio_form_agrees_with_diag_form():
    for model in model_grid(8):
        sp = md.hmc_to_sigma_p(model)
        prev = fl.sigma_p_init(sp, 0) if model.G[0] @ model.p0 else fl.sigma_p_init(sp, 1)
        for y in range(model.m):
            try:
                new = fl.sigma_p_step(sp, prev, y)
            except fl.ImpossibleObservation:
                continue
            assert np.array_equal(new.x_filt, fl.sigma_p_step_ratio(sp, prev.x_filt, y))


# -- runs -----------------------------------------------------------------------

def test_single_output_run_is_a_powers():
    A = kl.matrix([[F(1, 3), F(1, 2)], [F(2, 3), F(1, 2)]])
    model = HmcModel(A, kl.matrix([[1, 1]]), [F(1, 4), F(3, 4)])
    run = fl.run_filter(model, [0] * 5)
    x = model.p0
    for st_ in run:
        assert np.array_equal(st_.x_filt, x)
        x = A @ x
    assert run.likelihood == 1


def test_impossible_observation_names_t():
    model = HmcModel(kl.eye(2), kl.eye(2), [1, 0])
    with pytest.raises(fl.ImpossibleObservation, match="t=2") as exc:
        fl.run_filter(model, [0, 0, 1, 0])
    assert exc.value.t == 2
    for route in ("sigma-p", "sigma-s"):
        with pytest.raises(fl.ImpossibleObservation, match="t=2"):
            fl.run_filter(model, [0, 0, 1, 0], route=route)


def test_uniform_reset_policy():
    model = HmcModel(kl.eye(2), kl.eye(2), [1, 0])
    run = fl.run_filter(model, [0, 1, 1], on_impossible="uniform-reset")
    assert run[1].reset and run[1].lik_inc == 0
    assert list(run[1].x_filt) == HALF
    assert list(run[2].x_filt) == [0, 1] and not run[2].reset
    assert run.loglik == -np.inf and run.likelihood == 0


def test_argument_validation():
    model = model_grid(1)[0]
    with pytest.raises(ValueError):
        fl.run_filter(model, [])
    with pytest.raises(IndexError):
        fl.run_filter(model, [0, 5])
    with pytest.raises(ValueError):
        fl.run_filter(model, [0], mode="approx")
    with pytest.raises(ValueError):
        fl.run_filter(md.hmc_to_sigma_p(model), [0], route="sigma-s")


def test_sigma_models_run_natively():
    model = model_grid(1)[0]
    ys = [0, 1, 1, 0]
    ref = fl.run_filter(model, ys)
    assert list(fl.run_filter(md.hmc_to_sigma_p(model), ys)) == list(ref)
    assert list(fl.run_filter(md.hmc_to_sigma_s(model), ys)) == list(ref)


@pytest.mark.parametrize("model", model_grid(8), ids=lambda m: f"n{m.n}m{m.m}")
def test_filter_matches_brute_force_bayes(model):
    T = 4
    for ys in all_histories(model.m, T):
        post, prob = brute_posterior(model, ys)
        if prob == 0:
            with pytest.raises(fl.ImpossibleObservation):
                fl.run_filter(model, ys)
            continue
        run = fl.run_filter(model, ys)
        assert list(run[-1].x_filt) == post
        pred, _ = brute_posterior(model, ys, predictor=True)
        assert list(run[-1].x_pred) == pred
        assert run.likelihood == prob


@settings(max_examples=40, deadline=None)
@given(hmc_models(), st.lists(st.integers(0, 2), min_size=1, max_size=5))
def test_routes_agree_exactly(model, ys):
    ys = [y % model.m for y in ys]
    _, prob = brute_posterior(model, ys)
    assume(prob > 0)
    runs = [fl.run_filter(model, ys, route=r) for r in ("native", "sigma-p", "sigma-s")]
    assert list(runs[0]) == list(runs[1]) == list(runs[2])
    for st_ in runs[0]:
        assert np.array_equal(st_.x_pred, model.A @ st_.x_filt)
        assert sum(st_.x_filt) == 1


@settings(max_examples=25, deadline=None)
@given(hmc_models(allow_zero=False), st.lists(st.integers(0, 2), min_size=1, max_size=8))
def test_float_mode_tracks_exact(model, ys):
    ys = [y % model.m for y in ys]
    ex = fl.run_filter(model, ys)
    fx = fl.run_filter(model, ys, mode="float")
    for a, b in zip(ex, fx):
        assert np.allclose(np.asarray(a.x_filt, float), b.x_filt, atol=1e-12)
        assert abs(a.loglik_inc - b.loglik_inc) < 1e-9
