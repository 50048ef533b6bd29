from collections import Counter
from fractions import Fraction

import numpy as np
import pytest
from scipy import stats

from finhmc import finprob as fp
from finhmc import kronlab as kl
from finhmc import models as md
from finhmc import simulate as sm
from finhmc.models import HmcModel, SigmaPModel, SigmaSModel
from support import model_grid

F = Fraction
DYADIC = HmcModel(
    kl.matrix([[F(3, 4), F(1, 4)], [F(1, 4), F(3, 4)]]),
    kl.matrix([[F(7, 8), F(1, 8)], [F(1, 8), F(7, 8)]]),
    [F(1, 2), F(1, 2)],
)


def test_rng_streams_reproducible():
    a = sm.RngState(11).generator().random(4)
    b = sm.RngState(11).generator().random(4)
    c = sm.RngState(11, stream=1).generator().random(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    with pytest.raises(ValueError):
        sm.RngState(1, algorithm="mt19937").generator()


def test_single_state_single_output():
    one = HmcModel([[1]], [[1]], [1])
    for seed in range(3):
        s = sm.sample_hmc(one, 5, sm.RngState(seed))
        assert s.x == (0,) * 6 and s.y == (0,) * 6


def test_deterministic_g_reads_state():
    G = kl.matrix([[1, 0, 1], [0, 1, 0]])
    A = kl.matrix([[F(1, 3)] * 3] * 3)
    model = HmcModel(A, G, [F(1, 3)] * 3)
    s = sm.sample_hmc(model, 200, sm.RngState(5))
    assert all(y == (0 if x in (0, 2) else 1) for x, y in zip(s.x, s.y))


def test_channel_is_full_random_map():
    s = sm.sample_hmc(model_grid(1)[0], 10, sm.RngState(2), record_channel=True)
    assert len(s.channel) == 11
    assert all(s.channel[t].columns[s.x[t]] == s.y[t] for t in range(11))


def test_zero_mass_never_drawn():
    A = kl.matrix([[1, 1, 0], [0, 0, 1], [0, 0, 0]])
    model = HmcModel(A, kl.matrix([[1, 0, 0], [0, 1, 1]]), [1, 0, 0])
    s = sm.sample_hmc(model, 1000, sm.RngState(3))
    assert set(s.x) == {0}


def test_sigma_p_single_output_and_empty_block():
    A = kl.matrix([[F(1, 2), F(1, 3)], [F(1, 2), F(2, 3)]])
    s = sm.sample_sigma_p(SigmaPModel((A,), [F(1, 2), F(1, 2)]), 50, sm.RngState(1))
    assert set(s.y) == {0}
    z = kl.zeros((2, 2))
    s = sm.sample_sigma_p(SigmaPModel((A, z), [0, 0, F(1, 2), F(1, 2)]), 50, sm.RngState(1))
    assert s.y[0] == 1 and set(s.y[1:]) == {0}


def test_sigma_s_lengths_and_empty_block():
    A = kl.matrix([[F(1, 2), F(1, 3)], [F(1, 2), F(2, 3)]])
    s = sm.sample_sigma_s(SigmaSModel((A, kl.zeros((2, 2))), [F(1, 2), F(1, 2)]), 30,
                          sm.RngState(4))
    assert len(s.x) == 31 and len(s.y) == 30
    assert set(s.y) == {0}


def test_horizon_validation():
    with pytest.raises(ValueError):
        sm.sample_hmc(DYADIC, -1, sm.RngState(0))


def test_empirical_kernel_trivial():
    one = HmcModel([[1]], [[1]], [1])
    ek = sm.empirical_kernel([sm.sample_hmc(one, 5, sm.RngState(0))], 1, 1)
    assert ek.matrix.tolist() == [[1.0]]
    with pytest.raises(ValueError):
        sm.empirical_kernel([], 1, 1)


def test_empirical_kernel_deterministic_path():
    model = HmcModel(kl.matrix([[0, 1], [1, 0]]), kl.eye(2), [1, 0])
    ek = sm.empirical_kernel([sm.sample_hmc(model, 9, sm.RngState(0))], 2, 2)
    assert ek.unvisited == (1, 2)
    assert ek.matrix[3, 0] == 1 and ek.matrix[0, 3] == 1
    assert set(np.unique(ek.matrix)) <= {0.0, 1.0}


@pytest.mark.slow
def test_empirical_kernel_matches_q():
    s = sm.sample_hmc(DYADIC, 100_000, sm.RngState(20240611))
    ek = sm.empirical_kernel([s], 2, 2)
    q = np.asarray(md.build_q(DYADIC), float)
    assert np.max(np.abs(ek.matrix - q)) < 0.01


def _path_counts(sampler, model, paths, seed):
    root = sm.RngState(seed)
    return Counter((s.x, s.y) for s in (sampler(model, 3, root.child(k))
                                        for k in range(paths)))


def _gof_pvalue(counts, space, paths):
    law = space.law()
    cats = sorted(law)
    observed = np.array([counts.get(c, 0) for c in cats], float)
    expected = np.array([float(law[c]) * paths for c in cats])
    assert sum(counts.values()) == observed.sum(), "sampled a zero-probability path"
    return stats.chisquare(observed, expected).pvalue


@pytest.mark.slow
def test_sigma_p_and_hmc_sample_the_same_law():
    paths = 100_000
    space = fp.enumerate_hmc(DYADIC, 3)
    hmc = _path_counts(sm.sample_hmc, DYADIC, paths, 1)
    sig = _path_counts(sm.sample_sigma_p, md.hmc_to_sigma_p(DYADIC), paths, 2)
    assert _gof_pvalue(hmc, space, paths) > 0.001
    assert _gof_pvalue(sig, space, paths) > 0.001
    cats = sorted(set(hmc) | set(sig))
    table = np.array([[hmc.get(c, 0) for c in cats], [sig.get(c, 0) for c in cats]])
    assert stats.chi2_contingency(table).pvalue > 0.001


@pytest.mark.slow
def test_sigma_s_samples_the_hmc_law():
    paths = 50_000
    ss = md.hmc_to_sigma_s(DYADIC)
    space = fp.enumerate_sigma_s(ss, 3)
    counts = _path_counts(sm.sample_sigma_s, ss, paths, 3)
    assert _gof_pvalue(counts, space, paths) > 0.001
