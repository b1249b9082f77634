import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fdaclass import fqda
from fdaclass.basis import Projector, make_grid
from fdaclass.errors import DataError
from fdaclass.model import Dataset, PopulationPair, model_preset, sample_dataset
from fdaclass.oracle import BayesRule, q_star


def toy():
    return fqda.fit_scores(np.array([[-1.0], [1.0], [1.0], [3.0]]), np.array([1, 1, 2, 2]))


def test_toy_estimates():
    m = toy()
    assert m.mu_hat1.tolist() == [0.0] and m.mu_hat2.tolist() == [2.0]
    assert m.lam_hat1.tolist() == [1.0] and m.lam_hat2.tolist() == [1.0]
    assert m.d_hat.tolist() == [0.0] and m.beta_hat.tolist() == [2.0]
    assert (m.pi_hat1, m.pi_hat2) == (0.5, 0.5)


def test_toy_discriminant():
    m = toy()
    z = np.linspace(-2, 4, 7)[:, None]
    assert np.allclose(fqda.discriminant(m, z), -4 * (z[:, 0] - 1))
    assert fqda.discriminant(m, np.array([0.0])) == pytest.approx(4.0)
    assert fqda.classify(m, np.array([0.0])) == 1
    assert fqda.classify(m, np.array([2.0])) == 2
    assert fqda.classify(m, np.array([1.0])) == 1  # tie


def test_degenerate_constant_classes():
    scores = np.r_[np.zeros((3, 4)), np.ones((3, 4))]
    labels = np.r_[np.ones(3, int), np.full(3, 2)]
    with pytest.warns(RuntimeWarning):
        m = fqda.fit_scores(scores, labels)
    assert m.floored == (4, 4)
    assert np.all(m.lam_hat1 == fqda.VAR_FLOOR)


def test_too_few_samples_and_bad_labels():
    with pytest.raises(DataError):
        fqda.fit_scores(np.zeros((3, 1)), np.array([1, 2, 2]))
    with pytest.raises(DataError):
        fqda.fit_scores(np.zeros((4, 1)), np.array([1, 1, 3, 3]))


def test_empty_test_set():
    with pytest.raises(DataError):
        fqda.risk(toy(), np.zeros((0, 1)), np.zeros(0, int))


def test_plugin_equals_oracle():
    for k in (1, 2, 3, 4):
        pop = model_preset(k)
        z = np.random.default_rng(k).normal(size=(1000, pop.j_model)) * 2
        m = fqda.QdaModel.from_population(pop)
        assert np.max(np.abs(fqda.discriminant(m, z) - q_star(BayesRule(pop), z))) < 1e-12


def test_consistency_model1():
    pop = model_preset(1)
    d = sample_dataset(pop, 10_000, 10_000, seed=2)
    m = fqda.fit(d, 3)
    se = np.sqrt(pop.lambda1 / 10_000)
    assert np.all(np.abs(m.mu_hat1 - pop.mu1) < 4 * se)
    small = fqda.fit(sample_dataset(pop, 100, 100, seed=2), 3)
    assert np.abs(m.lam_hat2 - pop.lambda2).max() < np.abs(small.lam_hat2 - pop.lambda2).max() + 0.05


def test_label_swap_negates():
    d = sample_dataset(model_preset(2), 40, 60, seed=1)
    m = fqda.fit(d, 3)
    swapped = fqda.fit_scores(d.scores, 3 - d.labels, 3)
    z = np.random.default_rng(0).normal(size=(50, 3)) * 5
    assert np.allclose(fqda.discriminant(swapped, z), -fqda.discriminant(m, z), atol=1e-9)


def test_theory_j():
    full = fqda.JSelection("theory-full", nu2=1.0)
    assert fqda.select_j(full, 100) == 5
    sampled = fqda.JSelection("theory-sampled", nu1=1.0, nu2=1.0)
    assert fqda.select_j(sampled, 100, m=10) == 3
    assert fqda.select_j(sampled, 100, m=40) == 5
    with pytest.raises(ValueError):
        fqda.select_j(fqda.JSelection("theory-full"), 100)
    with pytest.raises(ValueError):
        fqda.select_j(fqda.JSelection("cv"), 100)


def test_cv_returns_argmin():
    d = sample_dataset(model_preset(1, "tables"), 50, 50, seed=9)
    sel = fqda.JSelection("cv", j_grid=(1, 2, 3))
    j = fqda.select_j(sel, 100, train=(d.scores, d.labels), seed=4)
    errs = fqda.cv_errors(d.scores, d.labels, (1, 2, 3), 5, seed=4)
    assert errs[j - 1] == errs.min()
    assert j == 1 + int(np.argmin(errs))


def test_cv_ties_pick_smallest():
    # every J gives the same predictions: only the first coordinate separates
    rng = np.random.default_rng(0)
    scores = np.c_[np.r_[np.full(20, -5.0), np.full(20, 5.0)] + rng.normal(size=40) * 0.1,
                   rng.normal(size=(40, 2)) * 1e-3]
    labels = np.r_[np.ones(20, int), np.full(20, 2)]
    sel = fqda.JSelection("cv", j_grid=(3, 2, 1))
    assert fqda.select_j(sel, 40, train=(scores, labels), seed=0) == 1


def test_cv_all_folds_skipped():
    scores = np.zeros((5, 1))
    labels = np.array([1, 1, 1, 1, 2])
    with pytest.raises(DataError):
        fqda.cv_errors(scores, labels, (1,), 5, seed=0)


def test_sfqda_needs_uniform_grid_for_inner():
    grid = np.array([0.0, 0.1, 0.5, 0.7, 1.0])
    d = Dataset(np.array([1, 1, 2, 2]), values=np.random.default_rng(0).normal(size=(4, 5)), grid=grid)
    with pytest.raises(DataError):
        fqda.fit(d, 2, "sFQDA")
    m = fqda.fit(d, 2, "sFQDA", Projector(tuple(grid), 2, "fourier", "lstsq"))
    assert m.j_used == 2


def test_save_load_roundtrip(tmp_path):
    d = sample_dataset(model_preset(1), 30, 30, grid_m=20, seed=0, grid="closed")
    m = fqda.fit(d, 4, "sFQDA")
    path = tmp_path / "m.json"
    fqda.save_model(m, path)
    back = fqda.load_model(path)
    z = fqda.scores_for(back, d)
    assert np.array_equal(fqda.discriminant(back, z), fqda.discriminant(m, fqda.scores_for(m, d)))


def test_sfqda_approaches_fqda_on_fourier_population():
    pop = PopulationPair(0.5, 0.5, [0.0, 1.0, -1.0, 0.5], [0.5, 0.0, -0.5, 1.0],
                         [1.0, 0.5, 0.3, 0.2], [1.5, 0.4, 0.5, 0.1])
    train = sample_dataset(pop, 200, 200, grid_m=512, seed=1)
    test = sample_dataset(pop, 2000, 2000, grid_m=512, seed=2)
    full = fqda.fit(train, 4)
    samp = fqda.fit(train, 4, "sFQDA")
    r_full, se_full = fqda.risk(full, test.scores, test.labels)
    r_samp, se_samp = fqda.risk(samp, fqda.scores_for(samp, test), test.labels)
    assert abs(r_full - r_samp) < 2 * math.hypot(se_full, se_samp)


def test_monotone_in_m():
    pop = model_preset(2, "tables")
    means, ses = [], []
    for M in (10, 30, 50):
        errs = []
        for rep in range(50):
            tr = sample_dataset(pop, 100, 100, grid_m=M, seed=1000 + rep, grid="closed")
            te = sample_dataset(pop, 250, 250, grid_m=M, seed=5000 + rep, grid="closed")
            proj = fqda.default_projector(tr, min(M, 20))
            j = fqda.select_j(fqda.JSelection(), 200, M, (proj(tr.values), tr.labels), seed=rep)
            m = fqda.fit(tr, j, "sFQDA")
            errs.append(fqda.risk(m, fqda.scores_for(m, te), te.labels)[0])
        means.append(np.mean(errs))
        ses.append(np.std(errs, ddof=1) / np.sqrt(len(errs)))
    for a, b, s in zip(means, means[1:], ses[1:]):
        assert b <= a + s


@settings(max_examples=30, deadline=None)
@given(c=st.floats(0.1, 10), seed=st.integers(0, 1000))
def test_scale_invariance(c, seed):
    d = sample_dataset(model_preset(1), 30, 30, seed=seed)
    m = fqda.fit_scores(d.scores, d.labels)
    mc = fqda.fit_scores(c * d.scores, d.labels)
    z = np.random.default_rng(seed).normal(size=(20, 3)) * 2 + model_preset(1).mu1
    q, qc = fqda.discriminant(m, z), fqda.discriminant(mc, c * z)
    mask = np.abs(q) > 1e-8
    assert np.array_equal(fqda.classify(m, z)[mask], fqda.classify(mc, c * z)[mask])
    assert np.allclose(q, qc, atol=1e-7)


@settings(max_examples=30, deadline=None)
@given(n=st.integers(3, 10_000), nu2=st.floats(0.2, 5))
def test_theory_j_clamped(n, nu2):
    j = fqda.select_j(fqda.JSelection("theory-full", nu2=nu2, j_max=20), n)
    assert 1 <= j <= 20


def test_grid_helpers_agree():
    assert len(make_grid(10, "closed")) == 10
