import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from fdaclass.model import (
    CurveSample,
    Dataset,
    ParamSpaceSpec,
    PopulationPair,
    check_membership,
    hyperrectangle_norm,
    model_preset,
    sample_dataset,
    sample_labelled,
    separation_diagnostics,
    sobolev_norm,
)


def test_preset_model1_printed():
    p = model_preset(1)
    assert p.mu1.tolist() == [-1, 2, -3]
    assert np.allclose(p.lambda2, [0.9, 0.5, 0.3])
    assert np.allclose(p.lambda1, [0.6, 0.4, 0.2])
    assert np.allclose(p.mu2, [-0.5, 2.5, -2.5])
    assert p.basis == ("log(t+2)", "t", "t^3")
    assert p.pi1 == p.pi2 == 0.5


def test_preset_model4_and_5():
    p4 = model_preset(4)
    assert p4.j_model == 4 and p4.lambda1.tolist() == [4, 3, 2, 1]
    p5 = model_preset(5)
    assert p5.dof2 == (5.0, 3.0, 1.0) and p5.dof1 is None
    assert not p5.is_gaussian


def test_tables_variant():
    p = model_preset(1, "tables")
    assert np.allclose(p.lambda1, np.array([0.6, 0.4, 0.2]) ** 2)
    assert np.allclose(p.mu2, [-0.5, 1.5, -2.5])
    p5 = model_preset(5, "tables")
    assert np.allclose(p5.lambda1, [9, 4, 1]) and np.allclose(p5.lambda2, 1)


def test_unknown_preset():
    with pytest.raises(ValueError):
        model_preset(6)
    with pytest.raises(ValueError):
        model_preset(1, "guess")


def test_population_validation():
    with pytest.raises(ValueError):
        PopulationPair(0.6, 0.6, [0], [1], [1], [1])
    with pytest.raises(ValueError):
        PopulationPair(0.5, 0.5, [0], [1], [0.0], [1])
    with pytest.raises(ValueError):
        PopulationPair(0.5, 0.5, [0, 1], [1], [1], [1])
    p = PopulationPair(0.5, 0.5, [0], [1], [1], [1])
    with pytest.raises(ValueError):
        p.mu1[0] = 3.0


def test_sampling_deterministic():
    p = model_preset(1)
    a = sample_dataset(p, 50, 50, grid_m=50, seed=7)
    b = sample_dataset(p, 50, 50, grid_m=50, seed=7)
    assert np.array_equal(a.values, b.values) and np.array_equal(a.scores, b.scores)
    assert a.n1 == 50 and a.n2 == 50 and a.m_count == 50


def test_class_means_law_of_large_numbers():
    p = model_preset(1)
    d = sample_dataset(p, 10_000, 10, seed=3)
    x = d.scores[d.labels == 1]
    se = x.std(axis=0, ddof=1) / np.sqrt(x.shape[0])
    assert np.all(np.abs(x.mean(axis=0) - p.mu1) < 4 * se)


def test_gaussian_scores_uncorrelated():
    p = model_preset(2)
    d = sample_dataset(p, 20_000, 10, seed=4)
    x = d.scores[d.labels == 1]
    corr = np.corrcoef(x.T)
    off = corr[~np.eye(3, dtype=bool)]
    assert np.all(np.abs(off) < 4 / np.sqrt(x.shape[0]))


def test_model5_class2_heavy_tailed():
    p = model_preset(5)
    d = sample_dataset(p, 10, 10_000, seed=5)
    x3 = d.scores[d.labels == 2][:, 2]
    assert stats.kurtosis(x3) > 10
    assert stats.normaltest(x3).pvalue < 0.01


def test_sample_labelled_counts():
    p = PopulationPair(0.3, 0.7, [0], [1], [1], [1])
    d = sample_labelled(p, 100, seed=0)
    assert d.n1 == 30 and d.n2 == 70


def test_dataset_from_samples_and_subset():
    grid = np.linspace(0, 1, 4)
    samples = [CurveSample(np.arange(4.0), "grid", 1), CurveSample(np.ones(4), "grid", 2)]
    d = Dataset.from_samples(samples, grid)
    assert d.values.shape == (2, 4) and d.labels.tolist() == [1, 2]
    assert d.subset([1]).labels.tolist() == [2]
    assert [s.label for s in d.samples()] == [1, 2]
    with pytest.raises(ValueError):
        Dataset.from_samples([samples[0], CurveSample(np.ones(3), "scores", 1)])
    with pytest.raises(ValueError):
        CurveSample(np.ones(2), "grid", 3)


def test_membership_identical_populations():
    p = PopulationPair(0.5, 0.5, [0.0, 0.0], [0.0, 0.0], [1.0, 1.0], [1.0, 1.0])
    rep = check_membership(p, ParamSpaceSpec(radius=1e-9, nu1=5.0))
    assert rep.conditions["mean_separation"].value == 0
    assert rep.conditions["covariance_separation"].value == 0
    assert separation_diagnostics(p) == (0.0, 0.0)


def test_membership_model1_values():
    rep = check_membership(model_preset(1), ParamSpaceSpec("hyperrectangle", 1.0, 1.0, 1.0))
    # (mu_1j - mu_2j)^2 / lambda_j^(2) = (5/18, 1/2, 5/6); weights j^2
    assert rep.conditions["mean_separation"].value == pytest.approx(max(5 / 18, 0.5 * 4, 5 / 6 * 9))
    assert rep.minimal_radius >= rep.conditions["mean_separation"].value


def test_inclusive_boundary():
    a = np.arange(1, 6, dtype=float) ** -2.0
    assert hyperrectangle_norm(a, 1.0) == pytest.approx(1.0)
    assert sobolev_norm([1.0, 0.25], 2.0) == pytest.approx(2.0)
    p = PopulationPair(0.5, 0.5, [1.0], [0.0], [1.0], [1.0])
    rep = check_membership(p, ParamSpaceSpec(radius=1.0))
    assert rep.conditions["mean_separation"].value == 1.0
    assert rep.conditions["mean_separation"].passed


def test_separation_diagnostics_models():
    mean_sep, _ = separation_diagnostics(model_preset(1))
    assert mean_sep == pytest.approx(5 / 18 + 1 / 2 + 5 / 6)
    _, cov_sep = separation_diagnostics(model_preset(2))
    assert cov_sep == pytest.approx((3 / 4.5 - 1) ** 2 + (2 / 2.5 - 1) ** 2 + (1 / 1.5 - 1) ** 2)


def test_prior_bound():
    p = PopulationPair(0.1, 0.9, [0], [1], [1], [1])
    assert not check_membership(p, ParamSpaceSpec(radius=100.0)).prior_ok


pops = st.builds(
    lambda m1, m2, l1, l2: PopulationPair(0.5, 0.5, m1, m2, l1, l2),
    st.lists(st.floats(-3, 3), min_size=3, max_size=3),
    st.lists(st.floats(-3, 3), min_size=3, max_size=3),
    st.lists(st.floats(0.1, 4), min_size=3, max_size=3),
    st.lists(st.floats(0.1, 4), min_size=3, max_size=3),
)


@settings(max_examples=50, deadline=None)
@given(pop=pops, radius=st.floats(0.01, 100), extra=st.floats(0, 100),
       kind=st.sampled_from(["hyperrectangle", "sobolev"]))
def test_membership_monotone_in_radius(pop, radius, extra, kind):
    small = check_membership(pop, ParamSpaceSpec(kind, radius))
    large = check_membership(pop, ParamSpaceSpec(kind, radius + extra))
    if small.member:
        assert large.member


@settings(max_examples=50, deadline=None)
@given(pop=pops, perm=st.permutations([0, 1, 2]))
def test_separation_permutation_invariant(pop, perm):
    perm = list(perm)
    q = PopulationPair(0.5, 0.5, pop.mu1[perm], pop.mu2[perm], pop.lambda1[perm], pop.lambda2[perm])
    assert np.allclose(separation_diagnostics(pop), separation_diagnostics(q))
