import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fdaclass.basis import (
    ORTHO_TOL,
    RECOVERY_TOL,
    Projector,
    build_design,
    design_on_grid,
    evaluate_basis,
    fourier_eval,
    is_uniform_grid,
    make_grid,
    project_scores,
)
from fdaclass.errors import DataError
from fdaclass.model import model_preset, sample_dataset


def test_fourier_values():
    assert fourier_eval(1, 0.37) == 1.0
    assert fourier_eval(2, 0.0) == pytest.approx(math.sqrt(2))
    assert fourier_eval(3, 0.25) == pytest.approx(math.sqrt(2))
    assert fourier_eval(4, 0.125) == pytest.approx(math.sqrt(2) * math.cos(math.pi / 2), abs=1e-15)


def test_fourier_rejects_bad_index():
    with pytest.raises(ValueError):
        fourier_eval(0, 0.3)
    with pytest.raises(ValueError):
        fourier_eval(1.5, 0.3)


def test_fourier_vectorized_matches_scalar():
    t = np.linspace(0, 1, 7)
    for j in range(1, 8):
        vec = fourier_eval(j, t)
        assert np.allclose(vec, [fourier_eval(j, float(x)) for x in t])


def test_design_orthogonality_small():
    B = build_design(8, 5).entries
    assert np.max(np.abs(B.T @ B - 8 * np.eye(5))) < ORTHO_TOL


def test_design_trivial_and_too_wide():
    assert build_design(1, 1).entries.tolist() == [[1.0]]
    with pytest.raises(ValueError):
        build_design(4, 5)


def test_design_deterministic():
    a, b = build_design(33, 9), build_design(33, 9)
    assert np.array_equal(a.entries, b.entries)
    assert a.j_count == 9 and a.m_count == 33


def test_grid_conventions():
    assert np.allclose(make_grid(4), [0, 0.25, 0.5, 0.75])
    assert np.allclose(make_grid(5, "closed"), [0, 0.25, 0.5, 0.75, 1.0])
    with pytest.raises(ValueError):
        make_grid(4, "chebyshev")


def test_closed_grid_is_not_orthogonal():
    # documents why the inner-product projection is approximate on the closed grid
    B = build_design(50, 10, grid="closed").entries
    assert np.max(np.abs(B.T @ B - 50 * np.eye(10))) > 0.1


def test_zero_curve_projects_to_zero():
    d = build_design(16, 5)
    assert np.all(project_scores(np.zeros(16), d, "inner") == 0)
    assert np.allclose(project_scores(np.zeros(16), d, "lstsq"), 0)


def test_projection_dimension_mismatch():
    with pytest.raises(DataError):
        project_scores(np.zeros(15), build_design(16, 3))


def test_model_curve_inner_vs_lstsq_oracle():
    # non-orthonormal preset basis: the least-squares fit recovers the exact
    # scores; the inner-product formula is off by the basis' non-orthogonality
    pop = model_preset(1)
    data = sample_dataset(pop, 3, 3, grid_m=50, seed=1)
    d = design_on_grid(data.grid, 3, pop.basis)
    exact = project_scores(data.values, d, "lstsq")
    assert np.allclose(exact, data.scores, atol=1e-9)
    gram = d.entries.T @ d.entries / 50
    approx = project_scores(data.values, d, "inner")
    assert np.allclose(approx, data.scores @ gram.T, atol=1e-9)


def test_custom_basis_evaluation():
    t = np.array([0.0, 0.5, 1.0])
    B = evaluate_basis(("log(t+2)", "t", "t^3"), 3, t)
    assert np.allclose(B[:, 0], np.log(t + 2))
    assert np.allclose(B[:, 2], t**3)
    with pytest.raises(ValueError):
        evaluate_basis(("t", "bogus"), 2, t)
    with pytest.raises(ValueError):
        evaluate_basis(("t",), 2, t)


def test_uniform_grid_detection():
    assert is_uniform_grid(make_grid(10, "closed"))
    assert not is_uniform_grid([0.0, 0.1, 0.5, 0.6])


def test_projector_roundtrip():
    p = Projector(tuple(make_grid(12)), 4, "fourier", "inner")
    q = Projector.from_dict(p.to_dict())
    assert q == p
    x = np.random.default_rng(0).normal(size=(3, 12))
    assert np.array_equal(p(x), q(x))


@settings(max_examples=60, deadline=None)
@given(M=st.integers(4, 80), data=st.data())
def test_fourier_recovery_property(M, data):
    J = data.draw(st.integers(1, max(1, (M - 1) // 2)))
    c = data.draw(arrays(float, J, elements=st.floats(-50, 50)))
    d = build_design(M, J)
    x = d.entries @ c
    assert np.max(np.abs(project_scores(x, d, "inner") - c)) < RECOVERY_TOL * max(1.0, np.abs(c).max())


@settings(max_examples=40, deadline=None)
@given(a=st.floats(-5, 5), b=st.floats(-5, 5), seed=st.integers(0, 2**16))
def test_projection_linearity(a, b, seed):
    rng = np.random.default_rng(seed)
    d = build_design(20, 6)
    x, y = rng.normal(size=20), rng.normal(size=20)
    for mode in ("inner", "lstsq"):
        lhs = project_scores(a * x + b * y, d, mode)
        rhs = a * project_scores(x, d, mode) + b * project_scores(y, d, mode)
        assert np.allclose(lhs, rhs, atol=1e-10)
