import numpy as np
import pytest

from saddlescope.optimizers import tangent_basis
from saddlescope.testfns import (
    KEYS,
    RAYLEIGH_DIAG,
    STRICT_SADDLE,
    CataloguedObjective,
    catalogue,
    get,
)


def fd_gradient(f, x, h=1e-6):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = h
        out[j] = (f(x + e) - f(x - e)) / (2 * h)
    return out


def test_catalogue_keys():
    assert KEYS == (
        "quad_saddle",
        "double_well",
        "saddle_line",
        "rayleigh_sphere",
        "quad_1d",
    )
    assert [c.key for c in catalogue()] == list(KEYS)
    with pytest.raises(KeyError):
        get("rosenbrock")


def test_gradients_vanish_at_critical_points():
    rng = np.random.default_rng(0)
    for entry in catalogue():
        for cp in entry.critical_points:
            if hasattr(cp, "sample"):
                ts = rng.uniform(*cp.t_range, size=100)
                pts = cp.sample(ts)
            else:
                pts = cp.point[None, :]
            norms = entry.gradient_norm(pts)
            assert np.max(norms) <= 1e-10, entry.key


def test_double_well_gradient_at_origin():
    entry = get("double_well")
    np.testing.assert_array_equal(entry.objective.grad(np.zeros(2)), [0.0, 0.0])


def test_saddle_line_gradient_z_independent():
    entry = get("saddle_line")
    np.testing.assert_array_equal(
        entry.objective.grad(np.array([0.0, 0.0, 7.3])), [0.0, 0.0, 0.0]
    )


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(1)
    for entry in catalogue():
        obj = entry.objective.ambient if entry.is_sphere else entry.objective
        for _ in range(5):
            x = rng.uniform(-1.5, 1.5, size=obj.dim)
            fd = fd_gradient(obj.f, x)
            g = np.asarray(obj.grad(x))
            np.testing.assert_allclose(g, fd, rtol=1e-5, atol=1e-7)


def test_hessian_matches_gradient_differences():
    rng = np.random.default_rng(2)
    for entry in catalogue():
        obj = entry.objective.ambient if entry.is_sphere else entry.objective
        for _ in range(5):
            x = rng.uniform(-1.5, 1.5, size=obj.dim)
            H = np.asarray(obj.hess(x))
            h = 1e-6
            for j in range(obj.dim):
                e = np.zeros(obj.dim)
                e[j] = h
                col = (np.asarray(obj.grad(x + e)) - np.asarray(obj.grad(x - e))) / (
                    2 * h
                )
                np.testing.assert_allclose(H[:, j], col, rtol=1e-5, atol=1e-7)


def test_listed_eigenvalues_match_spectra():
    for entry in catalogue():
        for cp in entry.critical_points:
            if hasattr(cp, "sample"):
                point = cp.sample(np.array(0.7))
            else:
                point = cp.point
            if entry.is_sphere:
                # Riemannian Hessian P (H - (x . grad f) I) P on the tangent
                obj = entry.objective
                x = point
                H = np.asarray(obj.ambient.hess(x))
                s = float(x @ np.asarray(obj.ambient.grad(x)))
                Q = tangent_basis(x)
                M = Q.T @ (H - s * np.eye(obj.dim)) @ Q
                eigs = np.sort(np.linalg.eigvalsh(M))[::-1]
            else:
                eigs = np.sort(
                    np.linalg.eigvalsh(np.asarray(entry.objective.hess(point)))
                )[::-1]
            np.testing.assert_allclose(eigs, cp.eigenvalues, atol=1e-8)


def test_rayleigh_saddle_spectrum():
    entry = get("rayleigh_sphere")
    saddles = [
        cp for cp in entry.critical_points if cp.classification == STRICT_SADDLE
    ]
    assert len(saddles) == 2
    for cp in saddles:
        assert cp.eigenvalues == (1.0, -1.0)
        assert abs(cp.point[1]) == 1.0


def test_strict_saddles_numerically_strict():
    for entry in catalogue():
        for cp in entry.critical_points:
            if cp.classification == STRICT_SADDLE:
                assert min(cp.eigenvalues) <= -1e-6


def test_double_well_box_local_lipschitz_bound():
    entry = get("double_well")
    obj = entry.objective
    assert obj.lipschitz_L == 26.0
    rng = np.random.default_rng(3)
    X = rng.uniform(-obj.box, obj.box, size=(2000, 2))
    norms = np.linalg.norm(obj.hess(X), ord=2, axis=(-2, -1))
    assert np.max(norms) <= obj.lipschitz_L


def test_nearest_critical():
    entry = get("double_well")
    cp, d = entry.nearest_critical(np.array([0.99998, 1e-6]))
    assert cp.classification == "min"
    assert d < 1e-3
    entry3 = get("saddle_line")
    fam, d3 = entry3.nearest_critical(np.array([1e-4, -1e-4, 52.0]))
    assert fam.classification == STRICT_SADDLE
    assert d3 == pytest.approx(np.hypot(1e-4, 1e-4))
