"""Benchmark objectives with analytically known critical structure.

Every entry lists its critical points (or one-parameter families), their
classification, and the Hessian spectrum there, so that trajectory
limits can be matched and saddle hits counted.  A strict saddle is a
critical point whose Hessian has at least one strictly negative
eigenvalue; saddle_line's saddles are non-isolated and double_well's
gradient is not globally Lipschitz, which the avoidance theory must
tolerate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .optimizers import Objective, SphereObjective

MIN = "min"
STRICT_SADDLE = "strict_saddle"
MAX = "max"
DEGENERATE = "degenerate"


@dataclass(frozen=True)
class CriticalPoint:
    point: np.ndarray
    classification: str
    eigenvalues: tuple  # Hessian spectrum, descending

    def distance(self, x: np.ndarray) -> np.ndarray:
        return np.linalg.norm(np.asarray(x) - self.point, axis=-1)


@dataclass(frozen=True)
class CriticalFamily:
    """A parametrized curve of critical points t -> point(t)."""

    sample: Callable[[np.ndarray], np.ndarray]
    distance_fn: Callable[[np.ndarray], np.ndarray]
    classification: str
    eigenvalues: tuple
    t_range: tuple = (-10.0, 10.0)

    def distance(self, x: np.ndarray) -> np.ndarray:
        return self.distance_fn(np.asarray(x))


CriticalSet = Union[CriticalPoint, CriticalFamily]


@dataclass(frozen=True)
class CataloguedObjective:
    key: str
    objective: Union[Objective, SphereObjective]
    critical_points: tuple

    @property
    def is_sphere(self) -> bool:
        return isinstance(self.objective, SphereObjective)

    @property
    def dim(self) -> int:
        return self.objective.dim

    def gradient_norm(self, x: np.ndarray) -> np.ndarray:
        """Euclidean gradient norm; Riemannian for sphere objectives."""
        if self.is_sphere:
            g = self.objective.riemannian_grad(x)
        else:
            g = self.objective.grad(x)
        return np.linalg.norm(np.asarray(g), axis=-1)

    def nearest_critical(self, x: np.ndarray):
        """(entry, distance) of the closest catalogued critical set."""
        best, best_d = None, np.inf
        for entry in self.critical_points:
            d = float(entry.distance(x))
            if d < best_d:
                best, best_d = entry, d
        return best, best_d


def _quad_1d() -> CataloguedObjective:
    def f(x):
        x = np.asarray(x, dtype=float)
        return 0.5 * x[..., 0] ** 2

    def grad(x):
        return np.asarray(x, dtype=float).copy()

    def hess(x):
        x = np.asarray(x, dtype=float)
        return np.ones(x.shape[:-1] + (1, 1))

    obj = Objective(f, grad, hess, dim=1, lipschitz_L=1.0, label="quad_1d")
    return CataloguedObjective(
        "quad_1d", obj, (CriticalPoint(np.zeros(1), MIN, (1.0,)),)
    )


def _quad_saddle() -> CataloguedObjective:
    H = np.diag([1.0, -1.0])

    def f(x):
        x = np.asarray(x, dtype=float)
        return 0.5 * (x[..., 0] ** 2 - x[..., 1] ** 2)

    def grad(x):
        x = np.asarray(x, dtype=float)
        return np.stack([x[..., 0], -x[..., 1]], axis=-1)

    def hess(x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(H, x.shape[:-1] + (2, 2))

    obj = Objective(f, grad, hess, dim=2, lipschitz_L=1.0, label="quad_saddle")
    saddle = CriticalPoint(np.zeros(2), STRICT_SADDLE, (1.0, -1.0))
    return CataloguedObjective("quad_saddle", obj, (saddle,))


def _double_well() -> CataloguedObjective:
    def f(x):
        x = np.asarray(x, dtype=float)
        return 0.25 * (x[..., 0] ** 2 - 1.0) ** 2 + 0.5 * x[..., 1] ** 2

    def grad(x):
        x = np.asarray(x, dtype=float)
        return np.stack([x[..., 0] ** 3 - x[..., 0], x[..., 1]], axis=-1)

    def hess(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape[:-1] + (2, 2))
        out[..., 0, 0] = 3.0 * x[..., 0] ** 2 - 1.0
        out[..., 1, 1] = 1.0
        return out

    # gradient is cubic, so not globally Lipschitz; L = max(3*9 - 1, 1)
    # is a declared surrogate on the test box [-3, 3]^2
    obj = Objective(f, grad, hess, dim=2, lipschitz_L=26.0, box=3.0, label="double_well")
    points = (
        CriticalPoint(np.array([1.0, 0.0]), MIN, (2.0, 1.0)),
        CriticalPoint(np.array([-1.0, 0.0]), MIN, (2.0, 1.0)),
        CriticalPoint(np.zeros(2), STRICT_SADDLE, (1.0, -1.0)),
    )
    return CataloguedObjective("double_well", obj, points)


def _saddle_line() -> CataloguedObjective:
    def f(x):
        x = np.asarray(x, dtype=float)
        return 0.5 * (x[..., 0] ** 2 - x[..., 1] ** 2)

    def grad(x):
        x = np.asarray(x, dtype=float)
        return np.stack(
            [x[..., 0], -x[..., 1], np.zeros_like(x[..., 2])], axis=-1
        )

    H = np.diag([1.0, -1.0, 0.0])

    def hess(x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(H, x.shape[:-1] + (3, 3))

    obj = Objective(f, grad, hess, dim=3, lipschitz_L=1.0, label="saddle_line")
    family = CriticalFamily(
        sample=lambda t: np.stack(
            [np.zeros_like(t), np.zeros_like(t), np.asarray(t, dtype=float)], axis=-1
        ),
        distance_fn=lambda x: np.linalg.norm(np.asarray(x)[..., :2], axis=-1),
        classification=STRICT_SADDLE,
        eigenvalues=(1.0, 0.0, -1.0),
    )
    return CataloguedObjective("saddle_line", obj, (family,))


RAYLEIGH_DIAG = np.array([1.0, 2.0, 3.0])


def _rayleigh_sphere() -> CataloguedObjective:
    D = np.diag(RAYLEIGH_DIAG)

    def f(x):
        x = np.asarray(x, dtype=float)
        return 0.5 * np.sum(x * (x @ D.T), axis=-1)

    def grad(x):
        return np.asarray(x, dtype=float) @ D.T

    def hess(x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(D, x.shape[:-1] + (3, 3))

    ambient = Objective(f, grad, hess, dim=3, lipschitz_L=3.0, label="rayleigh_sphere")
    obj = SphereObjective(ambient)
    # Riemannian Hessian spectrum at eigenvector e_j is {h_i - h_j : i != j}
    points = []
    classes = {0: MIN, 1: STRICT_SADDLE, 2: MAX}
    for j in range(3):
        eigs = tuple(
            sorted((RAYLEIGH_DIAG[i] - RAYLEIGH_DIAG[j] for i in range(3) if i != j),
                   reverse=True)
        )
        for sign in (1.0, -1.0):
            e = np.zeros(3)
            e[j] = sign
            points.append(CriticalPoint(e, classes[j], eigs))
    return CataloguedObjective("rayleigh_sphere", obj, tuple(points))


_BUILDERS = {
    "quad_saddle": _quad_saddle,
    "double_well": _double_well,
    "saddle_line": _saddle_line,
    "rayleigh_sphere": _rayleigh_sphere,
    "quad_1d": _quad_1d,
}

KEYS = tuple(_BUILDERS)


def catalogue() -> list:
    """All benchmark objectives, in registry order."""
    return [_BUILDERS[k]() for k in KEYS]


def get(key: str) -> CataloguedObjective:
    if key not in _BUILDERS:
        raise KeyError(f"unknown objective {key!r}; have {sorted(_BUILDERS)}")
    return _BUILDERS[key]()
