"""Gradient descent, Riemannian GD on the sphere, and the proximal point
method, packaged as non-autonomous dynamical systems driven by a step-size
schedule.

All objective callables are vectorized over leading axes: f maps
(..., d) -> (...), grad maps (..., d) -> (..., d), hess maps
(..., d) -> (..., d, d).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .dynsys import NonAutonomousSystem, OutsideChart, SystemMap
from .phcert import Schedule, StepTooLarge, schedule_sup, step_size


class ZeroDenominator(RuntimeError):
    """A retraction step hit the origin; the iterate is undefined."""


class InnerSolveFailed(RuntimeError):
    """The proximal inner Newton solve did not reach tolerance."""


@dataclass(frozen=True)
class Objective:
    """A C^2 cost with gradient and Hessian callables.

    lipschitz_L, when set, bounds ||hess(x)|| over the declared box (a
    global bound for genuinely L-smooth objectives; a documented
    box-local surrogate otherwise).
    """

    f: Callable[[np.ndarray], np.ndarray]
    grad: Callable[[np.ndarray], np.ndarray]
    hess: Callable[[np.ndarray], np.ndarray]
    dim: int
    lipschitz_L: Optional[float] = None
    box: float = 2.0
    label: str = ""


@dataclass(frozen=True)
class SphereObjective:
    """An ambient objective restricted to the unit sphere S^{d-1}."""

    ambient: Objective

    @property
    def dim(self) -> int:
        return self.ambient.dim

    @property
    def label(self) -> str:
        return self.ambient.label

    def f(self, x: np.ndarray) -> np.ndarray:
        return self.ambient.f(x)

    def riemannian_grad(self, x: np.ndarray) -> np.ndarray:
        """(I - x x^T) grad f(x) for unit-norm x; vectorized."""
        x = np.asarray(x, dtype=float)
        g = np.asarray(self.ambient.grad(x), dtype=float)
        s = np.sum(x * g, axis=-1, keepdims=True)
        return g - s * x

    def retraction(self, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Metric projection R_x(v) = (x + v)/||x + v||."""
        w = np.asarray(x, dtype=float) + np.asarray(v, dtype=float)
        nw = np.linalg.norm(w, axis=-1, keepdims=True)
        if np.any(nw < 1e-12):
            raise ZeroDenominator("retraction step reached the origin")
        return w / nw

    def riemannian_hessian(self, x: np.ndarray) -> np.ndarray:
        """Tangent-coordinate Riemannian Hessian Q^T (H - (x.grad f) I) Q.

        Exact at critical points of the restriction (elsewhere it is the
        projected ambient Hessian, the standard sphere formula); Q is
        the deterministic tangent basis at x.
        """
        from numpy import eye

        x = np.asarray(x, dtype=float)
        Q = tangent_basis(x)
        H = np.asarray(self.ambient.hess(x), dtype=float)
        s = float(x @ np.asarray(self.ambient.grad(x), dtype=float))
        return Q.T @ (H - s * eye(self.dim)) @ Q


# --- small batched linear solves ---------------------------------------------


def solve_small(J: np.ndarray, F: np.ndarray) -> np.ndarray:
    """Solve J x = F batched over leading axes, closed-form for d <= 3.

    The explicit formulas keep the proximal inner loop cheap at desk
    scale and bitwise-reproducible across batch shapes.
    """
    d = J.shape[-1]
    if d == 1:
        return F / J[..., 0, 0][..., None]
    if d == 2:
        a, b = J[..., 0, 0], J[..., 0, 1]
        c, e = J[..., 1, 0], J[..., 1, 1]
        det = a * e - b * c
        x0 = (e * F[..., 0] - b * F[..., 1]) / det
        x1 = (a * F[..., 1] - c * F[..., 0]) / det
        return np.stack([x0, x1], axis=-1)
    if d == 3:
        a, b, c = J[..., 0, 0], J[..., 0, 1], J[..., 0, 2]
        e, f, g = J[..., 1, 0], J[..., 1, 1], J[..., 1, 2]
        h, i, j = J[..., 2, 0], J[..., 2, 1], J[..., 2, 2]
        A = f * j - g * i
        B = -(e * j - g * h)
        C = e * i - f * h
        det = a * A + b * B + c * C
        D = -(b * j - c * i)
        E = a * j - c * h
        Fm = -(a * i - b * h)
        G = b * g - c * f
        H = -(a * g - c * e)
        I2 = a * f - b * e
        x0 = (A * F[..., 0] + D * F[..., 1] + G * F[..., 2]) / det
        x1 = (B * F[..., 0] + E * F[..., 1] + H * F[..., 2]) / det
        x2 = (C * F[..., 0] + Fm * F[..., 1] + I2 * F[..., 2]) / det
        return np.stack([x0, x1, x2], axis=-1)
    return np.linalg.solve(J, F[..., None])[..., 0]


# --- gradient descent --------------------------------------------------------


def gd_system(objective: Objective, schedule: Schedule) -> NonAutonomousSystem:
    """GD maps g_k(x) = x - alpha_k grad f(x) with Jacobian I - alpha_k hess."""

    def map_at(k: int) -> SystemMap:
        alpha = step_size(schedule, k)

        def evaluate(x):
            x = np.asarray(x, dtype=float)
            return x - alpha * np.asarray(objective.grad(x), dtype=float)

        def jacobian(x):
            return np.eye(objective.dim) - alpha * np.asarray(objective.hess(x))

        return SystemMap(evaluate, jacobian, label=f"gd[k={k}, a={alpha:g}]")

    return NonAutonomousSystem(map_at, objective.dim)


# --- Riemannian gradient descent on the sphere -------------------------------


def rgd_system(objective: SphereObjective, schedule: Schedule) -> NonAutonomousSystem:
    """RGD maps g_k(x) = R_x(-alpha_k grad f(x)) on the unit sphere."""

    def map_at(k: int) -> SystemMap:
        alpha = step_size(schedule, k)

        def evaluate(x):
            return objective.retraction(x, -alpha * objective.riemannian_grad(x))

        def jacobian(x):
            # ambient differential of w(x)/||w(x)|| with
            # w = x - alpha (grad f - x (x . grad f))
            x = np.asarray(x, dtype=float)
            g = np.asarray(objective.ambient.grad(x), dtype=float)
            H = np.asarray(objective.ambient.hess(x), dtype=float)
            s = float(x @ g)
            Dw = (
                np.eye(objective.dim)
                - alpha * H
                + alpha * (s * np.eye(objective.dim) + np.outer(x, g + H @ x))
            )
            w = x - alpha * (g - s * x)
            nw = float(np.linalg.norm(w))
            what = w / nw
            return (np.eye(objective.dim) - np.outer(what, what)) @ Dw / nw

        return SystemMap(evaluate, jacobian, label=f"rgd[k={k}, a={alpha:g}]")

    return NonAutonomousSystem(map_at, objective.dim)


# --- proximal point ----------------------------------------------------------


def prox_solve(
    objective: Objective,
    alpha: float,
    X: np.ndarray,
    inner_tol: float,
    max_iter: int = 100,
) -> np.ndarray:
    """Solve z + alpha grad f(z) = x by Newton, warm-started at x.

    The Newton matrix I + alpha hess f(z) is positive definite for
    alpha < 1/L, so the iteration is well posed; residuals are checked
    before each update so exact fixed points return their input bitwise.
    """
    X = np.asarray(X, dtype=float)
    Z = X.copy()
    eye = np.eye(X.shape[-1])
    for _ in range(max_iter + 1):
        F = Z + alpha * np.asarray(objective.grad(Z), dtype=float) - X
        if float(np.max(np.linalg.norm(F, axis=-1), initial=0.0)) <= inner_tol:
            return Z
        J = eye + alpha * np.asarray(objective.hess(Z), dtype=float)
        Z = Z - solve_small(J, F)
    raise InnerSolveFailed(
        f"proximal Newton residual above {inner_tol:g} after {max_iter} steps; "
        "check the declared Lipschitz constant"
    )


def pp_system(
    objective: Objective, schedule: Schedule, inner_tol: float = 1e-12
) -> NonAutonomousSystem:
    """Proximal point maps g_k(x) = argmin_z f(z) + ||z - x||^2 / (2 alpha_k).

    Requires a declared gradient Lipschitz constant and
    sup_k alpha_k < 1/L, which makes every subproblem strongly convex;
    the implicit update solves z + alpha_k grad f(z) = x by Newton.  The
    differential is (I + alpha_k hess f(g_k(x)))^{-1}.
    """
    if objective.lipschitz_L is None:
        raise ValueError("proximal point needs objective.lipschitz_L")
    L = objective.lipschitz_L
    sup = schedule_sup(schedule)
    if sup >= 1.0 / L:
        raise StepTooLarge(f"sup alpha_k = {sup:g} is not below 1/L = {1.0 / L:g}")

    def map_at(k: int) -> SystemMap:
        alpha = step_size(schedule, k)

        def evaluate(x):
            return prox_solve(objective, alpha, x, inner_tol)

        def jacobian(x):
            z = prox_solve(objective, alpha, np.asarray(x, dtype=float), inner_tol)
            return np.linalg.inv(
                np.eye(objective.dim) + alpha * np.asarray(objective.hess(z))
            )

        return SystemMap(evaluate, jacobian, label=f"pp[k={k}, a={alpha:g}]")

    return NonAutonomousSystem(map_at, objective.dim)


def prox_inverse(objective: Objective, alpha: float, x: np.ndarray) -> np.ndarray:
    """The inverse map u_alpha(x) = x + alpha grad f(x) of the proximal update."""
    x = np.asarray(x, dtype=float)
    return x + alpha * np.asarray(objective.grad(x), dtype=float)


# --- tangent-space lifts on the sphere ---------------------------------------

CHART_RADIUS = math.pi / 2  # half the sphere's injectivity radius
FADE_RADIUS = 3 * math.pi / 4


def _smooth_step(u: np.ndarray) -> np.ndarray:
    """C-infinity step: 0 for u <= 0, 1 for u >= 1, exp(-1/t) blend between."""
    u = np.asarray(u, dtype=float)
    lo = u <= 0.0
    hi = u >= 1.0
    mid = ~(lo | hi)
    out = np.where(hi, 1.0, 0.0)
    if np.any(mid):
        um = u[mid]
        a = np.exp(-1.0 / um)
        b = np.exp(-1.0 / (1.0 - um))
        out = out.astype(float)
        out[mid] = a / (a + b)
    return out


def tangent_basis(base: np.ndarray) -> np.ndarray:
    """Deterministic orthonormal basis of the tangent space at base, (d, d-1)."""
    base = np.asarray(base, dtype=float)
    d = base.size
    M = np.concatenate([base[:, None], np.eye(d)], axis=1)
    Q, _ = np.linalg.qr(M)
    return Q[:, 1:d]


def sphere_exp(base: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Riemannian exponential at base for ambient tangent vectors v."""
    v = np.asarray(v, dtype=float)
    theta = np.linalg.norm(v, axis=-1, keepdims=True)
    return np.cos(theta) * base + np.sinc(theta / math.pi) * v


def sphere_log(base: np.ndarray, p: np.ndarray, fade: bool = True) -> np.ndarray:
    """Riemannian logarithm at base, smoothly faded to 0 past CHART_RADIUS.

    Matches the true logarithm for geodesic distance <= pi/2 and drops
    C-infinity smoothly to the zero vector by 3 pi/4, which extends it
    smoothly to the whole sphere.  The angle comes from arctan2, which
    stays fully accurate near the base point where arccos loses half its
    digits.
    """
    p = np.asarray(p, dtype=float)
    c = np.clip(np.sum(p * base, axis=-1, keepdims=True), -1.0, 1.0)
    w = p - c * base
    nw = np.linalg.norm(w, axis=-1, keepdims=True)
    theta = np.arctan2(nw, c)
    scale = np.where(nw > 1e-300, theta / np.maximum(nw, 1e-300), 1.0)
    out = scale * w
    if fade:
        beta = _smooth_step(
            (FADE_RADIUS - theta[..., 0]) / (FADE_RADIUS - CHART_RADIUS)
        )
        out = beta[..., None] * out
    return out


def lift_to_tangent(
    objective: SphereObjective,
    base: np.ndarray,
    system: NonAutonomousSystem,
    fixed_point_tol: float = 1e-10,
) -> NonAutonomousSystem:
    """Conjugate a sphere system into tangent coordinates at a fixed point.

    Returns the system v -> log_base(g_k(exp_base(v))) expressed in a
    (d-1)-dimensional orthonormal tangent basis.  base must be fixed by
    the system.  Iterates whose image leaves the chart (geodesic
    distance beyond pi/2 from base) raise OutsideChart; run_trajectory
    turns that into an undecided classification.
    """
    base = np.asarray(base, dtype=float)
    if abs(np.linalg.norm(base) - 1.0) > 1e-10:
        raise ValueError("base must be a unit vector")
    probe = np.asarray(system.map_at(0).evaluate(base))
    if np.linalg.norm(probe - base) > fixed_point_tol:
        raise ValueError("base is not a fixed point of the system")
    Q = tangent_basis(base)

    def map_at(k: int) -> SystemMap:
        inner = system.map_at(k)

        def evaluate(vc):
            vc = np.asarray(vc, dtype=float)
            vn = np.linalg.norm(vc, axis=-1)
            if np.any(vn > CHART_RADIUS):
                raise OutsideChart("input left the tangent chart")
            p = sphere_exp(base, vc @ Q.T)
            p1 = np.asarray(inner.evaluate(p), dtype=float)
            # distance check via arctan2 (well-conditioned near the base)
            c1 = np.clip(np.sum(p1 * base, axis=-1), -1.0, 1.0)
            s1 = np.linalg.norm(p1 - c1[..., None] * base, axis=-1)
            if np.any(np.arctan2(s1, c1) > CHART_RADIUS + 1e-12):
                raise OutsideChart("iterate left the tangent chart")
            return sphere_log(base, p1) @ Q

        return SystemMap(evaluate, None, label=f"lifted[{inner.label}]")

    return NonAutonomousSystem(map_at, objective.dim - 1)
