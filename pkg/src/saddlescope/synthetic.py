"""Factories for pseudo-hyperbolic pairs and graph-class members.

Used by the verification harness and the CLI presets: randomized pairs
with analytically certified constants (the perturbations are sums of
sine waves whose global Lipschitz constant in the splitting max-norm is
known in closed form), plus the two hand-built 2-d chains.
"""

from __future__ import annotations

import numpy as np

from .dynsys import Splitting, SystemMap
from .graphtransform import GraphFunction, PHPair
from .phcert import globalize


def _dual_max_norm(splitting: Splitting, v: np.ndarray) -> float:
    # dual of max(||.||_cs, ||.||_u) is the sum of the factor norms
    return float(
        np.linalg.norm(splitting.coords_cs(v)) + np.linalg.norm(splitting.coords_u(v))
    )


def random_ph_pair(
    rng: np.random.Generator,
    m: int,
    n: int,
    lam_range=(1.0, 1.3),
    gap_range=(0.5, 1.2),
    eps_fraction=(0.2, 0.8),
    nonlinearity=0.9,
) -> PHPair:
    """A random globally pseudo-hyperbolic pair with certified constants.

    T is built blockwise in a random orthogonal splitting with singular
    values inside [lam/3, lam] on E_cs and [mu, 1.3 mu] on E_u; eps is
    drawn strictly below (mu - lam)/4 and the sine perturbation is
    normalized so its exact global Lipschitz constant (max-norm) is
    nonlinearity * eps < eps.
    """
    d = m + n
    Q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    splitting = Splitting.from_columns(Q[:, :m], Q[:, m:])

    lam = float(rng.uniform(*lam_range))
    mu = lam + float(rng.uniform(*gap_range))
    eps = float(rng.uniform(*eps_fraction)) * (mu - lam) / 4.0

    def random_block(k, smin, smax):
        U, _ = np.linalg.qr(rng.standard_normal((k, k)))
        V, _ = np.linalg.qr(rng.standard_normal((k, k)))
        s = rng.uniform(smin, smax, size=k)
        return U @ np.diag(s) @ V.T

    C = random_block(m, lam / 3.0, lam)
    Uu = random_block(n, mu, 1.3 * mu)
    T = (
        splitting.basis_cs @ C @ splitting.basis_cs.T
        + splitting.basis_u @ Uu @ splitting.basis_u.T
    )

    # perturbation u(x) = sum_i a_i w_i sin(v_i . x); Lip(u) in the
    # max-norm is exactly sum_i a_i after normalizing w_i to unit
    # max-norm and v_i to unit dual norm
    terms = []
    budget = nonlinearity * eps
    weights = rng.dirichlet(np.ones(2)) * budget
    for a in weights:
        w = rng.standard_normal(d)
        w = w / float(splitting.max_norm(w))
        v = rng.standard_normal(d)
        v = v / _dual_max_norm(splitting, v)
        terms.append((float(a), w, v))

    def evaluate(x):
        x = np.asarray(x, dtype=float)
        out = x @ T.T
        for a, w, v in terms:
            out = out + a * np.sin(x @ v)[..., None] * w
        return out

    gmap = SystemMap(evaluate=evaluate, label=f"synthetic({m},{n})")
    return PHPair(g=gmap, T=T, splitting=splitting, mu=mu, lam=lam, eps=eps)


def random_f1_graph(
    rng: np.random.Generator,
    m: int,
    n: int,
    radius: float = 1.0,
    delta: float = 1.0 / 64.0,
    lip: float = 0.85,
) -> GraphFunction:
    """A smooth random graph-class member with true Lipschitz <= lip.

    phi(y) = C tanh(W y) scaled so ||C|| ||W|| = lip; smoothness keeps
    the lattice sampling a faithful member of the class (the interpolant
    inherits the bound up to curvature * delta).
    """
    W = rng.standard_normal((m, m)) + np.eye(m)
    C = rng.standard_normal((n, m))
    scale = lip / (np.linalg.norm(C, 2) * np.linalg.norm(W, 2))
    C = C * scale

    def fn(y):
        return np.tanh(np.asarray(y) @ W.T) @ C.T

    g = GraphFunction.from_callable(fn, m, n, radius, delta)
    g.values[g.origin_index] = 0.0  # tanh(0) = 0; pin it bitwise
    return g


def axes_splitting_2d() -> Splitting:
    return Splitting([np.array([1.0, 0.0])], [np.array([0.0, 1.0])])


def split_diagonal_pair(lam: float = 1.0, mu: float = 2.0, eps: float = 0.1) -> PHPair:
    """The linear 1-d/1-d pair g = T = diag(lam, mu) on the axes splitting."""
    T = np.diag([lam, mu])
    gmap = SystemMap(evaluate=lambda x: np.asarray(x, dtype=float) @ T.T, label="diag")
    return PHPair(g=gmap, T=T, splitting=axes_splitting_2d(), mu=mu, lam=lam, eps=eps)


def perturbed_quadratic_pair(eps: float = 0.08, coeff: float = 0.01) -> PHPair:
    """Globalized quadratic perturbation of diag(1, 2) in the plane.

    The raw map g(y, z) = (y + coeff z^2, 2 z + coeff y^2) has
    Lip((g - T)|B_r) = 2 coeff r in the max-norm, so choosing
    r = eps / (8 coeff) meets the local eps/4 budget; the bump blend
    then makes the pair globally pseudo-hyperbolic with constant eps.
    """
    T = np.diag([1.0, 2.0])
    splitting = axes_splitting_2d()

    def raw(x):
        x = np.asarray(x, dtype=float)
        out = x @ T.T
        out = out + coeff * np.stack([x[..., 1] ** 2, x[..., 0] ** 2], axis=-1)
        return out

    r = eps / (8.0 * coeff)
    blended = globalize(
        SystemMap(evaluate=raw, label="quadratic"),
        T,
        r=r,
        eps_budget=eps,
        splitting=splitting,
    )
    return PHPair(g=blended, T=T, splitting=splitting, mu=2.0, lam=1.0, eps=eps)
