"""Discretized graph transform on spaces of Lipschitz graphs.

Candidate invariant sets are graphs of functions phi: E_cs -> E_u with
phi(0) = 0 and Lip(phi) <= 1, discretized on a regular lattice with
multilinear interpolation.  For a pseudo-hyperbolic pair (g, T) the
transform Gamma maps phi to the function whose graph g carries into
graph(phi); its value at y is the fixed point of a contraction on E_u.
Iterating the transforms of a non-autonomous sequence right-to-left from
the zero function builds the center-stable graphs, and the potential
V_phi(x) = ||p_u(x) - phi(p_cs(x))|| certifies that off-graph points are
expelled at rate mu - 2 eps > 1.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .dynsys import Splitting, SystemMap

MAX_FACTOR_DIM = 2  # function-space iteration is exponential in dim(E_cs)
DEFAULT_RADIUS = 1.0
DEFAULT_DELTA = 1.0 / 64.0
LIP_GRID_TOL = 1e-8


class NoContraction(RuntimeError):
    """The auxiliary fixed-point iteration failed to contract."""


class IncompatibleSplitting(ValueError):
    """Pairs in a composition do not share one splitting."""


class GraphFunction:
    """A function E_cs -> E_u sampled on a regular lattice.

    The lattice covers [-radius, radius]^m with spacing delta (radius
    must be an integer multiple of delta so the origin is a node);
    values holds one E_u vector per node.  Evaluation is multilinear
    between nodes and clamps each coordinate to the box outside it,
    which extends the function with zero slope and so preserves the
    Lipschitz bound.
    """

    def __init__(
        self,
        m: int,
        n: int,
        radius: float = DEFAULT_RADIUS,
        delta: float = DEFAULT_DELTA,
        values: Optional[np.ndarray] = None,
    ):
        if not (1 <= m <= MAX_FACTOR_DIM and 1 <= n <= MAX_FACTOR_DIM):
            raise ValueError(f"factor dims must be in [1, {MAX_FACTOR_DIM}]")
        steps = radius / delta
        if abs(steps - round(steps)) > 1e-9:
            raise ValueError("radius must be an integer multiple of delta")
        self.m, self.n = m, n
        self.radius = float(radius)
        self.delta = float(delta)
        self.npts = 2 * int(round(steps)) + 1
        self.axis = (np.arange(self.npts) - self.npts // 2) * self.delta
        shape = (self.npts,) * m + (n,)
        if values is None:
            self.values = np.zeros(shape)
        else:
            values = np.asarray(values, dtype=float)
            if values.shape != shape:
                raise ValueError(f"values must have shape {shape}")
            self.values = values

    # -- construction helpers ------------------------------------------------

    @classmethod
    def zero(cls, m: int, n: int, radius=DEFAULT_RADIUS, delta=DEFAULT_DELTA):
        return cls(m, n, radius, delta)

    @classmethod
    def from_callable(cls, fn, m, n, radius=DEFAULT_RADIUS, delta=DEFAULT_DELTA):
        g = cls(m, n, radius, delta)
        vals = np.asarray(fn(g.node_coords()), dtype=float)
        g.values = vals.reshape(g.values.shape)
        return g

    def like(self, values: np.ndarray) -> "GraphFunction":
        return GraphFunction(self.m, self.n, self.radius, self.delta, values)

    # -- geometry --------------------------------------------------------------

    def node_coords(self) -> np.ndarray:
        """All lattice nodes as an (npts^m, m) array."""
        grids = np.meshgrid(*([self.axis] * self.m), indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=-1)

    def nodal_values(self) -> np.ndarray:
        return self.values.reshape(-1, self.n)

    @property
    def origin_index(self) -> tuple:
        return (self.npts // 2,) * self.m

    def __call__(self, y: np.ndarray) -> np.ndarray:
        """Clamped multilinear interpolation; (..., m) -> (..., n)."""
        y = np.asarray(y, dtype=float)
        scalar_in = y.ndim == 1
        pts = y.reshape(-1, self.m)
        u = np.clip(pts, -self.radius, self.radius)
        t = (u + self.radius) / self.delta
        idx = np.clip(np.floor(t).astype(int), 0, self.npts - 2)
        frac = t - idx
        out = np.zeros((len(pts), self.n))
        for corner in itertools.product((0, 1), repeat=self.m):
            w = np.ones(len(pts))
            for j, b in enumerate(corner):
                w = w * (frac[:, j] if b else 1.0 - frac[:, j])
            nodes = tuple(idx[:, j] + corner[j] for j in range(self.m))
            out += w[:, None] * self.values[nodes]
        return out[0] if scalar_in else out.reshape(y.shape[:-1] + (self.n,))

    # -- invariants ------------------------------------------------------------

    def lipschitz_upper(self) -> float:
        """Max slope between axis-adjacent nodes (grid surrogate of Lip)."""
        worst = 0.0
        for ax in range(self.m):
            d = np.diff(self.values, axis=ax)
            worst = max(worst, float(np.max(np.linalg.norm(d, axis=-1))) / self.delta)
        return worst

    def validate(self) -> None:
        origin = self.values[self.origin_index]
        if np.any(origin != 0.0):
            raise ValueError("value at the origin node must be exactly zero")
        lip = self.lipschitz_upper()
        if lip > 1.0 + LIP_GRID_TOL:
            raise ValueError(f"adjacent-node Lipschitz bound violated: {lip}")

    def to_json(self) -> str:
        return json.dumps(
            {
                "dims": [self.m, self.n],
                "R": self.radius,
                "delta": self.delta,
                "values": self.values.tolist(),
            },
            sort_keys=True,
        )


def function_norm(phi: GraphFunction) -> float:
    """max over non-origin nodes of ||phi(y)|| / ||y||.

    A grid surrogate of the sup over all y != 0 (a lower bound; exact
    for piecewise-linear data in one dimension).
    """
    Y = phi.node_coords()
    V = phi.nodal_values()
    ny = np.linalg.norm(Y, axis=1)
    keep = ny > 0
    return float(np.max(np.linalg.norm(V[keep], axis=1) / ny[keep]))


@dataclass(frozen=True)
class PHPair:
    """A pseudo-hyperbolic pair: nonlinear map g with linearization T.

    T must preserve both factors of the splitting, be mu-expanding on
    E_u and lam-non-expanding on E_cs, and the remainder g - T must be
    eps-Lipschitz with eps < (mu - lam)/4 (in the splitting max-norm).
    """

    g: SystemMap
    T: np.ndarray
    splitting: Splitting
    mu: float
    lam: float
    eps: float

    def __post_init__(self):
        T = np.asarray(self.T, dtype=float)
        object.__setattr__(self, "T", T)
        B_cs, B_u = self.splitting.basis_cs, self.splitting.basis_u
        A_cs = B_cs.T @ T @ B_cs
        A_u = B_u.T @ T @ B_u
        off = max(
            float(np.max(np.abs(B_u.T @ T @ B_cs), initial=0.0)),
            float(np.max(np.abs(B_cs.T @ T @ B_u), initial=0.0)),
        )
        if off > 1e-10:
            raise ValueError(f"T does not preserve the splitting (off-block {off:.2e})")
        su = np.linalg.svd(A_u, compute_uv=False)
        if su.min() < self.mu - 1e-10:
            raise ValueError(
                f"T|E_u not mu-expanding: sigma_min = {su.min():.6g} < mu = {self.mu}"
            )
        if A_cs.size:
            scs = np.linalg.svd(A_cs, compute_uv=False)
            if scs.max() > self.lam + 1e-10:
                raise ValueError(
                    f"T|E_cs not lam-bounded: sigma_max = {scs.max():.6g}"
                )
        if not (self.eps > 0 and self.eps < (self.mu - self.lam) / 4.0):
            raise ValueError("need 0 < eps < (mu - lam)/4")
        object.__setattr__(self, "_A_u_inv", np.linalg.inv(A_u))

    @property
    def m(self) -> int:
        return self.splitting.dim_cs

    @property
    def n(self) -> int:
        return self.splitting.dim_u

    def contraction_factor(self) -> float:
        """Lipschitz bound 2 eps / mu of the auxiliary map in z."""
        return 2.0 * self.eps / self.mu

    def gamma_lipschitz(self) -> float:
        """Contraction factor (lam + eps)/(mu - 2 eps) of the transform."""
        return (self.lam + self.eps) / (self.mu - 2.0 * self.eps)

    def graph_lip_bound(self) -> float:
        """Lipschitz bound (lam + 2 eps)/(mu - 2 eps) of transformed graphs."""
        return (self.lam + 2.0 * self.eps) / (self.mu - 2.0 * self.eps)


def _aux_rhs(pair: PHPair, phi: Callable, Y: np.ndarray, Z: np.ndarray) -> np.ndarray:
    """One sweep z <- (T|E_u)^{-1} (phi(g_cs(y,z)) - (g_u - T_u)(y,z))."""
    sp = pair.splitting
    X = sp.embed(Y, Z)
    GX = np.asarray(pair.g.evaluate(X), dtype=float)
    gcs = sp.coords_cs(GX)
    gu = sp.coords_u(GX)
    Tu = sp.coords_u(X @ pair.T.T)
    return (np.asarray(phi(gcs)) - (gu - Tu)) @ pair._A_u_inv.T


def _solve_fixed_points(
    pair: PHPair,
    phi: Callable,
    Y: np.ndarray,
    tol: float,
    max_iter: int = 10_000,
    ratio_sink: Optional[list] = None,
) -> np.ndarray:
    """Fixed points of the auxiliary maps at each row of Y, from z = 0.

    The contraction factor 2 eps / mu < 1 guarantees geometric
    convergence; successive-step ratios above 1 (measured away from the
    floating-point noise floor) raise NoContraction.
    """
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    Z = np.zeros((len(Y), pair.n))
    prev_step = None
    floor = max(10.0 * tol, 1e-12)
    for it in range(max_iter):
        Znew = _aux_rhs(pair, phi, Y, Z)
        step = np.linalg.norm(Znew - Z, axis=1)
        if prev_step is not None:
            mask = prev_step > floor
            if np.any(mask):
                ratios = step[mask] / prev_step[mask]
                worst = float(np.max(ratios))
                if ratio_sink is not None:
                    ratio_sink.append(worst)
                if worst > 1.0:
                    raise NoContraction(
                        f"successive-step ratio {worst:.6g} exceeds 1; "
                        "the pseudo-hyperbolicity certificate is violated"
                    )
        prev_step = step
        Z = Znew
        if float(np.max(step)) <= tol:
            return Z
    raise NoContraction(f"no convergence within {max_iter} iterations")


def auxiliary_fixed_point(
    pair: PHPair, phi: GraphFunction, y: np.ndarray, tol: float
) -> np.ndarray:
    """The unique fixed point of the auxiliary contraction at parameter y."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    y = np.atleast_1d(np.asarray(y, dtype=float))
    return _solve_fixed_points(pair, phi, y[None, :], tol)[0]


def graph_transform(
    pair: PHPair,
    phi: GraphFunction,
    tol: float,
    ratio_sink: Optional[list] = None,
) -> GraphFunction:
    """Apply the transform of the pair to phi, node by node.

    Returns the lattice sampling of Gamma(phi).  The result is checked
    against the graph-class invariants and against the Lipschitz bound
    (lam + 2 eps)/(mu - 2 eps) plus the nodal solve slack.
    """
    phi.validate()
    if (phi.m, phi.n) != (pair.m, pair.n):
        raise ValueError("graph dims do not match the pair's splitting")
    Y = phi.node_coords()
    Z = _solve_fixed_points(pair, phi, Y, tol, ratio_sink=ratio_sink)
    values = Z.reshape(phi.values.shape)
    origin = values[phi.origin_index]
    if np.linalg.norm(origin) > max(10.0 * tol, 1e-12):
        raise NoContraction(
            f"origin fixed point {origin} is non-zero: the map does not fix 0"
        )
    values[phi.origin_index] = 0.0
    out = phi.like(values)
    slack = 2.0 * tol / phi.delta + 1e-10
    lip = out.lipschitz_upper()
    if lip > pair.graph_lip_bound() + slack:
        raise NoContraction(
            f"transformed graph slope {lip:.8g} exceeds the bound "
            f"{pair.graph_lip_bound():.8g} (+ solve slack)"
        )
    out.validate()
    return out


def compose_phi(
    pairs: Sequence[PHPair],
    tol: float,
    radius: float = DEFAULT_RADIUS,
    delta: float = DEFAULT_DELTA,
    return_chain: bool = False,
):
    """Composed transforms of the zero function, applied right to left.

    With pairs = (p_kbar, ..., p_kend) this produces
    Gamma_kbar(... Gamma_kend(zero function) ...).  All pairs must share
    one splitting.  With return_chain=True, returns the list whose j-th
    entry is the composition starting at pair j (consecutive entries
    satisfy chain[j] = Gamma_j(chain[j+1]), the graph-invariance chain).
    """
    if len(pairs) == 0:
        raise ValueError("need at least one pair")
    ref = pairs[0].splitting
    for p in pairs[1:]:
        if (
            p.splitting.basis_cs.shape != ref.basis_cs.shape
            or not np.allclose(p.splitting.basis_cs, ref.basis_cs, atol=1e-12)
            or not np.allclose(p.splitting.basis_u, ref.basis_u, atol=1e-12)
        ):
            raise IncompatibleSplitting(
                "pairs must be jointly pseudo-hyperbolic on one splitting"
            )
    phi = GraphFunction.zero(pairs[0].m, pairs[0].n, radius, delta)
    chain = []
    for pair in reversed(pairs):
        phi = graph_transform(pair, phi, tol)
        chain.append(phi)
    chain.reverse()
    return chain if return_chain else phi


def potential(phi: GraphFunction, splitting: Splitting, x: np.ndarray) -> np.ndarray:
    """Deviation ||p_u(x) - phi(p_cs(x))|| of x from the graph of phi."""
    z = splitting.coords_u(x)
    y = splitting.coords_cs(x)
    return np.linalg.norm(z - phi(y), axis=-1)


@dataclass
class PotentialGrowthReport:
    samples: int
    factor: float  # mu - 2 eps
    slack: float
    min_ratio: float
    violations: list

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json(self) -> str:
        return json.dumps(
            {
                "samples": self.samples,
                "factor": self.factor,
                "slack": self.slack,
                "min_ratio": self.min_ratio,
                "violations": self.violations,
            },
            sort_keys=True,
        )


def verify_potential_growth(
    pair: PHPair,
    phi: GraphFunction,
    samples: int,
    tol: float = 1e-9,
    seed: int = 0,
) -> PotentialGrowthReport:
    """Check V_phi(g(x)) >= (mu - 2 eps) V_{Gamma phi}(x) on random points.

    The slack delta*(1 + Lip) + tol accounts for storing Gamma(phi) on
    the lattice (interpolation between nodes plus the nodal solve
    tolerance); violations beyond it are reported, not raised.
    """
    gphi = graph_transform(pair, phi, tol)
    rng = np.random.default_rng(seed)
    Y = rng.uniform(-phi.radius, phi.radius, size=(samples, phi.m))
    Z = rng.uniform(-phi.radius, phi.radius, size=(samples, phi.n))
    X = pair.splitting.embed(Y, Z)
    GX = np.asarray(pair.g.evaluate(X), dtype=float)
    lhs = potential(phi, pair.splitting, GX)
    rhs = potential(gphi, pair.splitting, X)
    factor = pair.mu - 2.0 * pair.eps
    slack = phi.delta * 2.0 + tol  # delta * (1 + Lip), Lip <= 1 on the class
    bad = lhs < factor * rhs - slack
    violations = [
        {"x": X[i].tolist(), "lhs": float(lhs[i]), "rhs": float(factor * rhs[i])}
        for i in np.flatnonzero(bad)
    ]
    meaningful = rhs > slack
    min_ratio = (
        float(np.min(lhs[meaningful] / rhs[meaningful]))
        if np.any(meaningful)
        else math.inf
    )
    return PotentialGrowthReport(
        samples=samples,
        factor=factor,
        slack=slack,
        min_ratio=min_ratio,
        violations=violations,
    )


def verify_graph_invariance(
    pair_k: PHPair,
    phi_k: GraphFunction,
    phi_k1: GraphFunction,
    samples: int,
    tol: float = 1e-9,
    seed: int = 0,
    consistency_nodes: int = 32,
    consistency_tol: Optional[float] = None,
) -> float:
    """Residual of g_k(graph(phi_k)) lying inside graph(phi_{k+1}).

    phi_k must be the transform of phi_{k+1} under pair_k (re-solved on
    a node subsample and checked).  Returns the sup over sampled y of
    ||p_u(g(y, phi_k(y))) - phi_{k+1}(p_cs(g(y, phi_k(y))))||.
    """
    rng = np.random.default_rng(seed)
    nodes = phi_k.node_coords()
    pick = rng.choice(len(nodes), size=min(consistency_nodes, len(nodes)), replace=False)
    resolved = _solve_fixed_points(pair_k, phi_k1, nodes[pick], tol)
    drift = np.max(np.linalg.norm(resolved - phi_k.nodal_values()[pick], axis=1))
    if drift > (consistency_tol if consistency_tol is not None else max(100 * tol, 1e-8)):
        raise ValueError(
            f"phi_k is not the graph transform of phi_k1 (nodal drift {drift:.3e})"
        )
    Y = rng.uniform(-phi_k.radius, phi_k.radius, size=(samples, phi_k.m))
    X = pair_k.splitting.embed(Y, phi_k(Y))
    GX = np.asarray(pair_k.g.evaluate(X), dtype=float)
    resid = np.linalg.norm(
        pair_k.splitting.coords_u(GX) - phi_k1(pair_k.splitting.coords_cs(GX)),
        axis=1,
    )
    return float(np.max(resid))
