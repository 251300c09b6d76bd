"""Pseudo-hyperbolicity certification for step-size driven systems.

Certifies that a strict saddle is a non-uniformly pseudo-hyperbolic (NPH)
unstable fixed point for a given step-size schedule: eigensplitting,
per-step constants (mu_k, lambda_k, eps_k), the admissibility partition,
non-summability classification, a sampled local Lipschitz radius, and
bump-function globalization of locally-controlled maps.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.stats import qmc

from .dynsys import Splitting, SystemMap

LIPSCHITZ_SEED = 0x5ADD1E


class InvalidParameter(ValueError):
    pass


class NotAdmissible(Exception):
    """Admissibility check failed; carries the violating index/condition."""

    def __init__(self, message: str, index: Optional[int] = None, condition: str = ""):
        super().__init__(message)
        self.index = index
        self.condition = condition


class RadiusNotFound(RuntimeError):
    pass


class CertificateFailure(Exception):
    """A certificate inequality failed; the message names it."""


class StepTooLarge(CertificateFailure):
    pass


class BudgetViolated(RuntimeError):
    pass


# --- step-size schedules ----------------------------------------------------

FAMILIES = ("constant", "polynomial", "cosine", "explicit_list")


@dataclass(frozen=True)
class Schedule:
    """A deterministic step-size sequence alpha_0, alpha_1, ...

    Families: constant (alpha_k = alpha0), polynomial
    (alpha_k = alpha0/(k+1)^gamma), cosine
    (alpha_k = alpha0/(k+1)^gamma * (1 + cos(pi (k+1/2)/(2T+1)))),
    explicit_list (user-supplied values).  For every family alpha_0 is
    the given alpha0; the family formula applies from k = 1 on.

    Construction accepts any gamma > 0 so that super-harmonic decay can
    be classified by classify_nonsummable; evaluating steps of a
    polynomial/cosine schedule with gamma outside (0, 1] raises
    InvalidParameter (the avoidance results need gamma in (0, 1]).
    """

    family: str
    alpha0: float
    gamma: Optional[float] = None
    T: Optional[int] = None
    values: Optional[tuple] = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidParameter(f"unknown schedule family {self.family!r}")
        if self.family != "explicit_list" and not self.alpha0 > 0:
            raise InvalidParameter("alpha0 must be positive")
        if self.family in ("polynomial", "cosine"):
            if self.gamma is None or not self.gamma > 0:
                raise InvalidParameter("polynomial/cosine schedules need gamma > 0")
        if self.family == "cosine":
            if self.T is None or self.T < 0 or int(self.T) != self.T:
                raise InvalidParameter("cosine schedules need integer T >= 0")
        if self.family == "explicit_list":
            if self.values is None or len(self.values) == 0:
                raise InvalidParameter("explicit_list schedules need values")
            vals = np.asarray(self.values, dtype=float)
            if not np.all(vals > 0):
                raise InvalidParameter("explicit step sizes must be positive")
            object.__setattr__(self, "values", tuple(float(v) for v in vals))
            object.__setattr__(self, "alpha0", float(vals[0]))

    def describe(self) -> str:
        if self.family == "constant":
            return f"const:{self.alpha0:g}"
        if self.family == "polynomial":
            return f"poly:{self.gamma:g}:{self.alpha0:g}"
        if self.family == "cosine":
            return f"cos:{self.gamma:g}:{self.T}:{self.alpha0:g}"
        return f"list:[{len(self.values)} values]"


def constant_schedule(alpha0: float) -> Schedule:
    return Schedule("constant", alpha0)


def polynomial_schedule(alpha0: float, gamma: float) -> Schedule:
    return Schedule("polynomial", alpha0, gamma=gamma)


def cosine_schedule(alpha0: float, gamma: float, T: int) -> Schedule:
    return Schedule("cosine", alpha0, gamma=gamma, T=T)


def explicit_schedule(values: Sequence[float]) -> Schedule:
    return Schedule("explicit_list", float(values[0]), values=tuple(values))


def _check_gamma_range(schedule: Schedule) -> None:
    if schedule.family in ("polynomial", "cosine") and not (0 < schedule.gamma <= 1):
        raise InvalidParameter(
            f"gamma={schedule.gamma} outside (0, 1] for {schedule.family} schedule"
        )


def step_size(schedule: Schedule, k: int) -> float:
    """alpha_k of the schedule.  k = 0 returns alpha0 for every family."""
    if k < 0:
        raise InvalidParameter("step index must be >= 0")
    if schedule.family == "explicit_list":
        if k >= len(schedule.values):
            raise InvalidParameter(f"explicit schedule exhausted at k={k}")
        return schedule.values[k]
    if k == 0:
        return schedule.alpha0
    if schedule.family == "constant":
        return schedule.alpha0
    _check_gamma_range(schedule)
    base = schedule.alpha0 / (k + 1) ** schedule.gamma
    if schedule.family == "polynomial":
        return base
    return base * (1.0 + math.cos(math.pi * (k + 0.5) / (2 * schedule.T + 1)))


def step_sizes(schedule: Schedule, ks: np.ndarray) -> np.ndarray:
    """Vectorized alpha_k over an integer array of step indices."""
    ks = np.asarray(ks, dtype=int)
    if np.any(ks < 0):
        raise InvalidParameter("step indices must be >= 0")
    if schedule.family == "explicit_list":
        vals = np.asarray(schedule.values)
        if np.any(ks >= len(vals)):
            raise InvalidParameter("explicit schedule exhausted")
        return vals[ks]
    if schedule.family == "constant":
        return np.full(ks.shape, schedule.alpha0)
    _check_gamma_range(schedule)
    out = schedule.alpha0 / (ks + 1.0) ** schedule.gamma
    if schedule.family == "cosine":
        out = out * (1.0 + np.cos(np.pi * (ks + 0.5) / (2 * schedule.T + 1)))
    out = np.where(ks == 0, schedule.alpha0, out)
    return out


def schedule_sup(schedule: Schedule) -> float:
    """sup_k alpha_k, exact for the closed-form families."""
    if schedule.family == "explicit_list":
        return float(max(schedule.values))
    if schedule.family == "constant":
        return schedule.alpha0
    _check_gamma_range(schedule)
    # envelope alpha0 * 2 / (k+1)^gamma decays below any current max
    best = schedule.alpha0
    k = 1
    while 2.0 * schedule.alpha0 / (k + 1) ** schedule.gamma > best:
        best = max(best, step_size(schedule, k))
        k += 1
    return best


# --- admissibility ----------------------------------------------------------


@dataclass(frozen=True)
class AdmissibilityResult:
    """Eventual partition for the multipliers |1 - alpha_k h_i|.

    Indices are 0-based.  c is the expansion margin
    (|1 - alpha_k h_j| >= 1 + c alpha_k on I_u for k >= K); it is +inf
    when I_u is empty.  empirical=True means only a finite prefix of an
    explicit list was checked.
    """

    K: int
    I_cs: frozenset
    I_u: frozenset
    c: float
    empirical: bool = False


def check_admissible(
    eigenvalues: np.ndarray, schedule: Schedule, horizon: int = 100_000
) -> AdmissibilityResult:
    """Partition Hessian eigenvalues into center-stable/unstable indices.

    Constant and vanishing (polynomial/cosine) families are resolved
    analytically with the largest valid margin c and the smallest valid
    start index K.  Ties |1 - alpha_k h_i| = 1 go to I_cs.  Explicit
    lists are verified over the finite horizon only and flagged
    empirical; raises NotAdmissible when the partition has not settled
    over the final tenth of the horizon.
    """
    if horizon < 1:
        raise InvalidParameter("horizon must be >= 1")
    h = np.asarray(eigenvalues, dtype=float)
    d = h.size

    if schedule.family == "constant":
        mult = np.abs(1.0 - schedule.alpha0 * h)
        I_u = frozenset(np.flatnonzero(mult > 1.0).tolist())
        I_cs = frozenset(range(d)) - I_u
        c = (
            float(np.min((mult[list(I_u)] - 1.0) / schedule.alpha0))
            if I_u
            else math.inf
        )
        return AdmissibilityResult(0, I_cs, I_u, c)

    if schedule.family in ("polynomial", "cosine"):
        # vanishing steps: the eventual partition is the sign partition
        I_cs = frozenset(np.flatnonzero(h >= 0.0).tolist())
        I_u = frozenset(np.flatnonzero(h < 0.0).tolist())
        c = float(np.min(np.abs(h[list(I_u)]))) if I_u else math.inf
        pos = h[h > 0.0]
        if pos.size == 0:
            return AdmissibilityResult(0, I_cs, I_u, c)
        # condition (i) on I_cs needs alpha_k <= 2 / h_max from K on
        bound = 2.0 / float(np.max(pos))
        if schedule.family == "polynomial":
            # alpha_k monotonically decreasing
            K = 0
            while step_size(schedule, K) > bound:
                K += 1
        else:
            # not monotone; find where the envelope drops below the bound,
            # then scan back for the smallest K that works throughout
            k_env = 0
            while 2.0 * schedule.alpha0 / (k_env + 1) ** schedule.gamma > bound:
                k_env += 1
            K = k_env
            while K > 0 and step_size(schedule, K - 1) <= bound:
                K -= 1
        return AdmissibilityResult(K, I_cs, I_u, c)

    # explicit list: finite-prefix verification
    n = min(horizon, len(schedule.values))
    alphas = np.asarray(schedule.values[:n])
    mult = np.abs(1.0 - alphas[:, None] * h[None, :])  # (n, d)
    unstable = mult > 1.0
    final = unstable[-1]
    settled = np.all(unstable == final[None, :], axis=1)
    K = n - 1
    while K > 0 and settled[K - 1]:
        K -= 1
    if K > 0.9 * n:
        flip = int(np.flatnonzero(~settled)[-1])
        bad = int(np.flatnonzero(unstable[flip] != final)[0])
        raise NotAdmissible(
            f"partition for eigenvalue index {bad} still flipping at k={flip} "
            f"(checked horizon {n})",
            index=bad,
            condition="(i) eventual partition",
        )
    I_u = frozenset(np.flatnonzero(final).tolist())
    I_cs = frozenset(range(d)) - I_u
    if I_u:
        margins = (mult[K:, list(I_u)] - 1.0) / alphas[K:, None]
        c = float(np.min(margins))
    else:
        c = math.inf
    return AdmissibilityResult(K, I_cs, I_u, c, empirical=True)


def classify_nonsummable(
    schedule: Schedule, threshold: float = 1e3, horizon: int = 1_000_000
) -> str:
    """Classify sum_k alpha_k: 'divergent', 'convergent', 'unknown', or
    'divergent-empirical' (explicit lists whose partial sums cross the
    threshold within the horizon).

    Closed-form families are decided analytically: p-series ground truth
    for polynomial decay, times the strictly positive periodic cosine
    factor for cosine decay.
    """
    if schedule.family == "constant":
        return "divergent"
    if schedule.family in ("polynomial", "cosine"):
        return "divergent" if schedule.gamma <= 1.0 else "convergent"
    n = min(horizon, len(schedule.values))
    if float(np.sum(np.asarray(schedule.values[:n]))) >= threshold:
        return "divergent-empirical"
    return "unknown"


def is_nonsummable(schedule: Schedule) -> bool:
    return classify_nonsummable(schedule) in ("divergent", "divergent-empirical")


# --- spectral data ----------------------------------------------------------


@dataclass(frozen=True)
class SpectralData:
    """Eigendecomposition of a symmetric Hessian, eigenvalues descending."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # orthonormal columns, matching order

    @classmethod
    def from_hessian(cls, H: np.ndarray) -> "SpectralData":
        H = np.asarray(H, dtype=float)
        w, V = np.linalg.eigh(H)
        order = np.argsort(w)[::-1]
        return cls(eigenvalues=w[order], eigenvectors=V[:, order])

    def validate_against(self, H: np.ndarray, tol: float = 1e-8) -> None:
        H = np.asarray(H, dtype=float)
        resid = H @ self.eigenvectors - self.eigenvectors * self.eigenvalues
        if np.max(np.abs(resid)) > tol:
            raise ValueError("eigenpairs do not reproduce the Hessian")
        if np.any(np.diff(self.eigenvalues) > 0):
            raise ValueError("eigenvalues must be sorted descending")


# --- sampled Lipschitz constants and the bump globalization -----------------


def _sobol_cube(n: int, dim: int, seed: Optional[int]) -> np.ndarray:
    """n Sobol points in [-1, 1]^dim (drawn in power-of-two blocks)."""
    sob = qmc.Sobol(dim, scramble=seed is not None, seed=seed)
    m = max(1, math.ceil(math.log2(max(n, 1))))
    u = sob.random_base2(m)
    while len(u) < n:
        u = np.vstack([u, sob.random_base2(m)])
    return 2.0 * u[:n] - 1.0


def _to_ball(u: np.ndarray, radius: float, norm) -> np.ndarray:
    """Scale cube points into the `norm`-ball, pushing overshoots onto it.

    Keeps near-boundary coverage, which is where Lipschitz ratios of
    smooth maps peak.
    """
    u = u * radius
    norms = np.asarray(norm(u), dtype=float)
    scale = np.where(norms > radius, radius / np.maximum(norms, 1e-300), 1.0)
    return u * scale[:, None]


def sample_lipschitz(
    map_diff: Callable[[np.ndarray], np.ndarray],
    region_radius: float,
    pairs: int,
    splitting: Optional[Splitting] = None,
    dim: Optional[int] = None,
    seed: int = LIPSCHITZ_SEED,
) -> float:
    """Sampled lower bound on Lip(map_diff) over the ball of given radius.

    Ratios ||diff(x) - diff(y)|| / ||x - y|| over low-discrepancy point
    pairs, measured in the splitting max-norm when a splitting is given
    (Euclidean otherwise).  A lower bound on the true constant; the
    fixed default seed keeps runs reproducible.
    """
    if pairs < 1:
        raise InvalidParameter("pairs must be >= 1")
    if splitting is not None:
        dim = splitting.dim
        norm = splitting.max_norm
    elif dim is None:
        raise InvalidParameter("need a splitting or an explicit dim")
    else:
        norm = lambda v: np.linalg.norm(v, axis=-1)
    # pairs drawn jointly from a 2*dim-dimensional stream so that nearby
    # near-boundary pairs (the ratio maximizers) are actually sampled
    u = _sobol_cube(pairs, 2 * dim, seed)
    X = _to_ball(u[:, :dim], region_radius, norm)
    Y = _to_ball(u[:, dim:], region_radius, norm)
    dxy = np.asarray(norm(X - Y), dtype=float)
    keep = dxy > 1e-15
    if not np.any(keep):
        return 0.0
    fX = np.asarray(map_diff(X[keep]), dtype=float)
    fY = np.asarray(map_diff(Y[keep]), dtype=float)
    ratios = np.asarray(norm(fX - fY), dtype=float) / dxy[keep]
    return float(np.max(ratios))


def bump(x_norm: np.ndarray, r: float) -> np.ndarray:
    """Radial bump q = min(1, max(0, 2 - (2/r)||x||)): 1 on B_{r/2}, 0 off B_r."""
    return np.minimum(1.0, np.maximum(0.0, 2.0 - (2.0 / r) * np.asarray(x_norm)))


def globalize(
    system_map: SystemMap,
    T: np.ndarray,
    r: float,
    eps_budget: float,
    splitting: Optional[Splitting] = None,
    check_pairs: int = 4096,
    check_radius_factor: float = 2.0,
    seed: int = LIPSCHITZ_SEED,
) -> SystemMap:
    """Blend the map into its linearization outside a ball.

    Returns g~ = T x + q(x) (g - T)(x) with the radial bump q, so that
    g~ = g on B_{r/2} exactly, g~ = T outside B_r exactly, and
    Lip(g~ - T) <= eps_budget globally whenever
    Lip((g - T)|B_r) <= eps_budget/4.  Both Lipschitz conditions are
    verified by sampling (in the splitting max-norm when given); raises
    BudgetViolated if either sampled estimate exceeds its bound.
    """
    T = np.asarray(T, dtype=float)
    if splitting is not None:
        norm = splitting.max_norm
        dim = splitting.dim
    else:
        norm = lambda v: np.linalg.norm(v, axis=-1)
        dim = T.shape[0]

    def diff(x):
        return np.asarray(system_map.evaluate(x)) - np.asarray(x) @ T.T

    local = sample_lipschitz(
        diff, r, check_pairs, splitting=splitting, dim=dim, seed=seed
    )
    if local > eps_budget / 4.0:
        raise BudgetViolated(
            f"sampled Lip((g - T)|B_r) = {local:.3e} exceeds eps_budget/4 = "
            f"{eps_budget / 4.0:.3e}"
        )

    def evaluate(x):
        x = np.asarray(x, dtype=float)
        q = bump(norm(x), r)[..., None]
        gx = np.asarray(system_map.evaluate(x), dtype=float)
        tx = x @ T.T
        # exact agreement with g on the inner ball and with T outside,
        # bitwise; the blend only acts on the transition band
        return np.where(q == 1.0, gx, np.where(q == 0.0, tx, tx + q * (gx - tx)))

    blended = SystemMap(
        evaluate=evaluate, jacobian=None, label=f"globalized[{system_map.label}]"
    )

    def blended_diff(x):
        return blended.evaluate(x) - np.asarray(x) @ T.T

    global_lip = sample_lipschitz(
        blended_diff,
        check_radius_factor * r,
        check_pairs,
        splitting=splitting,
        dim=dim,
        seed=seed + 1,
    )
    if global_lip > eps_budget:
        raise BudgetViolated(
            f"sampled global Lip(g~ - T) = {global_lip:.3e} exceeds eps_budget = "
            f"{eps_budget:.3e}"
        )
    return blended


# --- local Lipschitz radius from the Hessian modulus ------------------------


def estimate_radius(
    hessian: Callable[[np.ndarray], np.ndarray],
    c: float,
    dim: int,
    box: float = 2.0,
    samples: int = 512,
    levels: int = 64,
) -> float:
    """Largest r in (0, box] with sampled max ||H(x) - H(0)|| <= c over ||x|| <= r.

    The sampled sup uses deterministic quasi-random points per candidate
    radius; the search is a 64-level bisection (the Hessian modulus of
    continuity is nondecreasing in r).  Raises RadiusNotFound when even
    the smallest bisection radius fails, which signals a discontinuous
    or misconfigured Hessian.
    """
    if c <= 0:
        raise InvalidParameter("c must be positive")
    H0 = np.asarray(hessian(np.zeros(dim)), dtype=float)
    euclid = lambda v: np.linalg.norm(v, axis=-1)

    base = _sobol_cube(samples, dim, seed=None)

    def omega(radius: float) -> float:
        pts = _to_ball(base, radius, euclid)
        H = np.asarray(hessian(pts), dtype=float)
        return float(np.max(np.linalg.norm(H - H0, ord=2, axis=(-2, -1))))

    if omega(box) <= c:
        return box
    lo, hi = 0.0, box
    for _ in range(levels):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if omega(mid) <= c:
            lo = mid
        else:
            hi = mid
    if lo == 0.0:
        raise RadiusNotFound(
            f"no radius in (0, {box}] keeps the Hessian modulus below {c}"
        )
    return lo


# --- certificates -----------------------------------------------------------


@dataclass(frozen=True)
class PHCertificate:
    """Per-step pseudo-hyperbolicity constants for one (system, saddle) pair.

    For k >= K the linearizations T_k are lambda_k-non-expanding on E_cs
    and mu_k-expanding on E_u, with the nonlinear remainder eps_k/4-small
    on the ball of radius r; eps_k < (mu_k - lambda_k)/4 and the ratios
    eps_k/(mu_k - 2 eps_k) are non-summable.
    """

    kind: str  # "gd" or "pp"
    splitting: Splitting
    K: int
    schedule: Schedule
    c: float
    r: float
    partition: tuple  # (I_cs, I_u) as sorted tuples, 0-based
    mu_formula: str
    lambda_formula: str
    eps_formula: str
    h_unstable: Optional[float] = None  # pp only: first negative eigenvalue

    def alpha(self, k) -> np.ndarray:
        return step_sizes(self.schedule, np.asarray(k))

    def lam(self, k) -> np.ndarray:
        return np.ones_like(np.asarray(k, dtype=float))

    def mu(self, k) -> np.ndarray:
        if self.kind == "gd":
            return 1.0 + self.c * self.alpha(k)
        return 1.0 / (1.0 + self.alpha(k) * self.h_unstable)

    def eps(self, k) -> np.ndarray:
        if self.kind == "gd":
            return self.c * self.alpha(k) / 5.0
        return (-self.h_unstable / 5.0) * self.alpha(k)

    def to_json(self) -> str:
        payload = {
            "kind": self.kind,
            "K": int(self.K),
            "c": self.c if math.isfinite(self.c) else "inf",
            "r": self.r if math.isfinite(self.r) else "inf",
            "schedule": self.schedule.describe(),
            "partition": {
                "I_cs": list(self.partition[0]),
                "I_u": list(self.partition[1]),
            },
            "mu_k": self.mu_formula,
            "lambda_k": self.lambda_formula,
            "eps_k": self.eps_formula,
            "basis_cs": self.splitting.basis_cs.T.tolist(),
            "basis_u": self.splitting.basis_u.T.tolist(),
        }
        return json.dumps(payload, sort_keys=True)


def _split_from_partition(spectral: SpectralData, I_cs, I_u) -> Splitting:
    V = spectral.eigenvectors
    return Splitting.from_columns(V[:, sorted(I_cs)], V[:, sorted(I_u)])


def build_gd_certificate(
    spectral: SpectralData,
    schedule: Schedule,
    hessian: Callable[[np.ndarray], np.ndarray],
    box: float = 2.0,
    horizon: int = 100_000,
) -> PHCertificate:
    """NPH certificate for gradient descent at a strict saddle.

    Uses lambda_k = 1, mu_k = 1 + c alpha_k, eps_k = c alpha_k / 5 with
    the admissibility margin c, the eigenvector splitting, and a radius
    r such that the sampled Hessian modulus stays below c/20 (so that
    Lip((g_k - T_k)|B_r) <= alpha_k * c/20 = eps_k/4).
    """
    adm = check_admissible(spectral.eigenvalues, schedule, horizon=horizon)
    if len(adm.I_u) == 0:
        raise CertificateFailure(
            "dim(E_u) >= 1 violated: no unstable directions under this schedule"
        )
    if not is_nonsummable(schedule):
        raise CertificateFailure(
            "non-summability violated: sum of eps_k/(mu_k - 2 eps_k) is finite"
        )
    dim = spectral.eigenvalues.size
    r = estimate_radius(hessian, adm.c / 20.0, dim, box=box)
    c = adm.c
    return PHCertificate(
        kind="gd",
        splitting=_split_from_partition(spectral, adm.I_cs, adm.I_u),
        K=adm.K,
        schedule=schedule,
        c=c,
        r=r,
        partition=(tuple(sorted(adm.I_cs)), tuple(sorted(adm.I_u))),
        mu_formula=f"1 + {c:g}*alpha_k",
        lambda_formula="1",
        eps_formula=f"{c / 5.0:g}*alpha_k",
    )


def build_pp_certificate(
    spectral: SpectralData,
    schedule: Schedule,
    L: float,
    hessian: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    box: float = 2.0,
) -> PHCertificate:
    """NPH certificate for the proximal point method at a strict saddle.

    With s = #{eigenvalues in [0, L]} and h the (s+1)-st eigenvalue (the
    first negative one): lambda_k = 1, mu_k = 1/(1 + alpha_k h),
    eps_k = (-h/5) alpha_k, splitting by eigenvalue sign.  Requires
    sup alpha_k < 1/L and non-summable steps.  The radius is sampled
    from the Hessian modulus when one is supplied; with hessian=None the
    remainder is assumed exactly linear (quadratic objective) and r is
    unbounded.
    """
    h = spectral.eigenvalues
    if np.max(np.abs(h)) > L + 1e-12:
        raise CertificateFailure(
            f"eigenvalue magnitude {np.max(np.abs(h)):g} exceeds the declared L={L:g}"
        )
    neg = h[h < 0]
    if neg.size == 0:
        raise CertificateFailure("not a strict saddle: no negative eigenvalue")
    sup = schedule_sup(schedule)
    if sup >= 1.0 / L:
        raise StepTooLarge(
            f"sup alpha_k = {sup:g} is not below 1/L = {1.0 / L:g}"
        )
    if not is_nonsummable(schedule):
        raise CertificateFailure("non-summability violated for the PP schedule")
    s = int(np.sum(h >= 0))
    h_u = float(h[s])  # first negative eigenvalue, descending order
    I_cs = tuple(range(s))
    I_u = tuple(range(s, h.size))
    if hessian is None:
        r = math.inf
    else:
        rho = 1.0 / (1.0 - sup * L)
        R = estimate_radius(hessian, (-h_u / 20.0) / rho**2, h.size, box=box)
        r = R / rho
    return PHCertificate(
        kind="pp",
        splitting=_split_from_partition(spectral, I_cs, I_u),
        K=0,
        schedule=schedule,
        c=-h_u,
        r=r,
        partition=(I_cs, I_u),
        mu_formula=f"1/(1 + alpha_k*({h_u:g}))",
        lambda_formula="1",
        eps_formula=f"{-h_u / 5.0:g}*alpha_k",
        h_unstable=h_u,
    )


def validate_certificate(cert: PHCertificate, ks: Optional[np.ndarray] = None) -> None:
    """Check the defining inequalities at sampled k; raises CertificateFailure."""
    if ks is None:
        ks = np.arange(cert.K, cert.K + 10_001)
    lam, mu, eps = cert.lam(ks), cert.mu(ks), cert.eps(ks)
    if not np.all(lam >= 1.0):
        raise CertificateFailure("lambda_k >= 1 violated")
    if not np.all(mu > lam):
        raise CertificateFailure("mu_k > lambda_k violated")
    if not np.all(eps < (mu - lam) / 4.0):
        raise CertificateFailure("eps_k < (mu_k - lambda_k)/4 violated")
