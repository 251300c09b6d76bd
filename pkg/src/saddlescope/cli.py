"""Batch experiment runner.

Subcommands: certify (NPH certificates), graphs (graph-transform chains
and lemma verification), avoid (Monte Carlo saddle avoidance), luzin
(Jacobian rank scans), evolve (single trajectories as CSV).  Exit codes:
0 success, 1 configuration error, 2 certificate/verifier failure,
3 avoidance violation.  Outputs land under --output DIR in certs/,
graphs/, avoid/, luzin/, evolve/.  SADDLESCOPE_THREADS caps concurrency.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import avoidance, graphtransform, phcert, synthetic, testfns
from .dynsys import run_trajectory
from .graphtransform import (
    GraphFunction,
    IncompatibleSplitting,
    NoContraction,
    compose_phi,
    function_norm,
    graph_transform,
    verify_graph_invariance,
    verify_potential_growth,
)
from .optimizers import SphereObjective, lift_to_tangent, rgd_system, tangent_basis
from .phcert import (
    CertificateFailure,
    InvalidParameter,
    NotAdmissible,
    RadiusNotFound,
    Schedule,
    SpectralData,
    build_gd_certificate,
    build_pp_certificate,
)
from .testfns import STRICT_SADDLE

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_CERT = 2
EXIT_AVOID = 3


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad flags by default; the contract is exit 1
    def error(self, message):
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def parse_schedule(spec: str) -> Schedule:
    """Shell-friendly schedule syntax:
    const:a0 | poly:gamma:a0 | cos:gamma:T:a0 | list:@file."""
    parts = spec.split(":")
    try:
        if parts[0] == "const" and len(parts) == 2:
            return phcert.constant_schedule(float(parts[1]))
        if parts[0] == "poly" and len(parts) == 3:
            return phcert.polynomial_schedule(float(parts[2]), float(parts[1]))
        if parts[0] == "cos" and len(parts) == 4:
            return phcert.cosine_schedule(
                float(parts[3]), float(parts[1]), int(parts[2])
            )
        if parts[0] == "list" and len(parts) == 2 and parts[1].startswith("@"):
            values = [
                float(tok)
                for tok in Path(parts[1][1:]).read_text().split()
            ]
            return phcert.explicit_schedule(values)
    except (ValueError, OSError, InvalidParameter) as exc:
        raise ConfigError(f"bad schedule {spec!r}: {exc}") from exc
    raise ConfigError(f"bad schedule syntax {spec!r}")


def parse_vector(spec: str) -> np.ndarray:
    try:
        return np.array([float(tok) for tok in spec.split(",")], dtype=float)
    except ValueError as exc:
        raise ConfigError(f"bad vector {spec!r}") from exc


def _outdir(args, sub: str):
    if args.output is None:
        return None
    path = Path(args.output) / sub
    path.mkdir(parents=True, exist_ok=True)
    return path


def _emit(text: str, path) -> None:
    print(text)
    if path is not None:
        path.write_text(text + ("\n" if not text.endswith("\n") else ""))


def _get_entry(key: str) -> testfns.CataloguedObjective:
    try:
        return testfns.get(key)
    except KeyError as exc:
        raise ConfigError(str(exc)) from exc


def pullback_hessian(objective: SphereObjective, base: np.ndarray, h: float = 1e-5):
    """FD Hessian of the tangent-chart pullback cost at a sphere point."""
    from .optimizers import sphere_exp

    Q = tangent_basis(base)
    k = base.size - 1

    def f(V):
        return objective.f(sphere_exp(base, np.asarray(V) @ Q.T))

    def hess(V):
        V = np.asarray(V, dtype=float)
        single = V.ndim == 1
        Vb = np.atleast_2d(V)
        out = np.empty((len(Vb), k, k))
        for i in range(k):
            for j in range(k):
                ei = np.zeros(k)
                ej = np.zeros(k)
                ei[i] = h
                ej[j] = h
                out[:, i, j] = (
                    f(Vb + ei + ej)
                    - f(Vb + ei - ej)
                    - f(Vb - ei + ej)
                    + f(Vb - ei - ej)
                ) / (4 * h * h)
        out = 0.5 * (out + np.swapaxes(out, -1, -2))
        return out[0] if single else out.reshape(V.shape[:-1] + (k, k))

    return hess


def saddle_certificates(entry, algorithm: str, schedule: Schedule, L=None, box=2.0):
    """Build one certificate per catalogued strict saddle."""
    results = []
    saddles = [
        cp for cp in entry.critical_points if cp.classification == STRICT_SADDLE
    ]
    if not saddles:
        raise ConfigError(f"{entry.key} has no catalogued strict saddles")
    for cp in saddles:
        point = cp.sample(np.array(0.0)) if hasattr(cp, "sample") else cp.point
        if entry.is_sphere:
            if algorithm == "pp":
                raise ConfigError("pp certificates need a Euclidean objective")
            base = point
            # exact tangent Hessian for the splitting/constants; the
            # radius is sampled from the chart-pullback Hessian modulus
            spectral = SpectralData.from_hessian(
                entry.objective.riemannian_hessian(base)
            )
            hess = pullback_hessian(entry.objective, base)
            cert = build_gd_certificate(spectral, schedule, hess, box=min(box, 1.0))
        else:
            H0 = np.asarray(entry.objective.hess(point))
            spectral = SpectralData.from_hessian(H0)
            if algorithm == "gd":
                cert = build_gd_certificate(
                    spectral, schedule, entry.objective.hess, box=box
                )
            elif algorithm == "pp":
                Lval = L if L is not None else entry.objective.lipschitz_L
                if Lval is None:
                    raise ConfigError("pp certification needs --L")
                cert = build_pp_certificate(
                    spectral, schedule, Lval, hessian=entry.objective.hess, box=box
                )
            else:
                raise ConfigError("Euclidean objectives take --algo gd or pp")
        results.append((point, cert))
    return results


# --- subcommands ---------------------------------------------------------------


def cmd_certify(args) -> int:
    entry = _get_entry(args.objective)
    schedule = parse_schedule(args.schedule)
    try:
        certs = saddle_certificates(
            entry, args.algo, schedule, L=args.L, box=args.box
        )
    except (CertificateFailure, NotAdmissible, RadiusNotFound) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CERT
    payload = {
        "objective": entry.key,
        "algorithm": args.algo,
        "schedule": schedule.describe(),
        "certificates": [
            {"saddle": point.tolist(), **json.loads(cert.to_json())}
            for point, cert in certs
        ],
    }
    out = _outdir(args, "certs")
    _emit(
        json.dumps(payload, sort_keys=True, indent=2),
        out / f"{entry.key}_{args.algo}.json" if out else None,
    )
    return EXIT_OK


_CHAINS = ("linear", "perturbed", "mismatched")


def _preset_chain(name: str, horizon: int):
    if name == "linear":
        return [synthetic.split_diagonal_pair() for _ in range(horizon)]
    if name == "perturbed":
        pair = synthetic.perturbed_quadratic_pair(eps=0.08)
        return [pair] * horizon
    if name == "mismatched":
        import numpy as _np

        from .dynsys import Splitting, SystemMap

        good = synthetic.split_diagonal_pair()
        sp = Splitting([_np.array([0.0, 1.0])], [_np.array([1.0, 0.0])])
        T = _np.diag([2.0, 1.0])
        bad = graphtransform.PHPair(
            g=SystemMap(evaluate=lambda x: _np.asarray(x) @ T.T),
            T=T,
            splitting=sp,
            mu=2.0,
            lam=1.0,
            eps=0.1,
        )
        return [good, bad] * max(horizon // 2, 1)
    raise ConfigError(f"unknown chain {name!r}; have {_CHAINS}")


def cmd_graphs(args) -> int:
    chain_spec = _preset_chain(args.chain, args.horizon)
    out = _outdir(args, "graphs")
    try:
        chain = compose_phi(
            chain_spec,
            tol=args.tol,
            radius=args.radius,
            delta=args.delta,
            return_chain=True,
        )
    except IncompatibleSplitting as exc:
        print(f"IncompatibleSplitting: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NoContraction as exc:
        print(f"NoContraction: {exc}", file=sys.stderr)
        return EXIT_CERT

    if out:
        for j, phi in enumerate(chain):
            (out / f"phi_{j:03d}.json").write_text(phi.to_json())

    residuals = []
    for j in range(len(chain) - 1):
        residuals.append(
            verify_graph_invariance(
                chain_spec[j],
                chain[j],
                chain[j + 1],
                samples=args.samples,
                tol=args.tol,
                seed=args.seed,
            )
        )
    growth = verify_potential_growth(
        chain_spec[0], chain[0], samples=args.samples, tol=args.tol, seed=args.seed
    )
    pair = chain_spec[0]
    rng = np.random.default_rng(args.seed)
    probe = synthetic.random_f1_graph(
        rng, pair.m, pair.n, radius=args.radius, delta=args.delta
    )
    zero = GraphFunction.zero(pair.m, pair.n, args.radius, args.delta)
    gp = graph_transform(pair, probe, args.tol)
    gz = graph_transform(pair, zero, args.tol)
    den = function_norm(probe.like(probe.values - zero.values))
    ratio = function_norm(gp.like(gp.values - gz.values)) / den
    contraction_ok = ratio <= pair.gamma_lipschitz() + (2 * args.tol / args.delta) / den

    report = {
        "chain": args.chain,
        "horizon": args.horizon,
        "delta": args.delta,
        "invariance_residuals": residuals,
        "max_residual": max(residuals) if residuals else 0.0,
        "residual_budget": args.max_residual,
        "potential_growth": json.loads(growth.to_json()),
        "contraction": {
            "measured_ratio": ratio,
            "bound": pair.gamma_lipschitz(),
            "ok": bool(contraction_ok),
        },
        "final_norm": function_norm(chain[0]),
    }
    _emit(
        json.dumps(report, sort_keys=True, indent=2),
        out / "report.json" if out else None,
    )
    violated = (
        (residuals and max(residuals) > args.max_residual)
        or not growth.ok
        or not contraction_ok
    )
    return EXIT_CERT if violated else EXIT_OK


def cmd_avoid(args) -> int:
    entry = _get_entry(args.objective)
    schedule = parse_schedule(args.schedule)
    if args.trials < 1:
        raise ConfigError("trials must be >= 1")
    probes = [parse_vector(p) for p in args.init_on or []]
    try:
        report = avoidance.monte_carlo_avoidance(
            args.objective,
            args.algo,
            schedule,
            trials=args.trials,
            seed=args.seed,
            box=args.box,
            max_steps=args.max_steps,
            probes=probes,
        )
    except (phcert.StepTooLarge, CertificateFailure) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CERT
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    out = _outdir(args, "avoid")
    stem = f"{entry.key}_{args.algo}_{schedule.family}"
    _emit(report.to_json(), out / f"{stem}.json" if out else None)
    if out:
        (out / f"{stem}.csv").write_text(report.to_csv())
    if report.saddle_hits:
        print(
            f"avoidance violated: {len(report.saddle_hits)} random trial(s) "
            "converged to a strict saddle",
            file=sys.stderr,
        )
        return EXIT_AVOID
    return EXIT_OK


def cmd_luzin(args) -> int:
    _get_entry(args.objective)
    grid = [float(tok) for tok in args.alpha_grid.split(",")]
    try:
        report = avoidance.luzin_scan(
            args.objective,
            args.algo,
            grid,
            x_samples=args.samples,
            seed=args.seed,
            box=args.box,
        )
    except phcert.StepTooLarge as exc:
        print(f"StepTooLarge: {exc}", file=sys.stderr)
        return EXIT_CERT
    out = _outdir(args, "luzin")
    _emit(
        report.to_json(), out / f"{args.objective}_{args.algo}.json" if out else None
    )
    return EXIT_OK


def cmd_evolve(args) -> int:
    entry = _get_entry(args.objective)
    schedule = parse_schedule(args.schedule)
    x0 = parse_vector(args.init)
    if x0.size != entry.dim:
        raise ConfigError(f"init has dim {x0.size}, objective needs {entry.dim}")
    try:
        system = avoidance.build_system(entry, args.algo, schedule)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    record = run_trajectory(
        system,
        x0,
        max_steps=args.steps,
        stop_tol=args.stop_tol,
        store_cap=args.steps,
    )
    lines = ["k," + ",".join(f"x_{j}" for j in range(entry.dim))]
    for k, x in zip(record.step_indices, record.iterates):
        lines.append(",".join([str(int(k))] + [f"{float(v):.17g}" for v in x]))
    lines.append(
        f"# classification={record.classification} steps={record.steps_taken}"
    )
    text = "\n".join(lines)
    out = _outdir(args, "evolve")
    _emit(text, out / f"{entry.key}_{args.algo}.csv" if out else None)
    return EXIT_OK


# --- entry point -----------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="saddlescope", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--output", default=None, help="output directory")

    p = sub.add_parser("certify", parents=[], help="build NPH certificates")
    p.add_argument("--objective", required=True)
    p.add_argument("--algo", required=True, choices=("gd", "rgd", "pp"))
    p.add_argument("--schedule", required=True)
    p.add_argument("--L", type=float, default=None)
    p.add_argument("--box", type=float, default=2.0)
    common(p)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("graphs", help="graph-transform chains and verification")
    p.add_argument("--chain", default="linear", choices=_CHAINS)
    p.add_argument("--horizon", type=int, default=10)
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--delta", type=float, default=1.0 / 128.0)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--samples", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-residual", type=float, default=1e-4)
    common(p)
    p.set_defaults(func=cmd_graphs)

    p = sub.add_parser("avoid", help="Monte Carlo saddle avoidance")
    p.add_argument("--objective", required=True)
    p.add_argument("--algo", required=True, choices=avoidance.ALGORITHMS)
    p.add_argument("--schedule", required=True)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--box", type=float, default=avoidance.DEFAULT_BOX)
    p.add_argument("--max-steps", type=int, default=None)
    p.add_argument(
        "--init-on",
        action="append",
        metavar="X0",
        help="extra probe initialization 'x,y,...' (repeatable; never fails the run)",
    )
    common(p)
    p.set_defaults(func=cmd_avoid)

    p = sub.add_parser("luzin", help="Jacobian determinant scan")
    p.add_argument("--objective", required=True)
    p.add_argument("--algo", required=True, choices=avoidance.ALGORITHMS)
    p.add_argument("--alpha-grid", required=True, help="comma-separated step sizes")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--box", type=float, default=avoidance.DEFAULT_BOX)
    common(p)
    p.set_defaults(func=cmd_luzin)

    p = sub.add_parser("evolve", help="stream one trajectory as CSV")
    p.add_argument("--objective", required=True)
    p.add_argument("--algo", required=True, choices=avoidance.ALGORITHMS)
    p.add_argument("--schedule", required=True)
    p.add_argument("--init", required=True, help="initial point 'x,y,...'")
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--stop-tol", type=float, default=1e-12)
    common(p)
    p.set_defaults(func=cmd_evolve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvalidParameter as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
