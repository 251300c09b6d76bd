import numpy as np
import pytest

from saddlescope.avoidance import (
    AvoidanceReport,
    classify_limit,
    default_max_steps,
    luzin_scan,
    monte_carlo_avoidance,
    run_matrix,
    validate_cell,
    _evolve_batch,
)
from saddlescope.dynsys import TrajectoryRecord, run_trajectory
from saddlescope.optimizers import gd_system
from saddlescope.phcert import (
    StepTooLarge,
    constant_schedule,
    cosine_schedule,
    polynomial_schedule,
)
from saddlescope.testfns import get


def make_record(points, steps_taken=None, classification="undecided"):
    points = np.atleast_2d(np.asarray(points, dtype=float))
    n = len(points)
    steps_taken = steps_taken if steps_taken is not None else n - 1
    return TrajectoryRecord(
        initial=points[0],
        step_indices=np.arange(steps_taken - n + 1, steps_taken + 1),
        iterates=points,
        steps_taken=steps_taken,
        classification=classification,
    )


# --- classify_limit -----------------------------------------------------------


def test_classify_minimizer_near_well():
    entry = get("double_well")
    rec = make_record([[0.99998, 1e-6]] * 5, steps_taken=400)
    assert classify_limit(rec, entry) == "converged_minimizer"


def test_classify_saddle_requires_confined_window():
    entry = get("double_well")
    # 50 iterates pinned at the saddle: a hit
    rec = make_record([[0.0, 0.0]] * 60, steps_taken=300)
    assert classify_limit(rec, entry) == "converged_strict_saddle"
    # transient proximity only: final point close but window not confined
    drift = np.column_stack([np.zeros(60), np.geomspace(0.5, 1e-9, 60)])
    rec2 = make_record(drift, steps_taken=300)
    assert classify_limit(rec2, entry) == "undecided"


def test_classify_diverged_passthrough():
    entry = get("double_well")
    rec = make_record([[5.0, 5.0]], classification="diverged")
    assert classify_limit(rec, entry) == "diverged"


def test_classify_far_point_undecided():
    entry = get("double_well")
    rec = make_record([[0.5, 0.5]] * 60, steps_taken=100)
    assert classify_limit(rec, entry) == "undecided"


# --- batched evolution ---------------------------------------------------------


def test_batch_matches_run_trajectory_bitwise():
    entry = get("double_well")
    sched = polynomial_schedule(0.4, 0.5)
    system = gd_system(entry.objective, sched)
    rng = np.random.default_rng(5)
    X0 = rng.uniform(-2, 2, size=(7, 2))
    ring, steps, status = _evolve_batch(
        system, X0, max_steps=300, stop_tol=1e-9, window=12, tail_len=20
    )
    for i in range(7):
        rec = run_trajectory(
            system, X0[i], max_steps=300, stop_tol=1e-9, window=12, tail=20
        )
        assert rec.steps_taken == int(steps[i])
        from saddlescope.avoidance import _tail_of

        tail = _tail_of(ring, steps, i)
        np.testing.assert_array_equal(tail, rec.tail(len(tail)))


def test_batch_tail_ends_at_last_finite_state():
    # growth to overflow: the ring buffer wraps many times before the
    # blow-up; a stale slot must not leak into the reported tail
    from saddlescope.avoidance import _tail_of
    from saddlescope.dynsys import NonAutonomousSystem, SystemMap

    system = NonAutonomousSystem(
        lambda k: SystemMap(lambda x: 2.0 * np.asarray(x)), 1
    )
    X0 = np.array([[1.0]])
    with np.errstate(over="ignore"):  # the overflow IS the scenario
        ring, steps, status = _evolve_batch(
            system,
            X0,
            max_steps=5000,
            stop_tol=1e-300,
            window=10,
            tail_len=60,
            divergence_radius=np.inf,  # force the non-finite path
        )
    assert status[0] == 2  # diverged
    tail = _tail_of(ring, steps, 0)
    assert np.all(np.isfinite(tail))
    # doubling map: a consecutive tail is strictly increasing; a stale
    # wrapped entry would break monotonicity
    assert np.all(np.diff(tail[:, 0]) > 0)


def test_default_max_steps():
    assert default_max_steps(polynomial_schedule(0.5, 1.0)) == 10**6
    assert default_max_steps(cosine_schedule(0.5, 1.0, 4)) == 10**6
    assert default_max_steps(polynomial_schedule(0.5, 0.5)) == 10**5
    assert default_max_steps(constant_schedule(0.5)) == 10**5


# --- monte carlo ---------------------------------------------------------------


def test_monte_carlo_double_well_no_saddle_hits():
    report = monte_carlo_avoidance(
        "double_well",
        "gd",
        constant_schedule(0.5),
        trials=64,
        seed=42,
        max_steps=2000,
        probes=[np.array([0.0, 0.5])],
    )
    assert sum(report.counts.values()) == 64
    assert report.counts["converged_strict_saddle"] == 0
    assert report.counts["converged_minimizer"] > 50
    assert report.saddle_hits == []
    # the on-manifold probe proves the harness can detect saddle capture
    assert len(report.stable_set_probe) == 1
    assert report.stable_set_probe[0]["classification"] == "converged_strict_saddle"


def test_monte_carlo_rgd_sphere():
    report = monte_carlo_avoidance(
        "rayleigh_sphere",
        "rgd",
        constant_schedule(0.5),
        trials=32,
        seed=7,
        max_steps=3000,
    )
    assert report.counts["converged_strict_saddle"] == 0
    assert report.counts["converged_minimizer"] >= 30


def test_monte_carlo_pp_quad_saddle_diverges_from_saddle():
    report = monte_carlo_avoidance(
        "quad_saddle",
        "pp",
        constant_schedule(0.5),
        trials=32,
        seed=3,
        max_steps=2000,
    )
    assert report.counts["converged_strict_saddle"] == 0
    assert report.counts["diverged"] >= 30


def test_monte_carlo_validates_preconditions():
    with pytest.raises(StepTooLarge):
        monte_carlo_avoidance(
            "quad_saddle", "pp", constant_schedule(1.5), trials=4, seed=0
        )
    with pytest.raises(ValueError):
        monte_carlo_avoidance(
            "quad_saddle", "gd", polynomial_schedule(1.0, 2.0), trials=4, seed=0
        )


def test_monte_carlo_deterministic_outputs():
    kwargs = dict(
        objective_key="double_well",
        algorithm="gd",
        schedule=constant_schedule(0.4),
        trials=16,
        seed=11,
        max_steps=500,
    )
    a = monte_carlo_avoidance(**kwargs)
    b = monte_carlo_avoidance(**kwargs)
    assert a.to_json() == b.to_json()
    assert a.to_csv() == b.to_csv()


def test_run_matrix_orders_results():
    cells = [
        dict(
            objective_key="double_well",
            algorithm="gd",
            schedule=constant_schedule(0.4),
            trials=8,
            seed=s,
            max_steps=300,
        )
        for s in (1, 2, 3)
    ]
    reports = run_matrix(cells, threads=2)
    assert [r.seed for r in reports] == [1, 2, 3]
    solo = monte_carlo_avoidance(**cells[1])
    assert reports[1].to_json() == solo.to_json()


def test_csv_shape():
    report = monte_carlo_avoidance(
        "quad_saddle", "gd", constant_schedule(0.5), trials=5, seed=1, max_steps=200
    )
    lines = report.to_csv().strip().split("\n")
    assert lines[0] == "trial,seed,x0_0,x0_1,classification,steps,final_grad_norm"
    assert len(lines) == 6


# --- luzin scans ----------------------------------------------------------------


def test_luzin_1d_flags_exactly_alpha_one():
    report = luzin_scan("quad_1d", "gd", [0.5, 1.0, 1.5], x_samples=100, seed=0)
    assert report.flagged_alphas == [1.0]


def test_luzin_quad_saddle_no_flags():
    report = luzin_scan("quad_saddle", "gd", [0.5], x_samples=200, seed=0)
    assert report.flagged == []
    assert report.min_abs_det[0] == pytest.approx(0.75, rel=1e-12)


def test_luzin_pp_diffeomorphism():
    report = luzin_scan("quad_saddle", "pp", [0.5], x_samples=200, seed=0)
    assert report.flagged == []
    assert report.min_abs_det[0] == pytest.approx(4.0 / 3.0, rel=1e-10)


def test_luzin_pp_rejects_large_alpha():
    with pytest.raises(StepTooLarge):
        luzin_scan("quad_saddle", "pp", [1.2], x_samples=10, seed=0)


def test_luzin_double_well_isolated_flags():
    # det(I - alpha H(x)) = (1 - alpha(3x^2 - 1))(1 - alpha): zero set is
    # measure zero in (alpha, x); only alpha = 1 is hit by the grid
    report = luzin_scan(
        "double_well", "gd", [0.25, 0.5, 1.0], x_samples=500, seed=4
    )
    assert report.flagged_alphas == [1.0]


def test_luzin_rgd_runs_and_is_deterministic():
    r1 = luzin_scan("rayleigh_sphere", "rgd", [0.3], x_samples=50, seed=9)
    r2 = luzin_scan("rayleigh_sphere", "rgd", [0.3], x_samples=50, seed=9)
    assert r1.to_json() == r2.to_json()
    assert r1.flagged == []
