import json
import subprocess
import sys

import numpy as np
import pytest

from saddlescope.cli import main, parse_schedule, parse_vector, ConfigError


def run_cli(args, capsys):
    code = main(args)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


# --- schedule parsing ----------------------------------------------------------


def test_parse_schedule_forms(tmp_path):
    s = parse_schedule("const:0.3")
    assert (s.family, s.alpha0) == ("constant", 0.3)
    s = parse_schedule("poly:1:1.0")
    assert (s.family, s.gamma, s.alpha0) == ("polynomial", 1.0, 1.0)
    s = parse_schedule("cos:1:4:0.5")
    assert (s.family, s.gamma, s.T, s.alpha0) == ("cosine", 1.0, 4, 0.5)
    f = tmp_path / "steps.txt"
    f.write_text("0.5\n0.25\n0.125\n")
    s = parse_schedule(f"list:@{f}")
    assert s.values == (0.5, 0.25, 0.125)
    with pytest.raises(ConfigError):
        parse_schedule("warmup:0.1")
    with pytest.raises(ConfigError):
        parse_schedule("poly:1.0")


def test_parse_vector():
    np.testing.assert_array_equal(parse_vector("1,0.5"), [1.0, 0.5])
    with pytest.raises(ConfigError):
        parse_vector("1,x")


# --- certify --------------------------------------------------------------------


def test_certify_quad_saddle_gd(capsys, tmp_path):
    code, out, _ = run_cli(
        [
            "certify",
            "--objective",
            "quad_saddle",
            "--algo",
            "gd",
            "--schedule",
            "poly:1:1.0",
            "--output",
            str(tmp_path),
        ],
        capsys,
    )
    assert code == 0
    payload = json.loads(out)
    cert = payload["certificates"][0]
    assert cert["c"] == 1.0
    assert cert["lambda_k"] == "1"
    assert (tmp_path / "certs" / "quad_saddle_gd.json").exists()


def test_certify_pp_step_too_large(capsys):
    # alpha_0 = 0.9 >= 1/L = 0.5 violates the step-size precondition
    code, _, err = run_cli(
        [
            "certify",
            "--objective",
            "quad_saddle",
            "--algo",
            "pp",
            "--schedule",
            "const:0.9",
            "--L",
            "2",
        ],
        capsys,
    )
    assert code == 2
    assert "StepTooLarge" in err


def test_certify_pp_alpha_below_inverse_L_is_legal(capsys):
    # 0.9 < 1/L = 1: the certificate exists (mu_k = 10, eps_k = 0.18)
    code, out, _ = run_cli(
        [
            "certify",
            "--objective",
            "quad_saddle",
            "--algo",
            "pp",
            "--schedule",
            "const:0.9",
            "--L",
            "1",
        ],
        capsys,
    )
    assert code == 0


def test_certify_unknown_objective(capsys):
    code, _, err = run_cli(
        [
            "certify",
            "--objective",
            "nope",
            "--algo",
            "gd",
            "--schedule",
            "const:0.1",
        ],
        capsys,
    )
    assert code == 1


def test_certify_pp_quad_saddle_values(capsys):
    code, out, _ = run_cli(
        [
            "certify",
            "--objective",
            "quad_saddle",
            "--algo",
            "pp",
            "--schedule",
            "const:0.5",
            "--L",
            "1",
        ],
        capsys,
    )
    assert code == 0
    cert = json.loads(out)["certificates"][0]
    assert cert["mu_k"] == "1/(1 + alpha_k*(-1))"
    assert cert["eps_k"] == "0.2*alpha_k"


def test_certify_rgd_rayleigh(capsys):
    code, out, _ = run_cli(
        [
            "certify",
            "--objective",
            "rayleigh_sphere",
            "--algo",
            "rgd",
            "--schedule",
            "poly:1:0.5",
        ],
        capsys,
    )
    assert code == 0
    certs = json.loads(out)["certificates"]
    assert len(certs) == 2  # +e2 and -e2
    assert all(c["c"] == pytest.approx(1.0, rel=1e-4) for c in certs)


# --- graphs ---------------------------------------------------------------------


def test_graphs_linear_chain(capsys, tmp_path):
    code, out, _ = run_cli(
        [
            "graphs",
            "--chain",
            "linear",
            "--horizon",
            "10",
            "--delta",
            "0.015625",
            "--samples",
            "200",
            "--output",
            str(tmp_path),
        ],
        capsys,
    )
    assert code == 0
    report = json.loads(out)
    assert report["max_residual"] == 0.0
    assert report["final_norm"] == 0.0
    dumps = sorted((tmp_path / "graphs").glob("phi_*.json"))
    assert len(dumps) == 10
    lattice = json.loads(dumps[0].read_text())
    assert all(v == [0.0] for v in lattice["values"])


def test_graphs_perturbed_chain(capsys):
    code, out, _ = run_cli(
        ["graphs", "--chain", "perturbed", "--horizon", "6", "--samples", "500"],
        capsys,
    )
    assert code == 0
    report = json.loads(out)
    assert report["max_residual"] <= 1e-4
    assert report["potential_growth"]["violations"] == []
    assert report["contraction"]["ok"]


def test_graphs_mismatched_exits_one(capsys):
    code, _, err = run_cli(
        ["graphs", "--chain", "mismatched", "--horizon", "4"], capsys
    )
    assert code == 1
    assert "IncompatibleSplitting" in err


# --- avoid ----------------------------------------------------------------------


def test_avoid_small_run(capsys, tmp_path):
    code, out, _ = run_cli(
        [
            "avoid",
            "--objective",
            "double_well",
            "--algo",
            "gd",
            "--schedule",
            "const:0.5",
            "--trials",
            "16",
            "--seed",
            "42",
            "--max-steps",
            "2000",
            "--init-on",
            "0,0.5",
            "--output",
            str(tmp_path),
        ],
        capsys,
    )
    assert code == 0
    report = json.loads(out)
    assert report["saddle_hits"] == []
    assert (
        report["stable_set_probe"][0]["classification"] == "converged_strict_saddle"
    )
    assert (tmp_path / "avoid" / "double_well_gd_constant.csv").exists()


def test_avoid_zero_trials_config_error(capsys):
    code, _, _ = run_cli(
        [
            "avoid",
            "--objective",
            "double_well",
            "--algo",
            "gd",
            "--schedule",
            "const:0.5",
            "--trials",
            "0",
        ],
        capsys,
    )
    assert code == 1


# --- luzin ----------------------------------------------------------------------


def test_luzin_1d(capsys):
    code, out, _ = run_cli(
        [
            "luzin",
            "--objective",
            "quad_1d",
            "--algo",
            "gd",
            "--alpha-grid",
            "0.5,1.0,1.5",
            "--samples",
            "50",
        ],
        capsys,
    )
    assert code == 0
    report = json.loads(out)
    assert sorted({f["alpha"] for f in report["flagged"]}) == [1.0]


# --- evolve ---------------------------------------------------------------------


def test_evolve_quad_saddle(capsys):
    code, out, _ = run_cli(
        [
            "evolve",
            "--objective",
            "quad_saddle",
            "--algo",
            "gd",
            "--schedule",
            "const:0.1",
            "--init",
            "1,1",
            "--steps",
            "3",
        ],
        capsys,
    )
    assert code == 0
    lines = out.strip().split("\n")
    assert lines[0] == "k,x_0,x_1"
    rows = [list(map(float, ln.split(",")[1:])) for ln in lines[1:-1]]
    expected = [[1, 1], [0.9, 1.1], [0.81, 1.21], [0.729, 1.331]]
    np.testing.assert_allclose(rows, expected, atol=1e-12)
    assert lines[-1].startswith("# classification=")


def test_evolve_blowup_footer(capsys):
    code, out, _ = run_cli(
        [
            "evolve",
            "--objective",
            "double_well",
            "--algo",
            "gd",
            "--schedule",
            "const:10",
            "--init",
            "1.5,0",
            "--steps",
            "50",
        ],
        capsys,
    )
    assert code == 0
    assert "# classification=diverged" in out


# --- exit-code / strictness contract ---------------------------------------------


def test_unknown_flag_exits_one():
    proc = subprocess.run(
        [
            sys.executable,
            "-m",
            "saddlescope.cli",
            "avoid",
            "--objective",
            "double_well",
            "--algo",
            "gd",
            "--schedule",
            "const:0.5",
            "--trials",
            "2",
            "--frobnicate",
            "1",
        ],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 1
    assert "frobnicate" in proc.stderr


def test_cli_rerun_byte_identical(tmp_path):
    args = [
        sys.executable,
        "-m",
        "saddlescope.cli",
        "avoid",
        "--objective",
        "quad_saddle",
        "--algo",
        "gd",
        "--schedule",
        "poly:1:0.5",
        "--trials",
        "8",
        "--seed",
        "7",
        "--max-steps",
        "500",
    ]
    a = subprocess.run(args, capture_output=True)
    b = subprocess.run(args, capture_output=True)
    assert a.stdout == b.stdout
    assert a.returncode == b.returncode == 0
