import json
import os
import shutil
import subprocess

import numpy as np
import pytest

import cpcp

CLI = os.environ.get("CPCP_CLI") or shutil.which("cpcp")


def rel(x, x0):
    return np.linalg.norm(x - x0) / np.linalg.norm(x0)


def test_generate_and_solve_recovers():
    inst = cpcp.generate(40, 40, 2, 0.05, 3, seed=1)
    assert inst.D.shape == (40, 40)
    assert len(inst.qperp) == 3
    np.testing.assert_array_equal(inst.D, inst.L0 + inst.S0)
    res = cpcp.solve_cpcp(inst.D, inst.qperp)
    assert res["status"] == "converged"
    assert rel(res["L"], inst.L0) < 1e-4


def test_pcp_matches_empty_basis():
    inst = cpcp.generate(20, 20, 1, 0.05, 0, seed=2)
    a = cpcp.solve_pcp(inst.D)
    b = cpcp.solve_cpcp(inst.D, [])
    np.testing.assert_array_equal(a["L"], b["L"])
    assert a["iters"] == b["iters"]


def test_solver_agrees_with_oracle():
    inst = cpcp.generate(10, 10, 1, 0.1, 2, seed=3)
    lam = cpcp.default_lambda(10)
    a = cpcp.solve_cpcp(inst.D, inst.qperp, tol=1e-10, max_iters=20000)
    b = cpcp.oracle_solve(inst.D, inst.qperp, lam, 1e-8)
    assert abs(a["objective"] - b["objective"]) <= 1e-5 * abs(b["objective"])


def test_tangent_projector_against_numpy():
    rng = np.random.default_rng(0)
    u, _ = np.linalg.qr(rng.standard_normal((6, 2)))
    v, _ = np.linalg.qr(rng.standard_normal((5, 2)))
    x = rng.standard_normal((6, 5))
    pu, pv = u @ u.T, v @ v.T
    want = pu @ x + x @ pv - pu @ x @ pv
    got = cpcp.Subspace.tangent(u, v).apply(x)
    np.testing.assert_allclose(got, want, atol=1e-12)


def test_svt_and_shrinkage():
    a = np.diag([3.0, 1.0, 0.5])
    np.testing.assert_allclose(cpcp.svt(a, 1.0), np.diag([2.0, 0.0, 0.0]), atol=1e-12)
    np.testing.assert_allclose(cpcp.soft_threshold(np.array([[-2.0, 0.5]]), 1.0), [[-1.0, 0.0]])


def test_degenerate_sum_raises():
    s = cpcp.Subspace.support(np.eye(3, dtype=bool))
    with pytest.raises(cpcp.DegenerateSum):
        cpcp.Subspace.direct_sum(s, s)


def test_bundle_round_trip(tmp_path):
    inst = cpcp.generate(12, 10, 1, 0.1, 2, seed=4)
    cpcp.write_bundle(tmp_path / "b", inst)
    back = cpcp.read_bundle(tmp_path / "b")
    np.testing.assert_array_equal(back.D, inst.D)
    assert back.params_json() == inst.params_json()
    with pytest.raises(cpcp.IoError):
        cpcp.read_bundle(tmp_path / "missing")


def test_certify_reports_equalities():
    inst = cpcp.generate(30, 30, 1, 0.02, 2, seed=5)
    out = cpcp.certify(inst)
    cond = out["report"]["conditions"]
    assert cond["P_T_W"]["pass"]
    assert cond["P_Qperp_W_plus_UV"]["pass"]
    assert out["W"].shape == (30, 30)
    assert isinstance(cpcp.check_premises(inst)["P_Omega_P_Gamma_perp"], dict)


def test_lemma_check():
    rep = cpcp.run_lemma_check("two_subspace_sum", m=20, n=20, r=1, p=2, trials=10, seed=1)
    assert rep["checks"][0]["pass_fraction"] == 1.0


@pytest.mark.skipif(CLI is None, reason="cpcp executable not found")
class TestCli:
    def run(self, *args):
        return subprocess.run([CLI, *map(str, args)], capture_output=True, text=True)

    def test_generate_solve_certify(self, tmp_path):
        gen = tmp_path / "gen"
        r = self.run("generate", "--out", gen, "--set", "m=20", "--set", "n=20",
                     "--set", "r=1", "--set", "p=2", "--set", "trials=2")
        assert r.returncode == 0, r.stderr
        manifest = json.loads((gen / "manifest.json").read_text())
        assert manifest["count"] == 2
        bundle = gen / manifest["bundles"][0]["path"]

        r = self.run("solve", bundle, "--out", tmp_path / "solve")
        assert r.returncode == 0, r.stderr
        solved = json.loads((tmp_path / "solve" / "solve.json").read_text())
        assert solved["status"] == "converged"
        assert (tmp_path / "solve" / "config.resolved").exists()

        r = self.run("certify", bundle, "--out", tmp_path / "cert")
        assert r.returncode in (0, 2), r.stderr
        cert = json.loads((tmp_path / "cert" / "certificate.json").read_text())
        assert (r.returncode == 0) == cert["verdict"]

    def test_config_errors_exit_one(self, tmp_path):
        r = self.run("generate", "--out", tmp_path, "--set", "bogus=1")
        assert r.returncode == 1
        r = self.run("solve", tmp_path / "nowhere", "--out", tmp_path / "o")
        assert r.returncode == 1

    def test_premise_violation_exits_two(self, tmp_path):
        inst = cpcp.generate(6, 6, 1, 0.0, 0, seed=0)
        cpcp.write_bundle(tmp_path / "b", inst)
        # A support holding a whole column contains u e_0^T, which lies in T,
        # so ||P_Omega P_T|| = 1 and the W^S series cannot be formed.
        rows = "".join(f"{i} 0\n" for i in range(6))
        (tmp_path / "b" / "omega.supp").write_text(f"SUPP1 6 6 6\n{rows}")
        r = self.run("certify", tmp_path / "b", "--out", tmp_path / "c")
        assert r.returncode == 2
