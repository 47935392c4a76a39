import numpy as np
import pytest

from emff import (
    MU0,
    DualProblem,
    Wrench,
    interaction_operator,
    psd_feasible,
    psi_stack,
    solve_dual,
    solve_dual_batch,
)
from emff.dual import unvec_columns
from conftest import forward_command, random_geometry


def los_problem(u, d=1.0):
    op = interaction_operator([d, 0.0, 0.0], [0.0, 0.0, -1.0])
    return DualProblem(Q=op, u=Wrench.from_vector(np.asarray(u, dtype=float)))


class TestSolveDual:
    def test_zero_command(self):
        cert = solve_dual(los_problem(np.zeros(6)))
        assert np.array_equal(cert.lambda_, np.zeros(6))
        assert cert.J_d == 0.0
        assert cert.sigma_max == 0.0

    @pytest.mark.parametrize("d,F", [(1.0, 1e-5), (2.0, 3e-6), (0.3, 1e-4)])
    def test_axial_force_closed_form(self, d, F):
        # axial command saturates the (1,1) singular direction: J_d = 4 pi d^4 F / (3 mu0)
        cert = solve_dual(los_problem([F, 0, 0, 0, 0, 0], d=d))
        assert np.isclose(cert.J_d, 4 * np.pi * d**4 * F / (3 * MU0), rtol=1e-8)
        assert cert.sigma_max >= 1 - 1e-6
        assert cert.kkt_residual <= 1e-10

    def test_objective_homogeneity(self, rng):
        r, hint, u, _ = forward_command(rng)
        op = interaction_operator(r, hint)
        J1 = solve_dual(DualProblem(Q=op, u=u)).J_d
        J2 = solve_dual(DualProblem(Q=op, u=Wrench.from_vector(2 * u.as_vector()))).J_d
        assert np.isclose(J2, 2 * J1, rtol=1e-8)

    def test_weak_duality_against_generator(self, rng):
        for _ in range(20):
            r, hint, u, J_gen = forward_command(rng)
            cert = solve_dual(DualProblem(Q=interaction_operator(r, hint), u=u))
            assert cert.J_d <= J_gen * (1 + 1e-9)

    def test_active_constraint_at_optimum(self, rng):
        for _ in range(20):
            r, hint, u, _ = forward_command(rng)
            cert = solve_dual(DualProblem(Q=interaction_operator(r, hint), u=u))
            assert cert.sigma_max >= 1 - 1e-6
            assert cert.sigma_max <= 1 + 1e-8

    def test_deterministic_bitwise(self, rng):
        r, hint, u, _ = forward_command(rng)
        op = interaction_operator(r, hint)
        c1 = solve_dual(DualProblem(Q=op, u=u))
        c2 = solve_dual(DualProblem(Q=op, u=u))
        assert np.array_equal(c1.lambda_, c2.lambda_)
        assert c1.J_d == c2.J_d

    def test_finite_objective_always(self, rng):
        for _ in range(10):
            r, hint = random_geometry(rng)
            u = Wrench.from_vector(rng.normal(size=6) * 10.0 ** rng.integers(-8, 2))
            cert = solve_dual(DualProblem(Q=interaction_operator(r, hint), u=u))
            assert np.isfinite(cert.J_d)
            assert cert.J_d >= 0.0

    def test_tol_validated(self):
        with pytest.raises(ValueError):
            solve_dual(los_problem([1e-5, 0, 0, 0, 0, 0]), tol=1e-2)

    def test_r_lambda_consistent_with_q(self, rng):
        r, hint, u, _ = forward_command(rng)
        op = interaction_operator(r, hint)
        cert = solve_dual(DualProblem(Q=op, u=u))
        assert np.allclose(cert.R_lambda, unvec_columns(op.Q.T @ cert.lambda_), atol=1e-12)

    def test_pure_torque_against_brute_force(self):
        # torque-only commands are the brigade's hardest single-block case
        from emff import brute_force_allocate

        u = [0.0, 0.0, 0.0, 0.0, 0.0, 2e-7]
        cert = solve_dual(los_problem(u, d=1.5))
        brute = brute_force_allocate([1.5, 0, 0], [0, 0, -1.0], u, restarts=20, seed=3)
        assert brute.J_p >= cert.J_d * (1 - 1e-4)
        assert brute.J_p <= cert.J_d * (1 + 1e-4)


class TestBatch:
    def test_batch_matches_scalar(self, rng):
        d = 1.3
        Q = psi_stack(d)
        us = rng.normal(size=(8, 6)) * 1e-5
        batch = solve_dual_batch(Q, us)
        for i in range(8):
            cert = solve_dual(los_problem(us[i], d=d))
            assert np.isclose(batch["J_d"][i], cert.J_d, rtol=1e-12)

    def test_batch_zero_rows(self):
        us = np.zeros((3, 6))
        us[1] = [1e-5, 0, 0, 0, 0, 0]
        res = solve_dual_batch(psi_stack(1.0), us)
        assert res["J_d"][0] == 0.0 and res["J_d"][2] == 0.0
        assert res["J_d"][1] > 0.0


class TestPsdFeasible:
    def test_zero_matrix(self):
        ok, margin = psd_feasible(np.zeros((3, 3)))
        assert ok and margin == 1.0

    def test_identity_boundary(self):
        ok, margin = psd_feasible(np.eye(3))
        assert ok and abs(margin) <= 1e-12

    def test_infeasible(self):
        ok, margin = psd_feasible(1.5 * np.eye(3))
        assert not ok and np.isclose(margin, -0.5)

    def test_equivalent_to_block_eigenvalues(self, rng):
        # [[I, R], [R^T, I]] >= 0 iff sigma_max(R) <= 1
        for _ in range(100):
            R = rng.normal(size=(3, 3))
            R *= rng.uniform(0.2, 1.8) / np.linalg.svd(R, compute_uv=False)[0]
            smax = np.linalg.svd(R, compute_uv=False)[0]
            if abs(smax - 1.0) < 1e-9:
                continue
            P = np.block([[np.eye(3), R], [R.T, np.eye(3)]])
            assert (np.linalg.eigvalsh(P)[0] >= 0) == (smax <= 1.0)
            assert psd_feasible(R)[0] == (smax <= 1.0)
