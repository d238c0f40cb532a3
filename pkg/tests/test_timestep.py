import numpy as np
import pytest
import scipy.sparse as sp

from mixpar.assembly import Coefficients, OperatorSet, assemble_load
from mixpar.timestep import TimeGrid, run


def toy_ops(r=1.0, a=1.0):
    return OperatorSet(
        R=sp.csr_matrix(np.array([[r]])),
        A=sp.csr_matrix(np.array([[a]])),
        B=sp.csr_matrix((0, 1)),
        X=sp.csr_matrix(np.array([[a]])),
        M=sp.csr_matrix((0, 0)),
        primal=None,
        multiplier=None,
        coeffs=Coefficients(),
    )


def test_scalar_decay_toy():
    # u^n = u^{n-1} / (1 + dt) for R = A = 1, f = 0
    sol = run(toy_ops(), lambda t: np.zeros(1), TimeGrid(1.0, 2),
              u0h=np.array([1.0]))
    assert sol.u[:, 0] == pytest.approx([1.0, 2 / 3, 4 / 9], rel=1e-14)
    assert sol.lam.shape == (3, 0)


def test_zero_data_gives_zero_solution(eddy3):
    _, _, _, ops = eddy3
    grid = TimeGrid(0.5, 4)
    sol = run(ops, lambda t: np.zeros(ops.A.shape[0]), grid)
    assert np.abs(sol.u).max() == 0.0
    assert np.abs(sol.lam).max() == 0.0


def test_initial_conditions_recorded(eddy3):
    _, _, _, ops = eddy3
    rng = np.random.default_rng(5)
    u0 = rng.standard_normal(ops.A.shape[0])
    # project u0 onto the constraint manifold so step residuals stay small
    grid = TimeGrid(0.5, 2)
    sol = run(ops, lambda t: np.zeros(ops.A.shape[0]), grid, u0h=u0)
    assert np.array_equal(sol.u[0], u0)
    assert np.all(sol.lam[0] == 0.0)


def test_time_grid_validation():
    with pytest.raises(ValueError):
        TimeGrid(1.0, 0)
    with pytest.raises(ValueError):
        TimeGrid(-1.0, 3)
    g = TimeGrid(0.5, 5)
    assert g.dt == pytest.approx(0.1)
    assert np.allclose(g.times, [0.0, 0.1, 0.2, 0.3, 0.4, 0.5])


def test_constraint_satisfied_every_step(eddy3, eddy_case_default):
    _, E, _, ops = eddy3
    case = eddy_case_default
    grid = TimeGrid(case.T, 5)
    load = lambda t: assemble_load(E, case.f_vec, t, rot_part=case.f_rot)
    sol = run(ops, load, grid)
    for n in range(1, grid.N + 1):
        lhs = np.linalg.norm(ops.B @ sol.u[n])
        assert lhs <= 1e-9 * (1.0 + np.linalg.norm(sol.u[n]))
    assert sol.block_residuals.max() <= 1e-10


def test_multiplier_shift_property(eddy3):
    # forcing by B^T c moves the multiplier by t_n * c and leaves u alone
    _, E, _, ops = eddy3
    rng = np.random.default_rng(9)
    nU, nM = ops.B.shape[1], ops.B.shape[0]
    base_load = rng.standard_normal(nU)
    c = rng.standard_normal(nM)
    grid = TimeGrid(0.6, 4)
    sol1 = run(ops, lambda t: base_load, grid)
    sol2 = run(ops, lambda t: base_load + ops.B.T @ c, grid)
    scale = max(1.0, np.abs(sol1.u).max())
    assert np.abs(sol2.u - sol1.u).max() <= 1e-10 * scale
    for n in range(grid.N + 1):
        expected = sol1.lam[n] + n * grid.dt * c
        assert np.abs(sol2.lam[n] - expected).max() <= 1e-9 * max(
            1.0, np.abs(expected).max()
        )


def test_factorization_reused_matches_per_step_solves(eddy3, eddy_case_default):
    # the once-factorized run must agree with independent per-step solves
    from mixpar.saddle import BlockSaddleSystem, solve

    _, E, _, ops = eddy3
    case = eddy_case_default
    grid = TimeGrid(case.T, 3)
    load = lambda t: assemble_load(E, case.f_vec, t, rot_part=case.f_rot)
    sol = run(ops, load, grid)
    A_dt = ops.R + grid.dt * ops.A
    u_prev = np.zeros(ops.B.shape[1])
    lam_prev = np.zeros(ops.B.shape[0])
    for n in range(1, grid.N + 1):
        t = n * grid.dt
        F = grid.dt * load(t) + ops.R @ u_prev + ops.B.T @ lam_prev
        u_prev, lam_prev, _ = solve(
            BlockSaddleSystem(A_dt, ops.B, F, np.zeros(ops.B.shape[0]))
        )
        assert np.abs(sol.u[n] - u_prev).max() <= 1e-12 * max(
            1.0, np.abs(u_prev).max()
        )
