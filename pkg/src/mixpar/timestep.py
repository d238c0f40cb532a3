"""Backward-Euler loop for the per-step saddle systems.

Each step solves

    (R + dt A) u^n + B^T lam^n = dt f(t_n) + R u^{n-1} + B^T lam^{n-1}
    B u^n = g(t_n)

starting from u^0 = u_{0,h} and lam^0 = 0.  The block matrix is
time-independent, so it is factorized once and reused for all steps.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .saddle import SaddleSolver, SingularSystem

__all__ = ["TimeGrid", "TimeSeriesSolution", "run"]


@dataclass(frozen=True)
class TimeGrid:
    """Uniform partition of [0, T] into N steps."""

    T: float
    N: int

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be >= 1")
        if self.T <= 0.0:
            raise ValueError("T must be positive")

    @property
    def dt(self):
        return self.T / self.N

    @property
    def times(self):
        return self.dt * np.arange(self.N + 1)


@dataclass
class TimeSeriesSolution:
    """Coefficients (u^n, lam^n) for n = 0..N plus per-step residuals."""

    u: np.ndarray            # (N+1, n_primal_free)
    lam: np.ndarray          # (N+1, n_multiplier_free)
    grid: TimeGrid
    block_residuals: np.ndarray = field(default_factory=lambda: np.zeros(0))
    constraint_residuals: np.ndarray = field(default_factory=lambda: np.zeros(0))


def run(ops, load, grid, u0h=None, g=None, residual_tol=1e-10):
    """Advance the backward-Euler scheme over the whole time grid.

    load(t) returns the free-DOF moment vector of f(t); g(t), when
    given, returns the constraint data (defaults to zero, as in both
    problem instances).  u0h is the free-DOF initial coefficient vector
    (defaults to zero).
    """
    nU = ops.A.shape[0]
    nM = ops.B.shape[0]
    dt = grid.dt
    A_dt = (ops.R + dt * ops.A).tocsr()
    solver = SaddleSolver(A_dt, ops.B, ops.mean_row, residual_tol)

    u = np.zeros((grid.N + 1, nU))
    lam = np.zeros((grid.N + 1, nM))
    if u0h is not None:
        if len(u0h) != nU:
            raise ValueError("u0h length does not match the free primal DOFs")
        u[0] = u0h
    block_res = np.zeros(grid.N)
    constraint_res = np.zeros(grid.N)

    BT = ops.B.T.tocsr()
    for n in range(1, grid.N + 1):
        t = n * dt
        F = dt * load(t) + ops.R @ u[n - 1] + BT @ lam[n - 1]
        G = g(t) if g is not None else np.zeros(nM)
        try:
            un, ln, info = solver.solve(F, G)
        except SingularSystem as err:
            raise SingularSystem(f"step {n} (t={t:g}): {err}") from err
        u[n] = un
        lam[n] = ln
        block_res[n - 1] = info.block_residual
        constraint_res[n - 1] = info.constraint_residual

    return TimeSeriesSolution(u, lam, grid, block_res, constraint_res)
