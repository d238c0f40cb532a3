"""Discrete error norms, best-approximation diagnostics, and rate fits.

Error integrands evaluate the exact solution pointwise at quadrature
nodes (never its interpolant) against the discrete coefficient fields.
ErrorNorms stores the squared time-discrete quantities; reported values
are their square roots, so fitted rates read as O(h + dt).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg as spla

from . import mesh as meshmod
from .assembly import CellTables
from .elements import QuadratureRule
from .saddle import DENSE_LIMIT, NotDenseFeasible

__all__ = [
    "ErrorNorms", "LevelResult", "ConvergenceReport",
    "compute_errors", "best_approximation", "fit_rates", "r_energy",
    "TooFewLevels", "ROOTED_METRICS",
]

ROOTED_METRICS = ("err_u_maxR", "err_u_l2X", "err_lambda_l2M", "err_dtu")


class TooFewLevels(ValueError):
    """Rate fitting needs at least three refinement levels."""


@dataclass
class ErrorNorms:
    """Squared time-discrete error norms plus Test-1 style percentages.

    max_R : max_n <R e^n, e^n>
    l2_X  : dt sum_n ||e^n||_X^2
    l2_M  : dt sum_n ||lam(t_n) - lam_h^n||_M^2
    dt_R  : dt sum_k <R(du/dt(t_k) - dbar u_h^k), same>
    rel_E, rel_H : relative percentage errors of the recovered fields
        (eddy instance only; zero otherwise)
    """

    max_R: float = 0.0
    l2_X: float = 0.0
    l2_M: float = 0.0
    dt_R: float = 0.0
    rel_E: float = 0.0
    rel_H: float = 0.0

    def rooted(self):
        return {
            "err_u_maxR": float(np.sqrt(self.max_R)),
            "err_u_l2X": float(np.sqrt(self.l2_X)),
            "err_lambda_l2M": float(np.sqrt(self.l2_M)),
            "err_dtu": float(np.sqrt(self.dt_R)),
            "rel_E_pct": self.rel_E,
            "rel_H_pct": self.rel_H,
        }


@dataclass
class LevelResult:
    level: int
    h: float
    dt: float
    norms: ErrorNorms
    beta_h: float = 0.0
    alpha_h: float = 0.0
    lam_norm_max: float = 0.0
    u_norm_max: float = 0.0
    constraint_max: float = 0.0
    constraint_rel_max: float = 0.0
    n_primal: int = 0
    n_multiplier: int = 0
    probed: bool = False


@dataclass
class ConvergenceReport:
    case: str
    levels: list = field(default_factory=list)

    def __post_init__(self):
        hs = [lv.h for lv in self.levels]
        if any(b >= a for a, b in zip(hs, hs[1:])):
            raise ValueError("levels must be strictly decreasing in h")

    def rates(self, metrics):
        hs = np.array([lv.h for lv in self.levels])
        out = {}
        for m in metrics:
            vals = np.array([lv.norms.rooted()[m] for lv in self.levels])
            out[m] = fit_rates(hs, vals)
        return out


def r_energy(R, e):
    """Quadratic form <R e, e> of a coefficient vector."""
    e = np.asarray(e, dtype=float)
    return float(e @ (R @ e))


def _eval_primal(space, tab, full):
    """Field values (nc, nq, 2|1) and derivative data at quadrature points."""
    c = full[tab.dofs]
    if space.kind == "mini":
        c4 = c.reshape(len(tab.cells), 4, 2)
        vals = np.einsum("qs,csd->cqd", tab.vals, c4)
        jac = np.einsum("cqsg,csd->cqdg", tab.grads, c4)
        return vals, jac
    if space.kind == "edge":
        vals = np.einsum("cqed,ce->cqd", tab.wvals, c)
        rot = np.einsum("ce,ce->c", tab.wrot, c)
        return vals, rot
    raise ValueError(f"unsupported primal kind {space.kind!r}")


def _eval_multiplier(tab, full):
    c = full[tab.dofs]
    vals = np.einsum("qm,cm->cq", tab.vals, c)
    grad = np.einsum("cmd,cm->cd", tab.grads, c)
    return vals, grad


def compute_errors(solution, case, ops, quad_degree=4, steps=None):
    """Error norms of a time series against the manufactured case.

    steps, when given, is an inclusive (first, last) step range for the
    time sums; the squared l2-type norms are additive over disjoint
    ranges by construction.
    """
    primal, mult = ops.primal, ops.multiplier
    rule = QuadratureRule.for_degree(quad_degree)
    tu = CellTables(primal, rule)
    tm = CellTables(mult, rule)
    grid = solution.grid
    dt = grid.dt
    n0, n1 = steps if steps is not None else (1, grid.N)
    if not (1 <= n0 <= n1 <= grid.N):
        raise ValueError("invalid step range")

    mesh = primal.mesh
    is_eddy = case.kind == "eddy2d"
    pts_u = tu.qp.reshape(-1, 2)
    pts_m = tm.qp.reshape(-1, 2)
    nqu = rule.weights.size

    if is_eddy:
        cond = (mesh.cell_subdomain == meshmod.CONDUCTOR)[tu.cells]
        w_cond = tu.wdet * cond[:, None]
        wR = case.coeffs.sigma * w_cond
        inv_mu = 1.0 / case.coeffs.mu_mag
    else:
        wR = tu.wdet

    norms = ErrorNorms()
    relE_num = relE_den = relH_num = relH_den = 0.0
    l2X = l2M = dtR = 0.0

    for n in range(n0, n1 + 1):
        t = n * dt
        full_u = primal.extend(solution.u[n])
        full_lam = mult.extend(solution.lam[n])
        dcoef = primal.extend((solution.u[n] - solution.u[n - 1]) / dt)

        ue = case.u(pts_u, t).reshape(-1, nqu, 2)
        due = case.dudt(pts_u, t).reshape(-1, nqu, 2)

        if is_eddy:
            uh, rot_h = _eval_primal(primal, tu, full_u)
            duh, _ = _eval_primal(primal, tu, dcoef)
            e = ue - uh
            rote = case.rot_u(pts_u, t).reshape(-1, nqu) - rot_h[:, None]
            e2 = np.einsum("cqd,cqd->cq", e, e)
            r_en = float((wR * e2).sum())
            l2X += float((tu.wdet * (e2 + rote ** 2)).sum())
            de = due - duh
            de2 = np.einsum("cqd,cqd->cq", de, de)
            dtR += float((wR * de2).sum())
            relE_num += float((w_cond * de2).sum())
            relE_den += float(
                (w_cond * np.einsum("cqd,cqd->cq", due, due)).sum()
            )
            Hh = inv_mu * rot_h
            He = inv_mu * case.rot_u(pts_u, t).reshape(-1, nqu)
            relH_num += float((tu.wdet * (He - Hh[:, None]) ** 2).sum())
            relH_den += float((tu.wdet * He ** 2).sum())
        else:
            uh, jac_h = _eval_primal(primal, tu, full_u)
            duh, _ = _eval_primal(primal, tu, dcoef)
            e = ue - uh
            e2 = np.einsum("cqd,cqd->cq", e, e)
            r_en = float((wR * e2).sum())
            je = case.grad_u(pts_u, t).reshape(-1, nqu, 2, 2) - jac_h
            l2X += float(
                (tu.wdet * np.einsum("cqde,cqde->cq", je, je)).sum()
            )
            de = due - duh
            dtR += float((wR * np.einsum("cqd,cqd->cq", de, de)).sum())

        norms.max_R = max(norms.max_R, r_en)

        lam_e = case.multiplier(pts_m, t).reshape(-1, nqu)
        lam_h, grad_lam_h = _eval_multiplier(tm, full_lam)
        me = lam_e - lam_h
        m_en = float((tm.wdet * me ** 2).sum())
        if is_eddy:
            # multiplier norm is H1 on the insulator
            if case.grad_multiplier is not None:
                gexact = case.grad_multiplier(pts_m, t).reshape(-1, nqu, 2)
            else:
                gexact = np.zeros((len(tm.cells), nqu, 2))
            ge = gexact - grad_lam_h[:, None, :]
            m_en += float(
                (tm.wdet * np.einsum("cqd,cqd->cq", ge, ge)).sum()
            )
        l2M += m_en

    norms.l2_X = dt * l2X
    norms.l2_M = dt * l2M
    norms.dt_R = dt * dtR
    if is_eddy:
        norms.rel_E = 100.0 * float(np.sqrt(relE_num / relE_den)) \
            if relE_den > 0 else 0.0
        norms.rel_H = 100.0 * float(np.sqrt(relH_num / relH_den)) \
            if relH_den > 0 else 0.0
    return norms


def best_approximation(space, ops, case, times, quad_degree=4):
    """X-orthogonal projection error of the exact field per time sample.

    A computable upper-bound proxy for the best-approximation infimum
    appearing in the error estimates.
    """
    if space.num_free > DENSE_LIMIT:
        raise NotDenseFeasible(f"{space.num_free} DOFs exceed {DENSE_LIMIT}")
    rule = QuadratureRule.for_degree(quad_degree)
    tab = CellTables(space, rule)
    lu = spla.splu(ops.X.tocsc())
    pts = tab.qp.reshape(-1, 2)
    nq = rule.weights.size
    out = []
    for t in np.atleast_1d(times):
        if space.kind == "mini":
            je = case.grad_u(pts, t).reshape(-1, nq, 2, 2)
            loc = np.einsum("cq,cqsg,cqdg->csd", tab.wdet, tab.grads, je)
            loc = loc.reshape(len(tab.cells), 8)
        else:
            ue = case.u(pts, t).reshape(-1, nq, 2)
            rote = case.rot_u(pts, t).reshape(-1, nq)
            loc = np.einsum("cq,cqed,cqd->ce", tab.wdet, tab.wvals, ue)
            loc += np.einsum("cq,ce->ce", tab.wdet * rote, tab.wrot)
        rhs = np.zeros(space.ndof)
        np.add.at(rhs, tab.dofs.ravel(), loc.ravel())
        coef = space.extend(lu.solve(rhs[space.free]))

        if space.kind == "mini":
            _, jac_h = _eval_primal(space, tab, coef)
            je = case.grad_u(pts, t).reshape(-1, nq, 2, 2) - jac_h
            err2 = float((tab.wdet * np.einsum("cqde,cqde->cq", je, je)).sum())
        else:
            uh, rot_h = _eval_primal(space, tab, coef)
            e = case.u(pts, t).reshape(-1, nq, 2) - uh
            rote = case.rot_u(pts, t).reshape(-1, nq) - rot_h[:, None]
            err2 = float(
                (tab.wdet * (np.einsum("cqd,cqd->cq", e, e) + rote ** 2)).sum()
            )
        out.append(np.sqrt(err2))
    return np.asarray(out)


def fit_rates(hs, errors):
    """Least-squares slope of log(error) versus log(h)."""
    hs = np.asarray(hs, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if hs.size < 3:
        raise TooFewLevels("need at least 3 levels to fit a rate")
    errs = np.clip(errors, 1e-300, None)
    slope = np.polyfit(np.log(hs), np.log(errs), 1)[0]
    return float(slope)
