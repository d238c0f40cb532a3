"""Global operator assembly for the Stokes and eddy-current instances.

Assembly loops run in deterministic cell order via whole-mesh einsum
contractions followed by a single COO scatter, so serial runs produce
bitwise-identical matrices.  Operators are reduced to the free DOFs of
their spaces (essential conditions are homogeneous).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.io
import scipy.sparse as sp

from . import mesh as meshmod
from .elements import QuadratureRule, bubble_values, p1_values
from .spaces import FeSpace

__all__ = [
    "Coefficients", "OperatorSet", "CellTables",
    "assemble_stokes", "assemble_eddy2d", "assemble_load",
    "export_matrix", "import_matrix",
    "SpaceMismatch", "NoConductorCells",
]


class SpaceMismatch(ValueError):
    """Spaces passed to an assembly routine do not fit together."""


class NoConductorCells(ValueError):
    """The degenerate mass term has empty support."""


@dataclass(frozen=True)
class Coefficients:
    nu: float = 1.0
    sigma: float = 1.0
    eps: float = 1.0
    mu_mag: float = 1.0   # magnetic coefficient; 'mu' names the multiplier


@dataclass
class OperatorSet:
    """Assembled free-DOF operators of one problem instance.

    R is the (possibly degenerate) operator inside the time derivative,
    A the stiffness-like operator, B the constraint operator (rows are
    multiplier DOFs).  X and M are the primal and multiplier inner
    product matrices used for norms and the inf-sup/coercivity
    probes; mean_row is
    the pressure mean-value functional (Stokes only).
    """

    R: sp.spmatrix
    A: sp.spmatrix
    B: sp.spmatrix
    X: sp.spmatrix
    M: sp.spmatrix
    primal: FeSpace
    multiplier: FeSpace
    coeffs: Coefficients = field(default_factory=Coefficients)
    mean_row: np.ndarray | None = None


class CellTables:
    """Quadrature geometry and basis values per active cell of a space.

    Shared by assembly and error integration.  Fields depend on kind:
    p1 / multiplier carry `vals` (nq, 3) and `grads` (nc, 3, 2); mini
    carries `vals` (nq, 4) and `grads` (nc, nq, 4, 2) for the scalar
    P1+bubble basis; edge carries `wvals` (nc, nq, 3, 2) and `wrot`
    (nc, 3).
    """

    def __init__(self, space, rule=None):
        if rule is None:
            rule = QuadratureRule.for_degree(4)
        self.space = space
        self.rule = rule
        mesh = space.mesh
        cells = space.active_cells
        pts = mesh.vertices[mesh.cells[cells]]          # (nc, 3, 2)
        d1 = pts[:, 1] - pts[:, 0]
        d2 = pts[:, 2] - pts[:, 0]
        det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
        self.area = 0.5 * det
        # physical gradients of the barycentric coordinates
        g = np.empty((len(cells), 3, 2))
        for k in range(3):
            e = pts[:, (k + 2) % 3] - pts[:, (k + 1) % 3]
            g[:, k, 0] = -e[:, 1]
            g[:, k, 1] = e[:, 0]
        g /= det[:, None, None]
        self.lam_grads = g

        bary = rule.points
        self.qp = np.einsum("qk,ckd->cqd", bary, pts)
        self.wdet = np.outer(det, rule.weights)  # weights sum to A per cell
        self.dofs = space.cell_dofs
        self.cells = cells

        kind = space.kind
        if kind in ("p1", "multiplier"):
            self.vals = p1_values(bary)
            self.grads = g
        elif kind == "mini":
            vals = np.empty((len(bary), 4))
            vals[:, :3] = p1_values(bary)
            vals[:, 3] = bubble_values(bary)
            self.vals = vals
            grads = np.empty((len(cells), len(bary), 4, 2))
            grads[:, :, :3, :] = g[:, None, :, :]
            l0, l1, l2 = bary[:, 0], bary[:, 1], bary[:, 2]
            grads[:, :, 3, :] = 27.0 * (
                np.einsum("q,cd->cqd", l1 * l2, g[:, 0])
                + np.einsum("q,cd->cqd", l0 * l2, g[:, 1])
                + np.einsum("q,cd->cqd", l0 * l1, g[:, 2])
            )
            self.grads = grads
        elif kind == "edge":
            loc = mesh.cell_edge_local[cells]           # (nc, 3, 2)
            la, lb = loc[:, :, 0], loc[:, :, 1]
            ga = np.take_along_axis(g, la[:, :, None], axis=1)
            gb = np.take_along_axis(g, lb[:, :, None], axis=1)
            lam = p1_values(bary)                       # (nq, 3)
            la_vals = lam[:, la]                        # (nq, nc, 3)
            lb_vals = lam[:, lb]
            wvals = (
                np.einsum("qce,ced->cqed", la_vals, gb)
                - np.einsum("qce,ced->cqed", lb_vals, ga)
            )
            self.wvals = wvals
            self.wrot = 2.0 * (
                ga[:, :, 0] * gb[:, :, 1] - ga[:, :, 1] * gb[:, :, 0]
            )
        else:
            raise ValueError(f"unknown space kind {kind!r}")


def _scatter_square(local, dofs, ndof):
    nl = dofs.shape[1]
    rows = np.repeat(dofs, nl, axis=1).ravel()
    cols = np.tile(dofs, (1, nl)).ravel()
    mat = sp.coo_matrix((local.ravel(), (rows, cols)), shape=(ndof, ndof))
    return mat.tocsr()

def _scatter_rect(local, row_dofs, col_dofs, shape):
    nr, nc_ = row_dofs.shape[1], col_dofs.shape[1]
    rows = np.repeat(row_dofs, nc_, axis=1).ravel()
    cols = np.tile(col_dofs, (1, nr)).ravel()
    mat = sp.coo_matrix((local.ravel(), (rows, cols)), shape=shape)
    return mat.tocsr()

def _scatter_vector(local, dofs, ndof):
    out = np.zeros(ndof)
    np.add.at(out, dofs.ravel(), local.ravel())
    return out

def _reduce(mat, row_free, col_free):
    return mat[row_free][:, col_free]


def _interleave_vector_blocks(scalar_local):
    """Embed an (nc, ns, ns) scalar block as (nc, 2ns, 2ns) per component."""
    nc_, ns, _ = scalar_local.shape
    out = np.zeros((nc_, 2 * ns, 2 * ns))
    out[:, 0::2, 0::2] = scalar_local
    out[:, 1::2, 1::2] = scalar_local
    return out


def assemble_stokes(velocity, pressure, nu=1.0, quad_degree=4):
    """Operators of the transient Stokes instance on the MINI pair.

    R is the vector L2 mass, A = nu * vector stiffness, and
    B[q, v] = -int q div(v), so the multiplier equation reads B u = 0.
    X (the H1_0 inner product) shares the stiffness assembly, making
    A = nu * X an exact matrix identity.
    """
    if velocity.mesh is not pressure.mesh:
        raise SpaceMismatch("velocity and pressure live on different meshes")
    if velocity.kind != "mini" or pressure.kind != "p1":
        raise SpaceMismatch("expected mini velocity and p1 pressure")
    rule = QuadratureRule.for_degree(quad_degree)
    tv = CellTables(velocity, rule)
    tp = CellTables(pressure, rule)

    mass4 = np.einsum("cq,qs,qt->cst", tv.wdet, tv.vals, tv.vals)
    stiff4 = np.einsum("cq,cqsg,cqtg->cst", tv.wdet, tv.grads, tv.grads)
    R_full = _scatter_square(_interleave_vector_blocks(mass4),
                             tv.dofs, velocity.ndof)
    X_full = _scatter_square(_interleave_vector_blocks(stiff4),
                             tv.dofs, velocity.ndof)

    # -int q d_i(phi) against pressure basis q
    div_loc = -np.einsum("cq,qm,cqtd->cmtd", tv.wdet, tp.vals, tv.grads)
    div_loc = div_loc.reshape(len(tv.cells), 3, 8)
    B_full = _scatter_rect(div_loc, tp.dofs, tv.dofs,
                           (pressure.ndof, velocity.ndof))

    mp = np.einsum("cq,qm,qn->cmn", tp.wdet, tp.vals, tp.vals)
    M_full = _scatter_square(mp, tp.dofs, pressure.ndof)
    mean_full = _scatter_vector(
        np.einsum("cq,qm->cm", tp.wdet, tp.vals), tp.dofs, pressure.ndof
    )

    vf, pf = velocity.free, pressure.free
    X = _reduce(X_full, vf, vf)
    ops = OperatorSet(
        R=_reduce(R_full, vf, vf),
        A=(nu * X).tocsr(),
        B=_reduce(B_full, pf, vf),
        X=X.tocsr(),
        M=_reduce(M_full, pf, pf),
        primal=velocity,
        multiplier=pressure,
        coeffs=Coefficients(nu=nu),
        mean_row=mean_full[pf],
    )
    return ops


def assemble_eddy2d(edge, multiplier, sigma=1.0, eps=1.0, mu_mag=1.0,
                    quad_degree=4):
    """Operators of the 2D eddy-current instance on edge elements.

    R is the sigma-weighted edge mass restricted to conductor cells,
    A = (1/mu_mag) * rot-rot, and B[m, v] = eps * int_{insulator}
    v . grad(m).  X is the H(curl) inner product with unit weights and
    M the H1 inner product of the multiplier space.
    """
    if edge.mesh is not multiplier.mesh:
        raise SpaceMismatch("edge and multiplier live on different meshes")
    if edge.kind != "edge" or multiplier.kind != "multiplier":
        raise SpaceMismatch("expected edge primal and multiplier spaces")
    mesh = edge.mesh
    cond = np.where(mesh.cell_subdomain == meshmod.CONDUCTOR)[0]
    if len(cond) == 0 or sigma <= 0.0:
        raise NoConductorCells("degenerate mass term has empty support")

    rule = QuadratureRule.for_degree(quad_degree)
    te = CellTables(edge, rule)
    tm = CellTables(multiplier, rule)

    mass_loc = np.einsum("cq,cqed,cqfd->cef", te.wdet, te.wvals, te.wvals)
    rot_loc = np.einsum("c,ce,cf->cef", te.area, te.wrot, te.wrot)

    in_cond = np.isin(te.cells, cond)
    R_full = sigma * _scatter_square(mass_loc[in_cond], te.dofs[in_cond],
                                     edge.ndof)
    A_full = (1.0 / mu_mag) * _scatter_square(rot_loc, te.dofs, edge.ndof)
    X_full = _scatter_square(mass_loc + rot_loc, te.dofs, edge.ndof)

    # edge tables restricted to the multiplier's insulator cells
    pos = {c: i for i, c in enumerate(te.cells)}
    ins_idx = np.array([pos[c] for c in tm.cells], dtype=np.intp)
    b_loc = eps * np.einsum("cq,cqed,cmd->cme",
                            te.wdet[ins_idx], te.wvals[ins_idx], tm.grads)
    B_full = _scatter_rect(b_loc, tm.dofs, te.dofs[ins_idx],
                           (multiplier.ndof, edge.ndof))

    m_mass = np.einsum("cq,qm,qn->cmn", tm.wdet, tm.vals, tm.vals)
    m_stiff = np.einsum("c,cmd,cnd->cmn", tm.area, tm.grads, tm.grads)
    M_full = _scatter_square(m_mass + m_stiff, tm.dofs, multiplier.ndof)

    ef, mf = edge.free, multiplier.free
    return OperatorSet(
        R=_reduce(R_full, ef, ef).tocsr(),
        A=_reduce(A_full, ef, ef).tocsr(),
        B=_reduce(B_full, mf, ef),
        X=_reduce(X_full, ef, ef),
        M=_reduce(M_full, mf, mf),
        primal=edge,
        multiplier=multiplier,
        coeffs=Coefficients(sigma=sigma, eps=eps, mu_mag=mu_mag),
        mean_row=None,
    )


def assemble_load(space, f, t, rot_part=None, quad_degree=4, reduce=True):
    """Quadrature load vector int f(t) . basis (+ int rot_part rot basis).

    f maps (points (m, 2), t) to (m,) for scalar kinds or (m, 2) for
    vector kinds.  rot_part, for edge spaces only, adds the moment of a
    scalar field against the basis curls (the weak-form contribution of
    a magnetization-like source).
    """
    rule = QuadratureRule.for_degree(quad_degree)
    tab = CellTables(space, rule)
    nc_, nq = tab.wdet.shape
    fq = np.asarray(f(tab.qp.reshape(-1, 2), t), dtype=float)

    if space.kind in ("p1", "multiplier"):
        fq = fq.reshape(nc_, nq)
        loc = np.einsum("cq,qm->cm", tab.wdet * fq, tab.vals)
    elif space.kind == "mini":
        fq = fq.reshape(nc_, nq, 2)
        loc = np.einsum("cq,qs,cqd->csd", tab.wdet, tab.vals, fq)
        loc = loc.reshape(nc_, 8)
    elif space.kind == "edge":
        fq = fq.reshape(nc_, nq, 2)
        loc = np.einsum("cq,cqed,cqd->ce", tab.wdet, tab.wvals, fq)
        if rot_part is not None:
            rq = np.asarray(rot_part(tab.qp.reshape(-1, 2), t), dtype=float)
            loc = loc + np.einsum("cq,ce->ce",
                                  tab.wdet * rq.reshape(nc_, nq), tab.wrot)
    else:
        raise ValueError(f"unknown space kind {space.kind!r}")

    full = _scatter_vector(loc, tab.dofs, space.ndof)
    return full[space.free] if reduce else full


def export_matrix(path, mat):
    """Write a matrix in MatrixMarket coordinate format."""
    scipy.io.mmwrite(str(path), sp.coo_matrix(mat))


def import_matrix(path):
    """Read a MatrixMarket file back as CSR."""
    return sp.csr_matrix(scipy.io.mmread(str(path)))
