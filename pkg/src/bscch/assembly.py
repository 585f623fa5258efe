"""P1 finite-element assembly on the bulk triangulation and boundary polygon.

Operators act on nodal coefficient vectors.  Bulk matrices are indexed by
vertex; surface matrices by position along the boundary loop.  Pair vectors
concatenate (bulk, surface) blocks.  The case-dependent trial/test space
reductions (Dirichlet couplings K=0 / L=0) are realized by sparse
prolongation matrices, so constraints hold exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import InvalidArgument
from .mesh import TriMesh, mesh_stats


def sigma(value):
    """Case weight: 1/x on (0,inf), 0 at the Dirichlet/Neumann endpoints."""
    v = float(value)
    if v < 0:
        raise InvalidArgument("coupling parameters must be nonnegative")
    if v == 0.0 or math.isinf(v):
        return 0.0
    return 1.0 / v


@dataclass(frozen=True)
class CouplingParams:
    """Extended coupling parameters (K, L) and trace weights (alpha, beta)."""

    K: float
    L: float
    alpha: float
    beta: float

    def __post_init__(self):
        for name in ("K", "L"):
            v = getattr(self, name)
            if not (v >= 0.0):  # also rejects nan
                raise InvalidArgument(f"{name} must be in [0, inf], got {v}")

    @property
    def sigma_K(self):
        return sigma(self.K)

    @property
    def sigma_L(self):
        return sigma(self.L)

    def validate_measures(self, area, perimeter):
        if abs(self.alpha * self.beta * area + perimeter) < 1e-12 * (area + perimeter):
            raise InvalidArgument("alpha*beta*|Omega| + |Gamma| must be nonzero")


@dataclass(frozen=True)
class Mobility:
    """Uniformly positive bounded mobility: m0 or m0 + m1*(1 - clamp(s)^2)."""

    kind: str = "constant"
    m0: float = 1.0
    m1: float = 0.0

    def __post_init__(self):
        if self.kind not in ("constant", "degenerate"):
            raise InvalidArgument(f"unknown mobility kind {self.kind!r}")
        if self.m0 <= 0:
            raise InvalidArgument("mobility floor m0 must be positive")
        if self.kind == "degenerate" and self.m1 < 0:
            raise InvalidArgument("degenerate mobility amplitude must be nonnegative")

    def __call__(self, s):
        if self.kind == "constant":
            return np.full_like(np.asarray(s, dtype=float), self.m0)
        return self.m0 + self.m1 * (1.0 - np.clip(s, -1.0, 1.0) ** 2)


@dataclass(frozen=True)
class VelocityField:
    """Prescribed velocities: rigid rotation in the bulk, rotation on the loop.

    The bulk field v = omega*(-y, x) is divergence-free with v.n = 0 on the
    unit circle; the surface field is tangent to each boundary edge by
    construction.  ``ramp`` > 0 scales both fields by min(1, t/ramp).
    """

    bulk_kind: str = "none"  # none | rigid_rotation
    omega: float = 0.0
    surf_kind: str = "none"  # none | rotation
    speed: float = 0.0
    ramp: float = 0.0

    def __post_init__(self):
        if self.bulk_kind not in ("none", "rigid_rotation"):
            raise InvalidArgument(f"unsupported bulk velocity kind {self.bulk_kind!r}")
        if self.surf_kind not in ("none", "rotation"):
            raise InvalidArgument(f"unsupported surface velocity kind {self.surf_kind!r}")

    @property
    def is_zero(self):
        return (self.bulk_kind == "none" or self.omega == 0.0) and (
            self.surf_kind == "none" or self.speed == 0.0
        )

    def factor(self, t):
        if self.ramp > 0:
            return min(1.0, t / self.ramp)
        return 1.0

    def bulk_at(self, points, t):
        if self.bulk_kind == "none":
            return np.zeros_like(points)
        w = self.omega * self.factor(t)
        return w * np.stack([-points[:, 1], points[:, 0]], axis=1)

    def surf_at(self, points, t):
        if self.surf_kind == "none":
            return np.zeros_like(points)
        s = self.speed * self.factor(t)
        return s * np.stack([-points[:, 1], points[:, 0]], axis=1)


@dataclass(frozen=True)
class FormsBundle:
    """Assembled core operators plus frequently used derived quantities."""

    M_bulk: sp.csr_matrix
    A_bulk: sp.csr_matrix
    M_surf: sp.csr_matrix
    A_surf: sp.csr_matrix
    trace: sp.csr_matrix  # (B, V) selection: boundary-loop position -> vertex
    area: float
    perimeter: float
    lump_bulk: np.ndarray
    lump_surf: np.ndarray

    @property
    def n_bulk(self):
        return self.M_bulk.shape[0]

    @property
    def n_surf(self):
        return self.M_surf.shape[0]

    @property
    def M_pair(self):
        return sp.block_diag([self.M_bulk, self.M_surf], format="csr")

    @property
    def A_pair(self):
        return sp.block_diag([self.A_bulk, self.A_surf], format="csr")

    def coupling_block(self, weight):
        """Pair-space matrix of the boundary mismatch form.

        Assembles the bilinear form (w*psi - phi, w*xi - eta) on the surface
        mass matrix, as a symmetric operator on pair vectors.
        """
        R, Ms = self.trace, self.M_surf
        top = sp.hstack([R.T @ Ms @ R, -weight * (R.T @ Ms)])
        bot = sp.hstack([-weight * (Ms @ R), weight**2 * Ms])
        return sp.vstack([top, bot]).tocsr()

    def split(self, pair_vec):
        return pair_vec[: self.n_bulk], pair_vec[self.n_bulk :]

    def join(self, bulk_vec, surf_vec):
        return np.concatenate([bulk_vec, surf_vec])


def _triangle_geometry(mesh: TriMesh):
    p = mesh.vertices[mesh.triangles]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    areas = 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
    # constant P1 gradients: grad N_i = rot90 of opposite edge / (2A)
    e = np.stack([p[:, 2] - p[:, 1], p[:, 0] - p[:, 2], p[:, 1] - p[:, 0]], axis=1)
    grads = np.stack([-e[:, :, 1], e[:, :, 0]], axis=2) / (2.0 * areas)[:, None, None]
    return p, areas, grads


def _scatter(rows, cols, vals, shape):
    return sp.coo_matrix((vals.ravel(), (rows.ravel(), cols.ravel())), shape=shape).tocsr()


def _tri_indices(triangles):
    rows = np.repeat(triangles, 3, axis=1)  # i index varies slowest
    cols = np.tile(triangles, (1, 3))
    return rows, cols


def assemble_core(mesh: TriMesh) -> FormsBundle:
    """Exact P1 mass/stiffness on the triangulation and the boundary polygon.

    The surface stiffness is the periodic arclength Laplacian on the
    boundary loop.
    """
    n = mesh.n_vertices
    _, areas, grads = _triangle_geometry(mesh)
    rows, cols = _tri_indices(mesh.triangles)

    mass_local = (np.ones((3, 3)) + np.eye(3)) / 12.0
    mvals = areas[:, None, None] * mass_local[None, :, :]
    M_bulk = _scatter(rows, cols, mvals.reshape(len(areas), 9), (n, n))

    gdot = np.einsum("tid,tjd->tij", grads, grads)
    avals = areas[:, None, None] * gdot
    A_bulk = _scatter(rows, cols, avals.reshape(len(areas), 9), (n, n))

    b = mesh.n_boundary
    loop = mesh.boundary_loop
    pe = np.stack([np.arange(b), (np.arange(b) + 1) % b], axis=1)  # positions
    pts = mesh.vertices[loop]
    h = np.linalg.norm(pts[pe[:, 1]] - pts[pe[:, 0]], axis=1)

    erows = np.repeat(pe, 2, axis=1)
    ecols = np.tile(pe, (1, 2))
    m_loc = np.array([[2.0, 1.0], [1.0, 2.0]]) / 6.0
    a_loc = np.array([[1.0, -1.0], [-1.0, 1.0]])
    M_surf = _scatter(erows, ecols, (h[:, None, None] * m_loc).reshape(b, 4), (b, b))
    A_surf = _scatter(erows, ecols, (a_loc[None] / h[:, None, None]).reshape(b, 4), (b, b))

    trace = sp.coo_matrix((np.ones(b), (np.arange(b), loop)), shape=(b, n)).tocsr()

    stats = mesh_stats(mesh)
    return FormsBundle(
        M_bulk=M_bulk,
        A_bulk=A_bulk,
        M_surf=M_surf,
        A_surf=A_surf,
        trace=trace,
        area=stats.area,
        perimeter=stats.perimeter,
        lump_bulk=np.asarray(M_bulk.sum(axis=1)).ravel(),
        lump_surf=np.asarray(M_surf.sum(axis=1)).ravel(),
    )


def assemble_mobility_stiffness(mesh: TriMesh, mob: Mobility, fld):
    """Stiffness weighted by the mobility at the element mean of ``fld``.

    Dispatches on the field length: bulk vertices -> bulk operator,
    boundary positions -> surface operator.
    """
    fld = np.asarray(fld, dtype=float)
    n, b = mesh.n_vertices, mesh.n_boundary
    if fld.shape == (n,):
        _, areas, grads = _triangle_geometry(mesh)
        means = fld[mesh.triangles].mean(axis=1)
        coef = mob(means) * areas
        gdot = np.einsum("tid,tjd->tij", grads, grads)
        rows, cols = _tri_indices(mesh.triangles)
        return _scatter(rows, cols, (coef[:, None, None] * gdot).reshape(len(areas), 9), (n, n))
    if fld.shape == (b,):
        pe = np.stack([np.arange(b), (np.arange(b) + 1) % b], axis=1)
        pts = mesh.vertices[mesh.boundary_loop]
        h = np.linalg.norm(pts[pe[:, 1]] - pts[pe[:, 0]], axis=1)
        means = 0.5 * (fld[pe[:, 0]] + fld[pe[:, 1]])
        coef = mob(means) / h
        a_loc = np.array([[1.0, -1.0], [-1.0, 1.0]])
        erows = np.repeat(pe, 2, axis=1)
        ecols = np.tile(pe, (1, 2))
        return _scatter(erows, ecols, (coef[:, None, None] * a_loc).reshape(b, 4), (b, b))
    raise InvalidArgument("field length matches neither bulk nor surface node count")


def assemble_convection(mesh: TriMesh, vel: VelocityField, t: float):
    """Convection operators with centroid quadrature.

    Returns ``(C_bulk, C_surf)`` with C[i, j] = integral of N_j (vel . grad
    N_i); pairing any field with a constant test vector gives zero exactly.
    """
    n, b = mesh.n_vertices, mesh.n_boundary

    if vel.bulk_kind == "none":
        C_bulk = sp.csr_matrix((n, n))
    else:
        p, areas, grads = _triangle_geometry(mesh)
        centroids = p.mean(axis=1)
        vc = vel.bulk_at(centroids, t)
        # vals[t, i, j] = area/3 * v.gradN_i; trial index j enters only
        # through N_j(centroid) = 1/3
        vdotg = np.einsum("td,tid->ti", vc, grads)
        vals = (areas[:, None, None] / 3.0) * vdotg[:, :, None] * np.ones((1, 1, 3))
        rows, cols = _tri_indices(mesh.triangles)
        C_bulk = _scatter(rows, cols, vals.reshape(len(areas), 9), (n, n))

    if vel.surf_kind == "none":
        C_surf = sp.csr_matrix((b, b))
    else:
        pe = np.stack([np.arange(b), (np.arange(b) + 1) % b], axis=1)
        pts = mesh.vertices[mesh.boundary_loop]
        tang = pts[pe[:, 1]] - pts[pe[:, 0]]
        h = np.linalg.norm(tang, axis=1)
        mid = 0.5 * (pts[pe[:, 0]] + pts[pe[:, 1]])
        wt = np.einsum("ed,ed->e", vel.surf_at(mid, t), tang / h[:, None])
        # dN/ds = (-1/h, +1/h), N_j(mid) = 1/2, edge length h
        dn = np.stack([-np.ones(b), np.ones(b)], axis=1)
        vals = (0.5 * wt)[:, None, None] * dn[:, :, None] * np.ones((1, 1, 2))
        erows = np.repeat(pe, 2, axis=1)
        ecols = np.tile(pe, (1, 2))
        C_surf = _scatter(erows, ecols, vals.reshape(b, 4), (b, b))

    return C_bulk, C_surf


@dataclass(frozen=True)
class CaseSpaces:
    """Dof reductions for one (K, L, alpha, beta) configuration.

    ``P_phase`` prolongs reduced (phi, psi) coordinates to the full pair
    vector (K = 0 slaves boundary phi to alpha*psi); ``P_chem`` does the
    same for (mu, theta) with (L, beta).  ``B_K``/``B_L`` are the sigma-
    weighted coupling blocks on the full pair space (zero matrices when the
    respective sigma vanishes).
    """

    cp: CouplingParams
    P_phase: sp.csr_matrix
    P_chem: sp.csr_matrix
    B_K: sp.csr_matrix
    B_L: sp.csr_matrix

    @property
    def n_phase(self):
        return self.P_phase.shape[1]

    @property
    def n_chem(self):
        return self.P_chem.shape[1]


def _dirichlet_prolongation(forms: FormsBundle, weight):
    """Prolongation slaving boundary bulk dofs to weight * surface dofs."""
    n, b = forms.n_bulk, forms.n_surf
    loop = forms.trace.indices  # vertex index per boundary position
    is_bnd = np.zeros(n, dtype=bool)
    is_bnd[loop] = True
    interior = np.flatnonzero(~is_bnd)
    n_red = len(interior) + b

    rows, cols, vals = [], [], []
    for r, vtx in enumerate(interior):
        rows.append(vtx)
        cols.append(r)
        vals.append(1.0)
    for pos in range(b):
        rows.append(loop[pos])
        cols.append(len(interior) + pos)
        vals.append(weight)
        rows.append(n + pos)
        cols.append(len(interior) + pos)
        vals.append(1.0)
    return sp.coo_matrix((vals, (rows, cols)), shape=(n + b, n_red)).tocsr()


def build_case_spaces(mesh: TriMesh, cp: CouplingParams, forms: FormsBundle | None = None) -> CaseSpaces:
    """Index maps and coupling blocks realizing the four K/L case families."""
    if forms is None:
        forms = assemble_core(mesh)
    cp.validate_measures(forms.area, forms.perimeter)
    n, b = forms.n_bulk, forms.n_surf
    eye = sp.identity(n + b, format="csr")

    P_phase = _dirichlet_prolongation(forms, cp.alpha) if cp.K == 0.0 else eye
    P_chem = _dirichlet_prolongation(forms, cp.beta) if cp.L == 0.0 else eye
    zero = sp.csr_matrix((n + b, n + b))
    B_K = cp.sigma_K * forms.coupling_block(cp.alpha) if cp.sigma_K > 0 else zero
    B_L = cp.sigma_L * forms.coupling_block(cp.beta) if cp.sigma_L > 0 else zero
    return CaseSpaces(cp=cp, P_phase=P_phase, P_chem=P_chem, B_K=B_K, B_L=B_L)
