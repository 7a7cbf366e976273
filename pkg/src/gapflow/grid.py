"""One-dimensional two-subdomain P1 meshes with interface bookkeeping.

Two geometries are supported:

* ``case1``: Omega_1 = (-l1, 0) and Omega_2 = (0, l2) touching at the
  single interface point x = 0; outer boundaries at -l1 and l2.
* ``case2``: Omega_1 = (-a, a) enclosed by Omega_2 = (-b, -a) u (a, b);
  interface points x = -a and x = a; Omega_1 has no outer boundary.

Each subdomain carries its own node set; an interface point is
represented by a *pair* of matched nodes (one per subdomain) at the
same coordinate.  Interface integrals use the counting measure over
the pairs, which is the 1D degeneration of the surface measure.

Assembled matrices per subdomain: stiffness K (unit diffusion,
homogeneous-Neumann, row sums zero), consistent mass M, and lumped
mass diagonal.  The diffusion weight kappa of Omega_2 is applied at
use time, not baked into K2.
"""

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from dataclasses import dataclass, field

from .errors import ConfigError


@dataclass(frozen=True)
class GeometryCase:
    """Geometry description: case tag, piece lengths, element counts."""

    case: str
    params: dict
    n1: int
    n2: int

    @classmethod
    def case1(cls, l1=1.0, l2=1.0, n1=8, n2=8):
        if l1 <= 0 or l2 <= 0:
            raise ConfigError("case1 requires l1 > 0 and l2 > 0")
        cls._check_counts(n1, n2)
        return cls("case1", {"l1": float(l1), "l2": float(l2)}, int(n1), int(n2))

    @classmethod
    def case2(cls, a=0.5, b=1.0, n1=8, n2=8):
        if not (0.0 < a < b):
            raise ConfigError("case2 requires 0 < a < b")
        cls._check_counts(n1, n2)
        return cls("case2", {"a": float(a), "b": float(b)}, int(n1), int(n2))

    @staticmethod
    def _check_counts(n1, n2):
        if n1 < 2 or n2 < 2:
            raise ConfigError("element counts must be >= 2 per subdomain piece")


@dataclass(frozen=True)
class CoupledField:
    """The state pair U = (u, v) of nodal vectors over the two subdomains."""

    u: np.ndarray
    v: np.ndarray

    def stacked(self):
        return np.concatenate([self.u, self.v])

    def copy(self):
        return CoupledField(self.u.copy(), self.v.copy())

    def __add__(self, other):
        return CoupledField(self.u + other.u, self.v + other.v)

    def __sub__(self, other):
        return CoupledField(self.u - other.u, self.v - other.v)

    def __rmul__(self, c):
        return CoupledField(c * self.u, c * self.v)


def _uniform_piece_matrices(x):
    """P1 stiffness/consistent-mass/lumped-mass for one uniform node array.

    A single element size h is used for every entry so stiffness row sums
    cancel exactly in floating point.
    """
    n = len(x)
    h = (x[-1] - x[0]) / (n - 1)
    ik = 1.0 / h
    main_k = np.full(n, 2.0 * ik)
    main_k[0] = main_k[-1] = ik
    off_k = np.full(n - 1, -ik)
    main_m = np.full(n, 2.0 * h / 3.0)
    main_m[0] = main_m[-1] = h / 3.0
    off_m = np.full(n - 1, h / 6.0)
    lumped = np.full(n, h)
    lumped[0] = lumped[-1] = h / 2.0
    K = sp.diags([off_k, main_k, off_k], [-1, 0, 1], format="csr")
    M = sp.diags([off_m, main_m, off_m], [-1, 0, 1], format="csr")
    return K, M, lumped


def _block_diag(mats):
    if len(mats) == 1:
        return mats[0].tocsr()
    return sp.block_diag(mats, format="csr")


@dataclass(frozen=True)
class TwoDomainMesh:
    """Discrete carrier of the pair state: nodes, matrices, interface pairs."""

    geom: GeometryCase
    x1: np.ndarray
    x2: np.ndarray
    K1: sp.csr_matrix
    K2: sp.csr_matrix
    M1: sp.csr_matrix
    M2: sp.csr_matrix
    lumped1: np.ndarray
    lumped2: np.ndarray
    # shape (npairs, 2): column 0 indexes x1, column 1 indexes x2
    pairs: np.ndarray
    piece_slices2: tuple = field(default=())

    @property
    def n1(self):
        return len(self.x1)

    @property
    def n2(self):
        return len(self.x2)

    @property
    def ndof(self):
        return self.n1 + self.n2

    def lumped_stacked(self):
        return np.concatenate([self.lumped1, self.lumped2])

    def field_from_callables(self, fu, fv):
        return CoupledField(
            np.asarray(fu(self.x1), dtype=float) + np.zeros_like(self.x1),
            np.asarray(fv(self.x2), dtype=float) + np.zeros_like(self.x2),
        )

    def constant_field(self, cu, cv):
        return CoupledField(np.full(self.n1, float(cu)), np.full(self.n2, float(cv)))


def build_mesh(geom: GeometryCase) -> TwoDomainMesh:
    """Assemble the two-subdomain mesh for a geometry case."""
    if geom.case == "case1":
        l1, l2 = geom.params["l1"], geom.params["l2"]
        x1 = np.linspace(-l1, 0.0, geom.n1 + 1)
        x2 = np.linspace(0.0, l2, geom.n2 + 1)
        K1, M1, lump1 = _uniform_piece_matrices(x1)
        K2, M2, lump2 = _uniform_piece_matrices(x2)
        pairs = np.array([[geom.n1, 0]], dtype=int)
        slices2 = (slice(0, geom.n2 + 1),)
    elif geom.case == "case2":
        a, b = geom.params["a"], geom.params["b"]
        x1 = np.linspace(-a, a, geom.n1 + 1)
        left = np.linspace(-b, -a, geom.n2 + 1)
        right = np.linspace(a, b, geom.n2 + 1)
        x2 = np.concatenate([left, right])
        K1, M1, lump1 = _uniform_piece_matrices(x1)
        Kl, Ml, ll = _uniform_piece_matrices(left)
        Kr, Mr, lr = _uniform_piece_matrices(right)
        K2 = _block_diag([Kl, Kr])
        M2 = _block_diag([Ml, Mr])
        lump2 = np.concatenate([ll, lr])
        # (-a): last node of the left piece pairs with the first Omega_1 node;
        # (+a): first node of the right piece pairs with the last Omega_1 node.
        pairs = np.array([[0, geom.n2], [geom.n1, geom.n2 + 1]], dtype=int)
        slices2 = (slice(0, geom.n2 + 1), slice(geom.n2 + 1, 2 * geom.n2 + 2))
    else:
        raise ConfigError(f"unknown geometry case {geom.case!r}")
    return TwoDomainMesh(
        geom=geom,
        x1=x1,
        x2=x2,
        K1=K1,
        K2=K2,
        M1=M1,
        M2=M2,
        lumped1=lump1,
        lumped2=lump2,
        pairs=pairs,
        piece_slices2=slices2,
    )


def _side_arrays(mesh, side):
    if side == 1:
        return mesh.K1, mesh.M1, mesh.lumped1
    if side == 2:
        return mesh.K2, mesh.M2, mesh.lumped2
    raise ConfigError("side must be 1 or 2")


def l2_norm(mesh, side, w):
    """||w||_{L^2(Omega_side)} via the consistent mass matrix."""
    _, M, _ = _side_arrays(mesh, side)
    w = np.asarray(w, dtype=float)
    return float(np.sqrt(max(w @ (M @ w), 0.0)))


def h1_seminorm(mesh, side, w):
    """|w|_{H^1(Omega_side)} = sqrt(w^T K w) (unit diffusion weight)."""
    K, _, _ = _side_arrays(mesh, side)
    w = np.asarray(w, dtype=float)
    return float(np.sqrt(max(w @ (K @ w), 0.0)))


def h1_norm(mesh, side, w):
    """Full H^1 norm, sqrt(L2^2 + seminorm^2)."""
    return float(np.sqrt(l2_norm(mesh, side, w) ** 2 + h1_seminorm(mesh, side, w) ** 2))


def interface_jump_norm(mesh, U: CoupledField) -> float:
    """sqrt(sum over interface pairs of (u_s - v_s)^2), counting measure."""
    du = U.u[mesh.pairs[:, 0]] - U.v[mesh.pairs[:, 1]]
    return float(np.sqrt(np.sum(du**2)))


def pair_norm(mesh, U: CoupledField) -> float:
    """L^2(Omega_1) x L^2(Omega_2) product norm of the pair."""
    return float(np.sqrt(l2_norm(mesh, 1, U.u) ** 2 + l2_norm(mesh, 2, U.v) ** 2))


def lumped_norm(mesh, U: CoupledField) -> float:
    """Norm induced by the lumped mass matrix on the stacked vector."""
    w = U.stacked()
    return float(np.sqrt(w @ (mesh.lumped_stacked() * w)))


def dual_norm_V0(mesh, side, w):
    """Dual norm of w over test functions vanishing at the interface.

    Computes sup { w^T M y : y_S = 0, y^T (K + M) y <= 1 } by solving the
    restricted SPD system (K + M) z = M w on the non-interface nodes; the
    value is sqrt((M w)_r^T z).
    """
    K, M, _ = _side_arrays(mesh, side)
    w = np.asarray(w, dtype=float)
    n = K.shape[0]
    iface = mesh.pairs[:, 0] if side == 1 else mesh.pairs[:, 1]
    keep = np.setdiff1d(np.arange(n), iface)
    A = (K + M).tocsc()[keep][:, keep]
    rhs = (M @ w)[keep]
    z = spla.spsolve(A.tocsc(), rhs)
    return float(np.sqrt(max(rhs @ z, 0.0)))


def merge_map(mesh) -> sp.csr_matrix:
    """Prolongation P from merged unknowns to the stacked (u, v) vector.

    Each interface pair shares one merged unknown; every other node keeps
    its own.  P has exactly one unit entry per stacked row, so P^T A P
    realizes value continuity exactly and P^T (lumped) P adds the two
    interface masses.
    """
    n1, n2 = mesh.n1, mesh.n2
    merged_index = np.full(n1 + n2, -1, dtype=int)
    nxt = 0
    for i in range(n1):
        merged_index[i] = nxt
        nxt += 1
    v_of_pair = {int(jv): int(iu) for iu, jv in mesh.pairs}
    for jj in range(n2):
        if jj in v_of_pair:
            merged_index[n1 + jj] = merged_index[v_of_pair[jj]]
        else:
            merged_index[n1 + jj] = nxt
            nxt += 1
    rows = np.arange(n1 + n2)
    data = np.ones(n1 + n2)
    return sp.csr_matrix((data, (rows, merged_index)), shape=(n1 + n2, nxt))
