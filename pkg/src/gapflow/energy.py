"""Discrete convex energies for the coupled pair and their proximal maps.

Three regimes share the quadratic bulk part
0.5*u^T K1 u + 0.5*kappa*v^T K2 v:

* ``finite``  adds the interface penalty (alpha/2) * sum_S (u_s - v_s)^2;
* ``zero``    has no interface term (fully decoupled);
* ``infinity`` has no interface term but a restricted domain: fields
  whose interface jump exceeds a floating-point tolerance get +inf.

Gradients are Euclidean gradients of the discrete energy; the proximal
map is taken in the metric of a chosen mass matrix (lumped by default).
In the ``infinity`` regime the domain constraint is realized exactly by
eliminating each interface pair into one shared unknown.
"""

import math

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConfigError, NumericalError, UnsupportedRegimeError
from .grid import CoupledField, interface_jump_norm, merge_map

REGIMES = ("finite", "zero", "infinity")


class EnergySpec:
    """Energy description: mesh, diffusion weight kappa, coupling regime."""

    def __init__(self, mesh, kappa, regime="finite", alpha=0.0):
        if kappa <= 0:
            raise ConfigError("kappa must be > 0")
        if regime not in REGIMES:
            raise ConfigError(f"regime must be one of {REGIMES}")
        if regime == "finite" and alpha < 0:
            raise ConfigError("alpha must be >= 0 in the finite regime")
        self.mesh = mesh
        self.kappa = float(kappa)
        self.regime = regime
        self.alpha = float(alpha) if regime == "finite" else None

    @classmethod
    def finite(cls, mesh, kappa, alpha):
        return cls(mesh, kappa, "finite", alpha)

    @classmethod
    def zero(cls, mesh, kappa):
        return cls(mesh, kappa, "zero")

    @classmethod
    def infinity(cls, mesh, kappa):
        return cls(mesh, kappa, "infinity")

    def __repr__(self):
        if self.regime == "finite":
            return f"EnergySpec(finite, kappa={self.kappa}, alpha={self.alpha})"
        return f"EnergySpec({self.regime}, kappa={self.kappa})"


def coupling_matrix(mesh) -> sp.csr_matrix:
    """Interface coupling C with U^T C U = sum over pairs of (u_s - v_s)^2,
    as a sparse matrix on the stacked (u, v) vector."""
    n1, n2 = mesh.n1, mesh.n2
    rows, cols, data = [], [], []
    for iu, jv in mesh.pairs:
        gu, gv = int(iu), n1 + int(jv)
        rows += [gu, gu, gv, gv]
        cols += [gu, gv, gu, gv]
        data += [1.0, -1.0, -1.0, 1.0]
    return sp.csr_matrix((data, (rows, cols)), shape=(n1 + n2, n1 + n2))


def bulk_matrix(mesh, kappa) -> sp.csr_matrix:
    """blockdiag(K1, kappa*K2) on the stacked vector."""
    return sp.block_diag([mesh.K1, kappa * mesh.K2], format="csr")


def stiffness_operator(spec: EnergySpec) -> sp.csr_matrix:
    """Hessian of the (finite or zero) energy on the stacked vector."""
    A = bulk_matrix(spec.mesh, spec.kappa)
    if spec.regime == "finite" and spec.alpha != 0.0:
        A = (A + spec.alpha * coupling_matrix(spec.mesh)).tocsr()
    return A


def jump_tolerance(U: CoupledField) -> float:
    """Membership tolerance for the infinity regime's constrained domain."""
    sup = max(np.max(np.abs(U.u), initial=0.0), np.max(np.abs(U.v), initial=0.0))
    return 1e-12 * (1.0 + sup)


def energy(spec: EnergySpec, U: CoupledField) -> float:
    """Evaluate the regime energy; returns math.inf outside the domain."""
    mesh = spec.mesh
    bulk = 0.5 * float(U.u @ (mesh.K1 @ U.u)) + 0.5 * spec.kappa * float(
        U.v @ (mesh.K2 @ U.v)
    )
    if spec.regime == "finite":
        return bulk + 0.5 * spec.alpha * interface_jump_norm(mesh, U) ** 2
    if spec.regime == "zero":
        return bulk
    if interface_jump_norm(mesh, U) > jump_tolerance(U):
        return math.inf
    return bulk


def gradient(spec: EnergySpec, U: CoupledField) -> CoupledField:
    """Euclidean gradient of the energy (finite and zero regimes only)."""
    if spec.regime == "infinity":
        raise UnsupportedRegimeError(
            "the infinity regime has a constrained domain and no free gradient"
        )
    mesh = spec.mesh
    gu = mesh.K1 @ U.u
    gv = spec.kappa * (mesh.K2 @ U.v)
    if spec.regime == "finite" and spec.alpha != 0.0:
        du = U.u[mesh.pairs[:, 0]] - U.v[mesh.pairs[:, 1]]
        np.add.at(gu, mesh.pairs[:, 0], spec.alpha * du)
        np.add.at(gv, mesh.pairs[:, 1], -spec.alpha * du)
    return CoupledField(gu, gv)


def _mass_operator(mesh, weight):
    if weight == "lumped":
        return sp.diags(mesh.lumped_stacked(), format="csr")
    if weight == "consistent":
        return sp.block_diag([mesh.M1, mesh.M2], format="csr")
    raise ConfigError("weight must be 'lumped' or 'consistent'")


def prox(spec: EnergySpec, tau, W: CoupledField, weight="lumped") -> CoupledField:
    """argmin_U 0.5*||U - W||_Mhat^2 + tau * energy(spec, U).

    One SPD sparse solve for the finite/zero regimes; in the infinity
    regime interface pairs are merged into shared unknowns first, which
    enforces value continuity exactly.
    """
    if tau <= 0:
        raise ConfigError("tau must be > 0")
    mesh = spec.mesh
    Mhat = _mass_operator(mesh, weight)
    w = W.stacked()
    rhs = Mhat @ w
    if spec.regime == "infinity":
        P = merge_map(mesh)
        A = bulk_matrix(mesh, spec.kappa)
        system = (P.T @ (Mhat + tau * A) @ P).tocsc()
        reduced = P.T @ rhs
        sol = spla.spsolve(system, reduced)
        x = P @ sol
        res = system @ sol - reduced
        scale = max(1.0, float(np.linalg.norm(reduced)))
    else:
        A = stiffness_operator(spec)
        system = (Mhat + tau * A).tocsc()
        x = spla.spsolve(system, rhs)
        res = system @ x - rhs
        scale = max(1.0, float(np.linalg.norm(rhs)))
    resid = float(np.linalg.norm(res))
    if not np.all(np.isfinite(x)) or resid > 1e-8 * scale:
        raise NumericalError("prox linear solve failed", residual=resid)
    return CoupledField(x[: mesh.n1].copy(), x[mesh.n1 :].copy())
