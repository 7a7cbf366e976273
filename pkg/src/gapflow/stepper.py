"""Time integration of the coupled two-domain system.

One implicit Euler step solves, on the stacked nodal vector,

    Mhat (Uated - Un)/dt + A_alpha U + Mhat beta_lam(U) + Mhat pi(Un) = Mhat G,

with the monotone graph treated implicitly through its Yosida
approximation (Newton on the smooth system) and the Lipschitz reaction
pi treated explicitly.  A_alpha is the Euclidean gradient operator of
the coupling energy; mass lumping makes both nonlinearities nodewise.

The same engine runs four regimes:

* ``solve_finite_alpha`` - Robin coupling with constant or smoothly
  time-varying permeability alpha(t), evaluated at the end of each step;
* ``solve_split``        - the alpha = 0 limit, two independent
  homogeneous-Neumann problems;
* ``solve_merged``       - the alpha = +inf limit, interface node pairs
  eliminated into shared unknowns (value and variational flux
  continuity hold by construction);
* ``solve_blowup_and_extend`` - alpha(t) blowing up at T* < T: integrate
  until T* - delta, replace each interface pair by its lumped-mass
  weighted average, and continue with the merged dynamics to T.
"""

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from dataclasses import dataclass, field

from .errors import ConfigError, PreconditionError, StepFailure
from .grid import (
    CoupledField,
    build_mesh,
    interface_jump_norm,
    merge_map,
)
from .energy import bulk_matrix, coupling_matrix
from .monotone import MonotoneGraph

_PI_CHECK_SAMPLES = 256
_PI_CHECK_RANGE = 8.0


def _zero_pi(r):
    return np.zeros_like(r)


@dataclass
class ProblemSpec:
    """Physics of a run: geometry, diffusion, nonlinearities, data, horizon.

    ``pi1``/``pi2`` are Lipschitz reaction terms with declared constants
    ``L1``/``L2`` (spot-checked on seeded random pairs at construction).
    ``g1``/``g2`` are source callables ``(t, x) -> values`` or None.
    ``u0``/``v0`` are nodal arrays or callables of x.
    """

    geom: object
    kappa: float
    graph: MonotoneGraph
    u0: object
    v0: object
    T: float
    pi1: object = None
    pi2: object = None
    L1: float = 0.0
    L2: float = 0.0
    g1: object = None
    g2: object = None

    def __post_init__(self):
        if self.kappa <= 0:
            raise ConfigError("kappa must be > 0")
        if self.T <= 0:
            raise ConfigError("horizon T must be > 0")
        if self.pi1 is None:
            self.pi1 = _zero_pi
        if self.pi2 is None:
            self.pi2 = _zero_pi
        for name, pi, L in (("pi1", self.pi1, self.L1), ("pi2", self.pi2, self.L2)):
            if L < 0:
                raise ConfigError(f"{name}: Lipschitz constant must be >= 0")
            self._check_pi(name, pi, L)

    @staticmethod
    def _check_pi(name, pi, L):
        if abs(float(pi(np.array(0.0)))) > 1e-12:
            raise ConfigError(f"{name}(0) must be 0")
        rng = np.random.default_rng(2024)
        a = rng.uniform(-_PI_CHECK_RANGE, _PI_CHECK_RANGE, _PI_CHECK_SAMPLES)
        b = rng.uniform(-_PI_CHECK_RANGE, _PI_CHECK_RANGE, _PI_CHECK_SAMPLES)
        gap = np.abs(np.asarray(pi(a)) - np.asarray(pi(b)))
        bound = L * np.abs(a - b) * (1.0 + 1e-9) + 1e-12
        if np.any(gap > bound):
            raise ConfigError(f"{name} violates its declared Lipschitz constant {L}")


class PermeabilitySchedule:
    """Permeability alpha as constant, smooth in time, or finite-time blow-up."""

    def __init__(self, kind, value=None, fn=None, alpha0=None, t_star=None, p=1.0):
        self.kind = kind
        self._value = value
        self._fn = fn
        self.alpha0 = alpha0
        self.t_star = t_star
        self.p = p

    @classmethod
    def constant(cls, alpha):
        if alpha < 0:
            raise ConfigError("alpha must be >= 0")
        return cls("constant", value=float(alpha))

    @classmethod
    def smooth(cls, fn):
        return cls("smooth", fn=fn)

    @classmethod
    def blowup(cls, alpha0, t_star, p=1.0):
        if alpha0 <= 0:
            raise ConfigError("blow-up schedule requires alpha0 > 0")
        if t_star <= 0:
            raise ConfigError("blow-up schedule requires t_star > 0")
        if p < 1:
            raise ConfigError("blow-up exponent p must be >= 1")
        return cls("blowup", alpha0=float(alpha0), t_star=float(t_star), p=float(p))

    def alpha(self, t):
        if self.kind == "constant":
            return self._value
        if self.kind == "smooth":
            a = float(self._fn(t))
            if a < 0:
                raise ConfigError("smooth alpha(t) must stay >= 0")
            return a
        remaining = self.t_star - t
        if remaining <= 0:
            raise ConfigError("blow-up schedule evaluated at or beyond t_star")
        return self.alpha0 / remaining**self.p


@dataclass
class SolverConfig:
    """Discretization knobs.

    ``lam`` is the Yosida parameter (defaults to dt when None).  Newton
    converges when the residual of the /dt-form step equation drops below
    ``newton_tol * (1 + |constant part|)``.  ``delta_switch`` is the
    remaining time before T* at which a blow-up run hands off to the
    merged dynamics.
    """

    dt: float
    lam: float = None
    newton_tol: float = 1e-12
    newton_max: int = 50
    delta_switch: float = 1e-3

    def __post_init__(self):
        if self.dt <= 0:
            raise ConfigError("dt must be > 0")
        if self.lam is not None and self.lam <= 0:
            raise ConfigError("lam must be > 0")
        if self.newton_tol <= 0 or self.newton_max < 1:
            raise ConfigError("newton_tol must be > 0 and newton_max >= 1")
        if self.delta_switch <= 0:
            raise ConfigError("delta_switch must be > 0")

    @property
    def yosida_lam(self):
        return self.dt if self.lam is None else self.lam


@dataclass
class Trajectory:
    """Solver output: states on the time grid plus per-step diagnostics.

    ``xi``/``psi`` hold the nodal Yosida selections beta_lam(u),
    beta_lam(v) at each stored state.  ``alphas`` records the coupling
    strength used at each time (inf on the merged side of a hand-off).
    """

    times: np.ndarray
    us: np.ndarray
    vs: np.ndarray
    xi: np.ndarray
    psi: np.ndarray
    alphas: np.ndarray
    diagnostics: dict
    mesh: object
    annotations: dict = field(default_factory=dict)

    @property
    def n_times(self):
        return len(self.times)

    def state(self, k) -> CoupledField:
        return CoupledField(self.us[k], self.vs[k])

    def validate(self):
        if not np.all(np.diff(self.times) > 0):
            raise ConfigError("trajectory time grid must be strictly increasing")
        for key, arr in self.diagnostics.items():
            if not np.all(np.isfinite(arr)):
                raise ConfigError(f"diagnostic {key!r} contains non-finite values")


class _Engine:
    """Shared nonlinear stepping machinery for one regime."""

    def __init__(self, spec, mesh, config, mode):
        self.spec = spec
        self.mesh = mesh
        self.config = config
        self.mode = mode
        self.lam = config.yosida_lam
        self.graph = spec.graph
        self.A0 = bulk_matrix(mesh, spec.kappa)
        self.C = coupling_matrix(mesh) if mode == "coupled" else None
        mhat_full = mesh.lumped_stacked()
        self.mhat_full = mhat_full
        if mode == "merged":
            self.P = merge_map(mesh)
            self.A_red = (self.P.T @ self.A0 @ self.P).tocsr()
            self.mh = np.asarray(self.P.T @ mhat_full).ravel()
        else:
            self.P = None
            self.A_red = self.A0
            self.mh = mhat_full
        self.n1 = mesh.n1

    def reduce(self, w):
        if self.P is None:
            return w
        return np.asarray(self.P.T @ w).ravel()

    def prolong(self, x):
        if self.P is None:
            return x
        return np.asarray(self.P @ x).ravel()

    def to_field(self, x):
        w = self.prolong(x)
        return CoupledField(w[: self.n1], w[self.n1 :])

    def from_field(self, U: CoupledField):
        w = U.stacked()
        if self.P is None:
            return w
        # Interface pairs must agree; keep the shared value.
        x = np.zeros(self.A_red.shape[0])
        cols = self.P.indices
        x[cols] = w
        return x

    def stiffness(self, alpha):
        if self.mode == "coupled" and alpha != 0.0:
            return (self.A0 + alpha * self.C).tocsr()
        return self.A_red

    def explicit_vector(self, x, t_new):
        """Mhat-weighted explicit terms pi(Un) - G(t_new), reduced."""
        U = self.to_field(x)
        vec = np.concatenate([self.spec.pi1(U.u), self.spec.pi2(U.v)])
        if self.spec.g1 is not None:
            vec[: self.n1] -= np.asarray(self.spec.g1(t_new, self.mesh.x1), dtype=float)
        if self.spec.g2 is not None:
            vec[self.n1 :] -= np.asarray(self.spec.g2(t_new, self.mesh.x2), dtype=float)
        return self.reduce(self.mhat_full * vec)

    def advance(self, x, t_new, dt, alpha, step_index):
        A = self.stiffness(alpha)
        pig = self.explicit_vector(x, t_new)
        b = self.mh * x / dt - pig
        tol_eff = self.config.newton_tol * (1.0 + float(np.linalg.norm(b)))
        graph, lam, mh = self.graph, self.lam, self.mh

        def residual(y):
            return mh * y / dt + A @ y + mh * graph.yosida(lam, y) - b

        xk = x.copy()
        F = residual(xk)
        res = float(np.linalg.norm(F))
        iters = 0
        while res > tol_eff:
            if iters >= self.config.newton_max:
                raise StepFailure(
                    "Newton did not converge", step_index=step_index, residual=res
                )
            d = mh / dt + mh * graph.yosida_prime(lam, xk)
            J = (A + sp.diags(d)).tocsc()
            delta = spla.spsolve(J, -F)
            scale = 1.0
            for _ in range(12):
                x_try = xk + scale * delta
                F_try = residual(x_try)
                res_try = float(np.linalg.norm(F_try))
                if res_try < res or res_try <= tol_eff:
                    break
                scale *= 0.5
            xk, F, res = x_try, F_try, res_try
            iters += 1
        return xk, iters, res

    def diagnostics(self, x, alpha):
        U = self.to_field(x)
        w = U.stacked()
        bulk = 0.5 * float(U.u @ (self.mesh.K1 @ U.u)) + 0.5 * self.spec.kappa * float(
            U.v @ (self.mesh.K2 @ U.v)
        )
        jump = interface_jump_norm(self.mesh, U)
        en = bulk
        if self.mode == "coupled" and np.isfinite(alpha):
            en = bulk + 0.5 * alpha * jump**2
        moreau = float(np.sum(self.mhat_full * self.graph.moreau(self.lam, w)))
        mass = float(np.sum(self.mhat_full * w))
        xi = self.graph.yosida(self.lam, U.u)
        psi = self.graph.yosida(self.lam, U.v)
        return U, en, moreau, jump, mass, xi, psi


class _Recorder:
    def __init__(self, mesh):
        self.mesh = mesh
        self.times = []
        self.us = []
        self.vs = []
        self.xi = []
        self.psi = []
        self.alphas = []
        self.energy = []
        self.moreau = []
        self.jump = []
        self.mass = []
        self.newton = []

    def record(self, t, engine, x, alpha, iters):
        U, en, mo, ju, ma, xi, psi = engine.diagnostics(x, alpha)
        self.times.append(t)
        self.us.append(U.u.copy())
        self.vs.append(U.v.copy())
        self.xi.append(xi)
        self.psi.append(psi)
        self.alphas.append(alpha)
        self.energy.append(en)
        self.moreau.append(mo)
        self.jump.append(ju)
        self.mass.append(ma)
        self.newton.append(iters)

    def build(self, annotations):
        traj = Trajectory(
            times=np.asarray(self.times),
            us=np.asarray(self.us),
            vs=np.asarray(self.vs),
            xi=np.asarray(self.xi),
            psi=np.asarray(self.psi),
            alphas=np.asarray(self.alphas),
            diagnostics={
                "energy": np.asarray(self.energy),
                "moreau_energy": np.asarray(self.moreau),
                "jump": np.asarray(self.jump),
                "mass": np.asarray(self.mass),
                "newton_iters": np.asarray(self.newton, dtype=int),
            },
            mesh=self.mesh,
            annotations=annotations,
        )
        traj.validate()
        return traj


def _initial_field(spec, mesh) -> CoupledField:
    def nodal(data, x, name):
        if callable(data):
            vals = np.asarray(data(x), dtype=float) + np.zeros_like(x)
        else:
            vals = np.asarray(data, dtype=float)
            if vals.shape != x.shape:
                raise ConfigError(f"{name}: initial data length does not match mesh")
        if not np.all(np.isfinite(vals)):
            raise ConfigError(f"{name}: initial data must be finite")
        return vals

    return CoupledField(nodal(spec.u0, mesh.x1, "u0"), nodal(spec.v0, mesh.x2, "v0"))


def step(spec, schedule, config, t, U: CoupledField) -> CoupledField:
    """One implicit step of the coupled system from state U at time t."""
    mesh = build_mesh(spec.geom)
    engine = _Engine(spec, mesh, config, "coupled")
    alpha = schedule.alpha(t + config.dt)
    x, _, _ = engine.advance(U.stacked(), t + config.dt, config.dt, alpha, 0)
    return engine.to_field(x)


def _march(engine, recorder, x, t0, t_end, dt, alpha_of_t, step_offset=0):
    # Times come from the step index so runs sharing (t0, dt) produce
    # identical grids; only the final step may be shortened to hit t_end.
    t = t0
    k = step_offset
    k_local = 0
    while t < t_end - 1e-13 * max(1.0, t_end):
        t_new = min(t0 + (k_local + 1) * dt, t_end)
        dt_k = t_new - t
        alpha = alpha_of_t(t_new)
        x, iters, _ = engine.advance(x, t_new, dt_k, alpha, k)
        recorder.record(t_new, engine, x, alpha, iters)
        t = t_new
        k += 1
        k_local += 1
    return x, k


def solve_finite_alpha(spec, schedule, config) -> Trajectory:
    """March the Robin-coupled system over [0, T] for a constant or
    smooth permeability schedule."""
    if schedule.kind == "blowup":
        raise ConfigError("blow-up schedules are handled by solve_blowup_and_extend")
    mesh = build_mesh(spec.geom)
    engine = _Engine(spec, mesh, config, "coupled")
    U0 = _initial_field(spec, mesh)
    recorder = _Recorder(mesh)
    x = U0.stacked()
    recorder.record(0.0, engine, x, schedule.alpha(0.0), 0)
    _march(engine, recorder, x, 0.0, spec.T, config.dt, schedule.alpha)
    return recorder.build({"regime": "finite", "lam": engine.lam, "dt": config.dt})


def solve_split(spec, config) -> Trajectory:
    """The alpha = 0 limit: two decoupled homogeneous-Neumann problems."""
    mesh = build_mesh(spec.geom)
    engine = _Engine(spec, mesh, config, "split")
    U0 = _initial_field(spec, mesh)
    recorder = _Recorder(mesh)
    x = U0.stacked()
    recorder.record(0.0, engine, x, 0.0, 0)
    _march(engine, recorder, x, 0.0, spec.T, config.dt, lambda t: 0.0)
    return recorder.build({"regime": "split", "lam": engine.lam, "dt": config.dt})


def solve_merged(spec, config) -> Trajectory:
    """The alpha = +inf limit: interface pairs share one unknown."""
    mesh = build_mesh(spec.geom)
    U0 = _initial_field(spec, mesh)
    mismatch = np.max(
        np.abs(U0.u[mesh.pairs[:, 0]] - U0.v[mesh.pairs[:, 1]]), initial=0.0
    )
    if mismatch > 1e-10:
        raise PreconditionError(
            f"merged solve requires matching interface data (mismatch {mismatch:.3e})"
        )
    engine = _Engine(spec, mesh, config, "merged")
    recorder = _Recorder(mesh)
    x = engine.from_field(U0)
    recorder.record(0.0, engine, x, np.inf, 0)
    _march(engine, recorder, x, 0.0, spec.T, config.dt, lambda t: np.inf)
    return recorder.build({"regime": "merged", "lam": engine.lam, "dt": config.dt})


def solve_blowup_and_extend(spec, schedule, config) -> Trajectory:
    """Integrate a blow-up schedule to T* - delta, merge the interface by
    lumped-mass weighted averaging, and continue as the merged system."""
    if schedule.kind != "blowup":
        raise ConfigError("solve_blowup_and_extend requires a blow-up schedule")
    t_star, delta = schedule.t_star, config.delta_switch
    if t_star >= spec.T:
        raise ConfigError("blow-up time t_star must lie inside the horizon")
    if delta >= t_star:
        raise ConfigError("delta_switch must be smaller than t_star")
    t_handoff = t_star - delta
    mesh = build_mesh(spec.geom)
    pre = _Engine(spec, mesh, config, "coupled")
    recorder = _Recorder(mesh)
    U0 = _initial_field(spec, mesh)
    x = U0.stacked()
    recorder.record(0.0, pre, x, schedule.alpha(0.0), 0)
    x, k = _march(pre, recorder, x, 0.0, t_handoff, config.dt, schedule.alpha)

    U_pre = pre.to_field(x)
    pre_jump = interface_jump_norm(mesh, U_pre)
    post = _Engine(spec, mesh, config, "merged")
    xm = np.asarray(post.P.T @ (mesh.lumped_stacked() * x)).ravel() / post.mh
    merged_state = post.to_field(xm)
    gap = (U_pre - merged_state).stacked()
    discrepancy = float(np.sqrt(np.sum(mesh.lumped_stacked() * gap**2)))

    handoff_index = len(recorder.times) - 1
    # Replace the hand-off record with the merged state at the same time.
    for buf in (
        recorder.times,
        recorder.us,
        recorder.vs,
        recorder.xi,
        recorder.psi,
        recorder.alphas,
        recorder.energy,
        recorder.moreau,
        recorder.jump,
        recorder.mass,
        recorder.newton,
    ):
        buf.pop()
    recorder.record(t_handoff, post, xm, np.inf, 0)
    _march(post, recorder, xm, t_handoff, spec.T, config.dt, lambda t: np.inf, k)
    return recorder.build(
        {
            "regime": "blowup",
            "lam": pre.lam,
            "dt": config.dt,
            "handoff_time": t_handoff,
            "handoff_index": handoff_index,
            "pre_handoff_jump": pre_jump,
            "handoff_discrepancy": discrepancy,
            "t_star": t_star,
            "delta_switch": delta,
        }
    )
