"""Maximal monotone graphs beta = dj and their single-valued surrogates.

Every graph here is the subdifferential of a convex primitive j with
j(0) = 0 and j >= 0.  Algorithms never evaluate beta directly; they go
through the resolvent

    J_lam(r) = (I + lam*beta)^(-1)(r),

the Yosida approximation

    beta_lam(r) = (r - J_lam(r)) / lam,

and the Moreau envelope

    j_lam(r) = |r - J_lam(r)|^2 / (2*lam) + j(J_lam(r)),

all of which are single-valued, monotone in r, and 1/lam-Lipschitz
(for beta_lam).  Multivalued kinds (AbsSubdiff, IndicatorInterval) are
therefore fully usable without ever selecting an element of beta(r).

Scalar nonlinear resolvents (Cubic, OddPower) are solved by a
bisection-safeguarded Newton iteration, vectorized over numpy arrays.
"""

import numpy as np

from .errors import ConfigError, NumericalError

# Residual tolerance for scalar resolvent solves.  The nominal absolute
# tolerance 1e-14 is scaled by max(1, |r|): below that, float64 cannot
# represent the residual of s + lam*s^p - r for large r.
RESOLVENT_TOL = 1e-14
RESOLVENT_MAX_ITER = 100


def _as_array(r):
    arr = np.asarray(r, dtype=float)
    return arr, arr.ndim == 0


def _ret(value, scalar):
    return float(value) if scalar else value


class MonotoneGraph:
    """Base class: a maximal monotone graph beta = dj on the real line."""

    def j(self, r):
        """Convex primitive j(r); +inf outside the effective domain."""
        raise NotImplementedError

    def resolvent(self, lam, r):
        """J_lam(r), the unique s with s + lam*beta(s) containing r."""
        raise NotImplementedError

    def resolvent_prime(self, lam, r):
        """Derivative of J_lam at r (an element of the Clarke gradient
        at kinks); used by Newton solvers downstream."""
        raise NotImplementedError

    def yosida(self, lam, r):
        """beta_lam(r) = (r - J_lam(r)) / lam."""
        if lam <= 0:
            raise ConfigError("Yosida parameter lam must be > 0")
        r_arr, scalar = _as_array(r)
        out = (r_arr - self.resolvent(lam, r_arr)) / lam
        return _ret(out, scalar)

    def yosida_prime(self, lam, r):
        """Derivative of the Yosida approximation, (1 - J_lam'(r))/lam."""
        r_arr, scalar = _as_array(r)
        out = (1.0 - self.resolvent_prime(lam, r_arr)) / lam
        return _ret(out, scalar)

    def moreau(self, lam, r):
        """Moreau envelope j_lam(r); satisfies 0 <= j_lam(r) <= j(r)."""
        if lam <= 0:
            raise ConfigError("Yosida parameter lam must be > 0")
        r_arr, scalar = _as_array(r)
        s = self.resolvent(lam, r_arr)
        out = (r_arr - s) ** 2 / (2.0 * lam) + self.j(s)
        return _ret(out, scalar)

    def __repr__(self):
        return f"{type(self).__name__}()"


class Zero(MonotoneGraph):
    """beta = 0, j = 0.  The purely linear problem."""

    def j(self, r):
        r_arr, scalar = _as_array(r)
        return _ret(np.zeros_like(r_arr), scalar)

    def resolvent(self, lam, r):
        r_arr, scalar = _as_array(r)
        return _ret(r_arr.copy(), scalar)

    def resolvent_prime(self, lam, r):
        r_arr, scalar = _as_array(r)
        return _ret(np.ones_like(r_arr), scalar)


class Linear(MonotoneGraph):
    """beta(r) = c*r with slope c >= 0, j(r) = c*r^2/2."""

    def __init__(self, slope):
        if slope < 0:
            raise ConfigError("Linear graph requires slope >= 0")
        self.slope = float(slope)

    def j(self, r):
        r_arr, scalar = _as_array(r)
        return _ret(0.5 * self.slope * r_arr**2, scalar)

    def resolvent(self, lam, r):
        r_arr, scalar = _as_array(r)
        return _ret(r_arr / (1.0 + lam * self.slope), scalar)

    def resolvent_prime(self, lam, r):
        r_arr, scalar = _as_array(r)
        return _ret(np.full_like(r_arr, 1.0 / (1.0 + lam * self.slope)), scalar)

    def __repr__(self):
        return f"Linear(slope={self.slope})"


class OddPower(MonotoneGraph):
    """beta(r) = r^p for odd integer p >= 3, j(r) = |r|^(p+1)/(p+1).

    The resolvent solves s + lam*s^p = r by safeguarded Newton on
    [0, |r|] (the root is odd in r).
    """

    def __init__(self, p=3):
        if int(p) != p or p < 3 or p % 2 == 0:
            raise ConfigError("OddPower requires an odd integer p >= 3")
        self.p = int(p)

    def j(self, r):
        r_arr, scalar = _as_array(r)
        q = self.p + 1
        return _ret(np.abs(r_arr) ** q / q, scalar)

    def resolvent(self, lam, r):
        if lam <= 0:
            raise ConfigError("resolvent requires lam > 0")
        r_arr, scalar = _as_array(r)
        s = _power_resolvent(np.atleast_1d(r_arr), lam, self.p)
        if scalar:
            return float(s[0])
        return s.reshape(r_arr.shape)

    def resolvent_prime(self, lam, r):
        r_arr, scalar = _as_array(r)
        s = self.resolvent(lam, r_arr)
        s_arr = np.asarray(s, dtype=float)
        out = 1.0 / (1.0 + self.p * lam * s_arr ** (self.p - 1))
        return _ret(out, scalar)

    def __repr__(self):
        return f"OddPower(p={self.p})"


class Cubic(OddPower):
    """beta(r) = r^3, j(r) = r^4/4.  The standard Allen-Cahn choice."""

    def __init__(self):
        super().__init__(3)

    def __repr__(self):
        return "Cubic()"


class AbsSubdiff(MonotoneGraph):
    """beta = d|r| (multivalued at 0: beta(0) = [-1, 1]), j(r) = |r|.

    The resolvent is the soft-threshold map; the Moreau envelope is the
    Huber function.
    """

    def j(self, r):
        r_arr, scalar = _as_array(r)
        return _ret(np.abs(r_arr), scalar)

    def resolvent(self, lam, r):
        r_arr, scalar = _as_array(r)
        out = np.sign(r_arr) * np.maximum(np.abs(r_arr) - lam, 0.0)
        return _ret(out, scalar)

    def resolvent_prime(self, lam, r):
        r_arr, scalar = _as_array(r)
        out = (np.abs(r_arr) > lam).astype(float)
        return _ret(out, scalar)


class IndicatorInterval(MonotoneGraph):
    """beta = normal cone of [a, b] with a <= 0 <= b; j = indicator of [a, b].

    j(r) = 0 on [a, b] and +inf outside, so j(0) = 0 holds by the sign
    requirement on the bounds.  The resolvent is the projection onto
    [a, b] for every lam > 0.
    """

    def __init__(self, a, b):
        if not (a <= 0.0 <= b):
            raise ConfigError("IndicatorInterval requires a <= 0 <= b")
        if a >= b:
            raise ConfigError("IndicatorInterval requires a < b")
        self.a = float(a)
        self.b = float(b)

    def j(self, r):
        r_arr, scalar = _as_array(r)
        out = np.where((r_arr >= self.a) & (r_arr <= self.b), 0.0, np.inf)
        return _ret(out, scalar)

    def resolvent(self, lam, r):
        r_arr, scalar = _as_array(r)
        return _ret(np.clip(r_arr, self.a, self.b), scalar)

    def resolvent_prime(self, lam, r):
        r_arr, scalar = _as_array(r)
        out = ((r_arr > self.a) & (r_arr < self.b)).astype(float)
        return _ret(out, scalar)

    def __repr__(self):
        return f"IndicatorInterval(a={self.a}, b={self.b})"


def _power_resolvent(r, lam, p):
    """Solve s + lam*s^p = r elementwise, p odd.

    Newton iteration on t = |s| over the bracket [0, |r|], falling back
    to bisection whenever a Newton step leaves the bracket.  Converges
    to an absolute residual of RESOLVENT_TOL * max(1, |r|).
    """
    sign = np.sign(r)
    a = np.abs(r)
    lo = np.zeros_like(a)
    hi = a.copy()
    # Initial guess: exact for small a, asymptotically right for large a.
    t = np.where(lam * a ** (p - 1) < 1.0, a / (1.0 + lam), (a / lam) ** (1.0 / p))
    t = np.clip(t, lo, hi)
    tol = RESOLVENT_TOL * np.maximum(1.0, a)
    for _ in range(RESOLVENT_MAX_ITER):
        f = t + lam * t**p - a
        done = np.abs(f) <= tol
        if done.all():
            break
        lo = np.where(f < 0, t, lo)
        hi = np.where(f > 0, t, hi)
        step = f / (1.0 + p * lam * t ** (p - 1))
        t_new = t - step
        out_of_bracket = (t_new <= lo) | (t_new >= hi)
        t_new = np.where(out_of_bracket & ~done, 0.5 * (lo + hi), t_new)
        t = np.where(done, t, t_new)
        # Bracket collapse: no representable point strictly inside.
        stuck = (hi - lo) <= 2.0 * np.finfo(float).eps * np.maximum(1.0, hi)
        if (done | stuck).all():
            break
    f = t + lam * t**p - a
    bad = np.abs(f) > 1e3 * tol
    if bad.any():
        raise NumericalError(
            "power-graph resolvent did not converge",
            residual=float(np.max(np.abs(f[bad]))),
        )
    return sign * t


_GRAPH_KINDS = {
    "zero": Zero,
    "linear": Linear,
    "cubic": Cubic,
    "abs": AbsSubdiff,
    "interval": IndicatorInterval,
    "odd_power": OddPower,
}


def make_graph(kind, **params):
    """Build a graph from its config name ('zero', 'linear', 'cubic',
    'abs', 'interval', 'odd_power') and keyword parameters."""
    try:
        cls = _GRAPH_KINDS[kind]
    except KeyError:
        raise ConfigError(
            f"unknown graph kind {kind!r}; expected one of {sorted(_GRAPH_KINDS)}"
        ) from None
    try:
        return cls(**params)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for graph kind {kind!r}: {exc}") from None
