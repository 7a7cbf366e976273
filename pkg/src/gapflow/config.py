"""Run configuration: strict JSON schema validation and preset builders.

A run config is a nested JSON object with blocks ``geometry``,
``physics``, ``alpha``, ``time``, ``solver``, and optionally
``experiment`` and ``output_dir``.  Unknown keys are rejected anywhere;
validation errors name the offending field by its dotted path
(e.g. ``time.dt``).

Initial-data presets produce the base fields; an optional ``family``
sub-block attaches a per-alpha data family

    u0(alpha) = u0 + s(alpha) * amplitude * bump,
    v0(alpha) = v0 - s(alpha) * amplitude * bump,

with s = sqrt(alpha) or 1/sqrt(alpha) and a Gaussian bump centered on
the interface.  Rate studies use the family to realize data that
converge to the limit data at exactly the admissible order; the limit
runs always use the base fields.
"""

import json

import numpy as np

from .errors import ConfigError
from .grid import GeometryCase
from .monotone import make_graph
from .stepper import PermeabilitySchedule, ProblemSpec, SolverConfig


def _type_name(value):
    return type(value).__name__


def _req(block, key, path):
    if key not in block:
        raise ConfigError(f"{path}.{key}: missing required field", field=f"{path}.{key}")
    return block[key]


def _num(block, key, path, default=None, positive=False, nonnegative=False):
    if key not in block:
        if default is None:
            raise ConfigError(f"{path}.{key}: missing required field", field=f"{path}.{key}")
        return default
    v = block[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{path}.{key}: expected a number, got {_type_name(v)}", field=f"{path}.{key}")
    v = float(v)
    if positive and v <= 0:
        raise ConfigError(f"{path}.{key}: must be > 0", field=f"{path}.{key}")
    if nonnegative and v < 0:
        raise ConfigError(f"{path}.{key}: must be >= 0", field=f"{path}.{key}")
    return v


def _int(block, key, path, default=None, minimum=None):
    if key not in block:
        if default is None:
            raise ConfigError(f"{path}.{key}: missing required field", field=f"{path}.{key}")
        return default
    v = block[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{path}.{key}: expected an integer", field=f"{path}.{key}")
    if minimum is not None and v < minimum:
        raise ConfigError(f"{path}.{key}: must be >= {minimum}", field=f"{path}.{key}")
    return v


def _choice(block, key, path, choices, default=None):
    if key not in block:
        if default is None:
            raise ConfigError(f"{path}.{key}: missing required field", field=f"{path}.{key}")
        return default
    v = block[key]
    if v not in choices:
        raise ConfigError(
            f"{path}.{key}: expected one of {sorted(choices)}, got {v!r}",
            field=f"{path}.{key}",
        )
    return v


def _check_keys(block, allowed, path):
    if not isinstance(block, dict):
        raise ConfigError(f"{path}: expected an object", field=path)
    unknown = set(block) - set(allowed)
    if unknown:
        name = sorted(unknown)[0]
        raise ConfigError(f"{path}.{name}: unknown field", field=f"{path}.{name}")


def _grid(block, key, path, default=None):
    if key not in block:
        return default
    v = block[key]
    if not isinstance(v, list) or not v:
        raise ConfigError(f"{path}.{key}: expected a nonempty list of numbers", field=f"{path}.{key}")
    out = []
    for i, item in enumerate(v):
        if isinstance(item, bool) or not isinstance(item, (int, float)):
            raise ConfigError(f"{path}.{key}[{i}]: expected a number", field=f"{path}.{key}")
        out.append(float(item))
    return out


_BETA_PARAMS = {
    "zero": (),
    "cubic": (),
    "abs": (),
    "linear": ("slope",),
    "interval": ("a", "b"),
    "odd_power": ("p",),
}

_INITIAL_PARAMS = {
    "constant": {"u": 1.0, "v": 0.0},
    "step": {"u_left": 1.2, "u_right": 0.8, "v_left": -0.7, "v_right": -1.1},
    "smooth_matched": {"amplitude": 0.8},
    "mismatched": {"u": 1.0, "v": -1.0},
}


def validate_config(raw):
    """Validate a raw config dict; return the resolved dict with defaults."""
    _check_keys(
        raw,
        {"geometry", "physics", "alpha", "time", "solver", "experiment", "output_dir"},
        "config",
    )
    resolved = {}

    geo = _req(raw, "geometry", "config")
    case = _choice(geo, "case", "geometry", {"case1", "case2"})
    if case == "case1":
        _check_keys(geo, {"case", "l1", "l2", "n1", "n2"}, "geometry")
        resolved["geometry"] = {
            "case": case,
            "l1": _num(geo, "l1", "geometry", default=1.0, positive=True),
            "l2": _num(geo, "l2", "geometry", default=1.0, positive=True),
            "n1": _int(geo, "n1", "geometry", default=200, minimum=2),
            "n2": _int(geo, "n2", "geometry", default=200, minimum=2),
        }
    else:
        _check_keys(geo, {"case", "a", "b", "n1", "n2"}, "geometry")
        a = _num(geo, "a", "geometry", default=0.5, positive=True)
        b = _num(geo, "b", "geometry", default=1.0, positive=True)
        if a >= b:
            raise ConfigError("geometry.a: case2 requires a < b", field="geometry.a")
        resolved["geometry"] = {
            "case": case,
            "a": a,
            "b": b,
            "n1": _int(geo, "n1", "geometry", default=200, minimum=2),
            "n2": _int(geo, "n2", "geometry", default=200, minimum=2),
        }

    phys = _req(raw, "physics", "config")
    _check_keys(phys, {"kappa", "beta", "pi", "sources", "initial"}, "physics")
    kappa = _num(phys, "kappa", "physics", default=1.0, positive=True)

    beta = phys.get("beta", {"kind": "zero"})
    kind = _choice(beta, "kind", "physics.beta", set(_BETA_PARAMS))
    _check_keys(beta, {"kind", *_BETA_PARAMS[kind]}, "physics.beta")
    beta_res = {"kind": kind}
    if kind == "linear":
        beta_res["slope"] = _num(beta, "slope", "physics.beta", default=1.0, nonnegative=True)
    elif kind == "interval":
        beta_res["a"] = _num(beta, "a", "physics.beta")
        beta_res["b"] = _num(beta, "b", "physics.beta")
    elif kind == "odd_power":
        beta_res["p"] = _int(beta, "p", "physics.beta", default=3, minimum=3)

    pi = phys.get("pi", {"preset": "zero"})
    preset = _choice(pi, "preset", "physics.pi", {"zero", "allen_cahn", "poly"})
    if preset == "poly":
        _check_keys(pi, {"preset", "coeffs", "lipschitz"}, "physics.pi")
        coeffs = _grid(pi, "coeffs", "physics.pi")
        if coeffs is None:
            raise ConfigError("physics.pi.coeffs: missing required field", field="physics.pi.coeffs")
        pi_res = {
            "preset": preset,
            "coeffs": coeffs,
            "lipschitz": _num(pi, "lipschitz", "physics.pi", positive=True),
        }
    else:
        _check_keys(pi, {"preset"}, "physics.pi")
        pi_res = {"preset": preset}

    sources = phys.get("sources", {"preset": "zero"})
    spreset = _choice(sources, "preset", "physics.sources", {"zero", "constant"}, default="zero")
    if spreset == "constant":
        _check_keys(sources, {"preset", "g1", "g2"}, "physics.sources")
        sources_res = {
            "preset": spreset,
            "g1": _num(sources, "g1", "physics.sources", default=0.0),
            "g2": _num(sources, "g2", "physics.sources", default=0.0),
        }
    else:
        _check_keys(sources, {"preset"}, "physics.sources")
        sources_res = {"preset": spreset}

    initial = phys.get("initial", {"preset": "constant"})
    ipreset = _choice(initial, "preset", "physics.initial", set(_INITIAL_PARAMS))
    allowed = {"preset", "family", *(_INITIAL_PARAMS[ipreset])}
    _check_keys(initial, allowed, "physics.initial")
    initial_res = {"preset": ipreset}
    for key, default in _INITIAL_PARAMS[ipreset].items():
        initial_res[key] = _num(initial, key, "physics.initial", default=default)
    family = initial.get("family", {"scaling": "none"})
    _check_keys(family, {"scaling", "amplitude", "width"}, "physics.initial.family")
    initial_res["family"] = {
        "scaling": _choice(
            family,
            "scaling",
            "physics.initial.family",
            {"none", "sqrt_alpha", "inv_sqrt_alpha"},
            default="none",
        ),
        "amplitude": _num(family, "amplitude", "physics.initial.family", default=0.25),
        "width": _num(family, "width", "physics.initial.family", default=0.15, positive=True),
    }

    resolved["physics"] = {
        "kappa": kappa,
        "beta": beta_res,
        "pi": pi_res,
        "sources": sources_res,
        "initial": initial_res,
    }

    alpha = _req(raw, "alpha", "config")
    akind = _choice(alpha, "kind", "alpha", {"constant", "smooth", "blowup"})
    if akind == "constant":
        _check_keys(alpha, {"kind", "value"}, "alpha")
        alpha_res = {"kind": akind, "value": _num(alpha, "value", "alpha", nonnegative=True)}
    elif akind == "smooth":
        _check_keys(alpha, {"kind", "preset", "from", "to"}, "alpha")
        alpha_res = {
            "kind": akind,
            "preset": _choice(alpha, "preset", "alpha", {"linear", "cosine"}, default="linear"),
            "from": _num(alpha, "from", "alpha", nonnegative=True),
            "to": _num(alpha, "to", "alpha", nonnegative=True),
        }
    else:
        _check_keys(alpha, {"kind", "alpha0", "t_star", "p"}, "alpha")
        alpha_res = {
            "kind": akind,
            "alpha0": _num(alpha, "alpha0", "alpha", positive=True),
            "t_star": _num(alpha, "t_star", "alpha", positive=True),
            "p": _num(alpha, "p", "alpha", default=1.0),
        }
        if alpha_res["p"] < 1:
            raise ConfigError("alpha.p: must be >= 1", field="alpha.p")
    resolved["alpha"] = alpha_res

    time_block = _req(raw, "time", "config")
    _check_keys(time_block, {"T", "dt"}, "time")
    resolved["time"] = {
        "T": _num(time_block, "T", "time", positive=True),
        "dt": _num(time_block, "dt", "time", positive=True),
    }

    solver = raw.get("solver", {})
    _check_keys(solver, {"lambda", "newton_tol", "newton_max", "delta_switch"}, "solver")
    lam = solver.get("lambda")
    if lam is not None:
        lam = _num(solver, "lambda", "solver", positive=True)
    resolved["solver"] = {
        "lambda": lam,
        "newton_tol": _num(solver, "newton_tol", "solver", default=1e-12, positive=True),
        "newton_max": _int(solver, "newton_max", "solver", default=50, minimum=1),
        "delta_switch": _num(solver, "delta_switch", "solver", default=1e-3, positive=True),
    }

    exp = raw.get("experiment", {})
    _check_keys(
        exp,
        {"mode", "alpha_grid", "lambda_grid", "tau", "seed", "jobs", "direction"},
        "experiment",
    )
    resolved["experiment"] = {
        "mode": exp.get("mode"),
        "alpha_grid": _grid(exp, "alpha_grid", "experiment"),
        "lambda_grid": _grid(exp, "lambda_grid", "experiment"),
        "tau": _num(exp, "tau", "experiment", default=0.1, positive=True),
        "seed": _int(exp, "seed", "experiment", default=42),
        "jobs": _int(exp, "jobs", "experiment", default=1, minimum=1),
        "direction": _choice(
            exp, "direction", "experiment", {"to_zero", "to_infinity"}, default="to_zero"
        ),
    }

    out_dir = raw.get("output_dir")
    if out_dir is not None and not isinstance(out_dir, str):
        raise ConfigError("output_dir: expected a string", field="output_dir")
    resolved["output_dir"] = out_dir
    return resolved


def load_config(path):
    """Read and validate a JSON config file."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: not valid JSON ({exc})", field="config")
    return validate_config(raw)


def build_geometry(resolved):
    g = resolved["geometry"]
    if g["case"] == "case1":
        return GeometryCase.case1(g["l1"], g["l2"], g["n1"], g["n2"])
    return GeometryCase.case2(g["a"], g["b"], g["n1"], g["n2"])


def _pi_callable(pi_res):
    if pi_res["preset"] == "zero":
        return None, 0.0
    if pi_res["preset"] == "allen_cahn":
        return (lambda r: -r), 1.0
    coeffs = pi_res["coeffs"]

    def poly(r):
        out = np.zeros_like(np.asarray(r, dtype=float))
        for k, c in enumerate(coeffs, start=1):
            out = out + c * np.asarray(r, dtype=float) ** k
        return out

    return poly, pi_res["lipschitz"]


def _source_callables(sources_res):
    if sources_res["preset"] == "zero":
        return None, None
    g1c, g2c = sources_res["g1"], sources_res["g2"]
    return (lambda t, x: np.full_like(x, g1c)), (lambda t, x: np.full_like(x, g2c))


def _domain_hull(geom):
    if geom.case == "case1":
        return -geom.params["l1"], geom.params["l1"] + geom.params["l2"]
    return -geom.params["b"], 2.0 * geom.params["b"]


def base_initial_callables(resolved, geom):
    """Base (alpha-independent) initial data as callables of x."""
    init = resolved["physics"]["initial"]
    preset = init["preset"]
    if preset == "constant":
        u, v = init["u"], init["v"]
        return (lambda x: np.full_like(x, u)), (lambda x: np.full_like(x, v))
    if preset == "mismatched":
        u, v = init["u"], init["v"]
        return (lambda x: np.full_like(x, u)), (lambda x: np.full_like(x, v))
    if preset == "step":
        ul, ur = init["u_left"], init["u_right"]
        vl, vr = init["v_left"], init["v_right"]
        if geom.case == "case1":
            mid1 = -0.5 * geom.params["l1"]
            mid2 = 0.5 * geom.params["l2"]
        else:
            mid1 = 0.0
            a, b = geom.params["a"], geom.params["b"]
            mid2 = 0.5 * (a + b)  # per-piece midpoint, applied through |x|

        def u0(x):
            return np.where(x < mid1, ul, ur)

        def v0(x):
            if geom.case == "case1":
                return np.where(x < mid2, vl, vr)
            return np.where(np.abs(x) > mid2, vl, vr)

        return u0, v0
    # smooth_matched: one smooth profile over the domain hull.
    amp = init["amplitude"]
    xmin, span = _domain_hull(geom)

    def w(x):
        return amp * np.cos(np.pi * (x - xmin) / span)

    return w, w


def interface_bump(geom, width):
    """Gaussian bump(s) centered on the interface coordinate(s)."""
    if geom.case == "case1":
        centers = (0.0,)
    else:
        a = geom.params["a"]
        centers = (-a, a)

    def bump(x):
        out = np.zeros_like(x)
        for c in centers:
            out = out + np.exp(-(((x - c) / width) ** 2))
        return out

    return bump


def build_initial_family(resolved, geom):
    """Per-alpha data family from the initial preset's family block.

    Returns ``None`` when scaling is 'none'; otherwise a callable
    ``(alpha, mesh) -> (u0, v0)`` adding an antisymmetric interface bump
    scaled by sqrt(alpha) or 1/sqrt(alpha).
    """
    fam = resolved["physics"]["initial"]["family"]
    if fam["scaling"] == "none":
        return None
    u_base, v_base = base_initial_callables(resolved, geom)
    bump = interface_bump(geom, fam["width"])
    amp = fam["amplitude"]
    scaling = fam["scaling"]

    def family(alpha, mesh):
        s = amp * (np.sqrt(alpha) if scaling == "sqrt_alpha" else 1.0 / np.sqrt(alpha))
        return (
            u_base(mesh.x1) + s * bump(mesh.x1),
            v_base(mesh.x2) - s * bump(mesh.x2),
        )

    return family


def build_problem(resolved):
    """Construct the ProblemSpec described by a resolved config."""
    geom = build_geometry(resolved)
    phys = resolved["physics"]
    graph = make_graph(phys["beta"]["kind"], **{
        k: v for k, v in phys["beta"].items() if k != "kind"
    })
    pi, L = _pi_callable(phys["pi"])
    g1, g2 = _source_callables(phys["sources"])
    u0, v0 = base_initial_callables(resolved, geom)
    return ProblemSpec(
        geom=geom,
        kappa=phys["kappa"],
        graph=graph,
        u0=u0,
        v0=v0,
        T=resolved["time"]["T"],
        pi1=pi,
        pi2=pi,
        L1=L,
        L2=L,
        g1=g1,
        g2=g2,
    )


def build_schedule(resolved):
    a = resolved["alpha"]
    if a["kind"] == "constant":
        return PermeabilitySchedule.constant(a["value"])
    if a["kind"] == "blowup":
        return PermeabilitySchedule.blowup(a["alpha0"], a["t_star"], a["p"])
    T = resolved["time"]["T"]
    lo, hi = a["from"], a["to"]
    if a["preset"] == "linear":
        fn = lambda t: lo + (hi - lo) * t / T
    else:
        fn = lambda t: lo + (hi - lo) * 0.5 * (1.0 - np.cos(np.pi * t / T))
    return PermeabilitySchedule.smooth(fn)


def build_solver_config(resolved):
    s = resolved["solver"]
    return SolverConfig(
        dt=resolved["time"]["dt"],
        lam=s["lambda"],
        newton_tol=s["newton_tol"],
        newton_max=s["newton_max"],
        delta_switch=s["delta_switch"],
    )
