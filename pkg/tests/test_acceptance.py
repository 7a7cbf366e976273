"""Acceptance suite: one test per acceptance criterion, each printing a
PASS/FAIL line with the measured quantity.

Scale: Case 1, n = 200 elements per subdomain, dt = 1e-3, T = 0.25,
lambda = dt, Allen-Cahn physics (cubic graph, pi(r) = -r, g = 0) unless a
criterion says otherwise.  Rate studies and the estimate audit drive the
per-alpha initial-data families at the largest admissible convergence
order (sqrt(alpha) toward zero, 1/sqrt(alpha) toward infinity), which is
what makes the alpha^(1/2) orders observable; the limit runs always use
the base data.
"""

import numpy as np
import pytest
import scipy.linalg

import gapflow as gf
from gapflow.energy import EnergySpec, energy, gradient, prox
from gapflow.grid import (
    CoupledField,
    build_mesh,
    interface_jump_norm,
    lumped_norm,
)
from gapflow.lab import apriori_audit, mosco_audit, rate_to_infinity, rate_to_zero
from gapflow.stepper import (
    PermeabilitySchedule,
    ProblemSpec,
    SolverConfig,
    solve_blowup_and_extend,
    solve_finite_alpha,
    solve_merged,
    solve_split,
)

from test_stepper import GRAPH_CASES, dense_case1_matrices, oracle_dense_step

# Spec-pinned scale
N_ELEM = 200
DT = 1e-3
T_HORIZON = 0.25
ALPHA_GRID_ZERO = np.logspace(-4, -1, 7)
ALPHA_GRID_INF = np.logspace(1, 4, 7)
ALPHA_GRID_AUDIT = np.logspace(-2, 4, 7)
SLOPE_BRACKET = (0.35, 0.65)
FAMILY_AMPLITUDE_ZERO = 0.5
FAMILY_AMPLITUDE_INF = 0.25
FAMILY_WIDTH = 0.15


def report(name, ok, detail):
    print(f"ACCEPTANCE {'PASS' if ok else 'FAIL'}: {name} ({detail})")
    assert ok, f"{name}: {detail}"


@pytest.fixture(scope="module")
def geom():
    return gf.GeometryCase.case1(1.0, 1.0, N_ELEM, N_ELEM)


@pytest.fixture(scope="module")
def mesh(geom):
    return build_mesh(geom)


@pytest.fixture(scope="module")
def bumps(mesh):
    return (
        np.exp(-((mesh.x1 / FAMILY_WIDTH) ** 2)),
        np.exp(-((mesh.x2 / FAMILY_WIDTH) ** 2)),
    )


def allen_cahn(geom, u0, v0, graph=None, T=T_HORIZON):
    return ProblemSpec(
        geom=geom,
        kappa=1.0,
        graph=graph or gf.Cubic(),
        u0=u0,
        v0=v0,
        T=T,
        pi1=lambda r: -r,
        pi2=lambda r: -r,
        L1=1.0,
        L2=1.0,
    )


def step_data(mesh):
    return (
        np.where(mesh.x1 < -0.5, 1.2, 0.8),
        np.where(mesh.x2 < 0.5, -0.7, -1.1),
    )


def smooth_matched_data(mesh):
    return (
        0.8 * np.cos(np.pi * (mesh.x1 + 1.0) / 2.0),
        0.8 * np.cos(np.pi * (mesh.x2 + 1.0) / 2.0),
    )


class TestRateCriteria:
    def test_alpha_to_zero_rate(self, geom, mesh, bumps):
        u0, v0 = step_data(mesh)
        spec = allen_cahn(geom, u0, v0)
        b1, b2 = bumps

        def family(alpha, m):
            s = FAMILY_AMPLITUDE_ZERO * np.sqrt(alpha)
            return u0 + s * b1, v0 - s * b2

        rep = rate_to_zero(spec, list(ALPHA_GRID_ZERO), SolverConfig(dt=DT), initial_family=family)
        ok = SLOPE_BRACKET[0] <= rep.slope <= SLOPE_BRACKET[1]
        report("alpha->0 rate (e_C slope in [0.35, 0.65])", ok, f"slope={rep.slope:.4f}")

    def test_alpha_to_infinity_rate(self, geom, mesh, bumps):
        u0, v0 = smooth_matched_data(mesh)
        spec = allen_cahn(geom, u0, v0)
        b1, b2 = bumps

        def family(alpha, m):
            s = FAMILY_AMPLITUDE_INF / np.sqrt(alpha)
            return u0 + s * b1, v0 - s * b2

        rep = rate_to_infinity(spec, list(ALPHA_GRID_INF), SolverConfig(dt=DT), initial_family=family)
        ok = SLOPE_BRACKET[0] <= rep.slope <= SLOPE_BRACKET[1]
        report("alpha->inf rate (e_C slope vs 1/alpha in [0.35, 0.65])", ok, f"slope={rep.slope:.4f}")


@pytest.fixture(scope="module")
def audit_report(geom, mesh, bumps):
    u0, v0 = smooth_matched_data(mesh)
    spec = allen_cahn(geom, u0, v0)
    b1, b2 = bumps

    def family(alpha, m):
        s = FAMILY_AMPLITUDE_INF / np.sqrt(alpha)
        return u0 + s * b1, v0 - s * b2

    return apriori_audit(
        spec, [DT], list(ALPHA_GRID_AUDIT), SolverConfig(dt=DT), initial_family=family
    )


class TestUniformityCriteria:
    def test_interface_term_uniformity(self, audit_report):
        spread = audit_report.spreads["sqrt_alpha_max_jump"]
        report(
            "interface-term uniformity (sqrt(alpha)*max jump spread < 10)",
            spread < 10.0,
            f"spread={spread:.3f}",
        )

    def test_dual_norm_uniformity(self, audit_report):
        spread = audit_report.spreads["time_deriv_dual"]
        report(
            "dual-norm uniformity (derivative dual norm spread < 10)",
            spread < 10.0,
            f"spread={spread:.3f}",
        )


class TestYosidaSuite:
    def test_yosida_suite(self):
        graphs = [
            gf.Zero(),
            gf.Linear(2.5),
            gf.Cubic(),
            gf.OddPower(5),
            gf.AbsSubdiff(),
            gf.IndicatorInterval(-1.0, 1.0),
        ]
        lambdas = (1.0, 0.1, 0.01, 0.001)
        rng = np.random.default_rng(777)
        violations = 0
        for graph in graphs:
            r = rng.uniform(-5, 5, 10_000)
            s = rng.uniform(-5, 5, 10_000)
            j = graph.j(r)
            prev_env = None
            for lam in lambdas:
                br, bs = graph.yosida(lam, r), graph.yosida(lam, s)
                # monotone; 1/lam-Lipschitz (slack 1e-12, scaled past unit magnitude)
                violations += int(np.sum((br - bs) * (r - s) < -1e-12 * (1 + np.abs(br * r))))
                bound = np.abs(r - s) / lam
                violations += int(np.sum(np.abs(br - bs) > bound + 1e-12 * np.maximum(1.0, bound)))
                env = graph.moreau(lam, r)
                violations += int(np.sum(env < -1e-14))
                finite = np.isfinite(j)
                violations += int(np.sum(env[finite] > j[finite] + 1e-12 * (1 + j[finite])))
                if prev_env is not None:  # envelope grows as lambda shrinks
                    violations += int(np.sum(env < prev_env - 1e-12 * (1 + np.abs(prev_env))))
                prev_env = env
        report(
            "Yosida suite (monotone, Lipschitz, envelope bounds; 1e4 samples/kind)",
            violations == 0,
            f"violations={violations}",
        )


class TestGradientProxSuite:
    def test_gradient_prox_suite(self):
        mesh = build_mesh(gf.GeometryCase.case1(1.0, 1.0, 16, 16))
        rng = np.random.default_rng(2024)
        fd_worst = 0.0
        step = 1e-6
        for _ in range(20):
            U = CoupledField(rng.standard_normal(mesh.n1), rng.standard_normal(mesh.n2))
            spec = EnergySpec.finite(
                mesh, 10.0 ** rng.uniform(-1, 1), 10.0 ** rng.uniform(-2, 1)
            )
            g = gradient(spec, U).stacked()
            base = U.stacked()
            fd = np.zeros_like(g)
            for i in range(len(base)):
                wp, wm = base.copy(), base.copy()
                wp[i] += step
                wm[i] -= step
                fd[i] = (
                    energy(spec, CoupledField(wp[: mesh.n1], wp[mesh.n1 :]))
                    - energy(spec, CoupledField(wm[: mesh.n1], wm[mesh.n1 :]))
                ) / (2 * step)
            fd_worst = max(fd_worst, np.max(np.abs(fd - g)) / max(1.0, np.max(np.abs(g))))

        prox_worst = 0.0
        nonexp_violations = 0
        for _ in range(50):
            spec = EnergySpec.finite(
                mesh, 10.0 ** rng.uniform(-1, 1), 10.0 ** rng.uniform(-2, 1)
            )
            tau = 10.0 ** rng.uniform(-2, 0)
            W1 = CoupledField(rng.standard_normal(mesh.n1), rng.standard_normal(mesh.n2))
            W2 = CoupledField(rng.standard_normal(mesh.n1), rng.standard_normal(mesh.n2))
            P1, P2 = prox(spec, tau, W1), prox(spec, tau, W2)
            res = mesh.lumped_stacked() * (P1 - W1).stacked() + tau * gradient(spec, P1).stacked()
            prox_worst = max(prox_worst, np.max(np.abs(res)))
            if lumped_norm(mesh, P1 - P2) > lumped_norm(mesh, W1 - W2) * (1 + 1e-12):
                nonexp_violations += 1
        ok = fd_worst <= 1e-6 and prox_worst <= 1e-10 and nonexp_violations == 0
        report(
            "gradient/prox suite (FD<=1e-6 rel, residual<=1e-10, nonexpansive)",
            ok,
            f"fd={fd_worst:.2e} residual={prox_worst:.2e} nonexp_violations={nonexp_violations}",
        )


class TestConservationDissipation:
    def test_mass_conservation_all_regimes(self, geom, mesh):
        u0, v0 = step_data(mesh)
        w1, w2 = smooth_matched_data(mesh)
        w1, w2 = w1 + 1.0, w2 + 1.0  # nonzero total mass for the relative drift
        cfg = SolverConfig(dt=DT)
        plain = ProblemSpec(geom=geom, kappa=1.0, graph=gf.Zero(), u0=u0, v0=v0, T=T_HORIZON)
        matched = ProblemSpec(geom=geom, kappa=1.0, graph=gf.Zero(), u0=w1, v0=w2, T=T_HORIZON)
        blow = ProblemSpec(geom=geom, kappa=1.0, graph=gf.Zero(), u0=u0, v0=v0, T=0.2)
        runs = {
            "finite": solve_finite_alpha(plain, PermeabilitySchedule.constant(2.0), cfg),
            "split": solve_split(plain, cfg),
            "merged": solve_merged(matched, cfg),
            "blowup": solve_blowup_and_extend(
                blow, PermeabilitySchedule.blowup(1.0, 0.1, 1.0), SolverConfig(dt=DT, delta_switch=1e-3)
            ),
        }
        drifts = {}
        for name, tr in runs.items():
            mass = tr.diagnostics["mass"]
            drifts[name] = float(np.max(np.abs(mass - mass[0])) / abs(mass[0]))
        ok = all(d <= 1e-12 for d in drifts.values())
        detail = " ".join(f"{k}={v:.2e}" for k, v in drifts.items())
        report("mass conservation <= 1e-12 relative (all regimes + blow-up)", ok, detail)

    def test_lyapunov_dissipation(self, geom, mesh):
        u0, v0 = step_data(mesh)
        w1, w2 = smooth_matched_data(mesh)
        cfg = SolverConfig(dt=DT)
        spec = ProblemSpec(geom=geom, kappa=1.0, graph=gf.Cubic(), u0=u0, v0=v0, T=T_HORIZON)
        matched = ProblemSpec(geom=geom, kappa=1.0, graph=gf.Cubic(), u0=w1, v0=w2, T=T_HORIZON)
        worst = -np.inf
        for tr in (
            solve_finite_alpha(spec, PermeabilitySchedule.constant(1.0), cfg),
            solve_split(spec, cfg),
            solve_merged(matched, cfg),
        ):
            lyap = tr.diagnostics["energy"] + tr.diagnostics["moreau_energy"]
            worst = max(worst, float(np.max(np.diff(lyap))))
        report(
            "Lyapunov dissipation (g=0, pi=0; per-step slack <= 1e-10)",
            worst <= 1e-10,
            f"max increment={worst:.2e}",
        )


class TestOracleCriteria:
    def test_tiny_system_oracle(self):
        rng = np.random.default_rng(2718)
        geom = gf.GeometryCase.case1(1.0, 1.0, 2, 2)
        worst = 0.0
        for trial in range(50):
            kind, param, graph = GRAPH_CASES[trial % len(GRAPH_CASES)]
            alpha = rng.uniform(0.0, 5.0)
            kappa = rng.uniform(0.3, 3.0)
            dt = 10.0 ** rng.uniform(-3, -1)
            lam = 10.0 ** rng.uniform(-3, -1)
            use_pi = trial % 2 == 0
            gconst = rng.uniform(-1, 1) if trial % 3 == 0 else None
            u_old = rng.uniform(-2, 2, 6)
            spec = ProblemSpec(
                geom=geom,
                kappa=kappa,
                graph=graph,
                u0=u_old[:3],
                v0=u_old[3:],
                T=1.0,
                pi1=(lambda r: -r) if use_pi else None,
                pi2=(lambda r: -r) if use_pi else None,
                L1=1.0 if use_pi else 0.0,
                L2=1.0 if use_pi else 0.0,
                g1=(lambda t, x, c=gconst: np.full_like(x, c)) if gconst else None,
                g2=(lambda t, x, c=gconst: np.full_like(x, c)) if gconst else None,
            )
            out = gf.step(
                spec,
                PermeabilitySchedule.constant(alpha),
                SolverConfig(dt=dt, lam=lam),
                0.0,
                CoupledField(u_old[:3], u_old[3:]),
            )
            A, mhat = dense_case1_matrices(2, 1.0, 1.0, kappa, alpha)
            pi_vals = -u_old if use_pi else np.zeros(6)
            g_vals = np.full(6, gconst) if gconst else np.zeros(6)
            expected = oracle_dense_step(kind, param, A, mhat, lam, dt, u_old, pi_vals, g_vals)
            worst = max(worst, float(np.max(np.abs(out.stacked() - expected))))
        report(
            "tiny-system oracle (50 random configs, <= 1e-10)",
            worst <= 1e-10,
            f"worst gap={worst:.2e}",
        )

    def test_constant_zero_equals_split(self, geom, mesh):
        u0, v0 = step_data(mesh)
        spec = allen_cahn(geom, u0, v0)
        cfg = SolverConfig(dt=DT)
        tr0 = solve_finite_alpha(spec, PermeabilitySchedule.constant(0.0), cfg)
        trs = solve_split(spec, cfg)
        gap = max(float(np.max(np.abs(tr0.us - trs.us))), float(np.max(np.abs(tr0.vs - trs.vs))))
        report("regime consistency: Constant(0) == split (<= 1e-12)", gap <= 1e-12, f"gap={gap:.2e}")

    def test_merged_matches_single_domain_oracle(self, geom, mesh):
        w1, w2 = smooth_matched_data(mesh)
        spec = ProblemSpec(geom=geom, kappa=1.0, graph=gf.Zero(), u0=w1, v0=w2, T=T_HORIZON)
        tr = solve_merged(spec, SolverConfig(dt=DT))
        n = N_ELEM
        h = 1.0 / n
        m = 2 * n + 1
        K = np.zeros((m, m))
        for e in range(2 * n):
            K[e, e] += 1 / h
            K[e + 1, e + 1] += 1 / h
            K[e, e + 1] -= 1 / h
            K[e + 1, e] -= 1 / h
        mh = np.full(m, h)
        mh[0] = mh[-1] = h / 2
        x_all = np.linspace(-1.0, 1.0, m)
        u = 0.8 * np.cos(np.pi * (x_all + 1.0) / 2.0)
        lu = scipy.linalg.lu_factor(np.diag(mh / DT) + K)
        gap = 0.0
        for k in range(1, tr.n_times):
            u = scipy.linalg.lu_solve(lu, mh * u / DT)
            merged_state = np.concatenate([tr.us[k], tr.vs[k][1:]])
            gap = max(gap, float(np.max(np.abs(merged_state - u))))
        report(
            "regime consistency: merged == single-domain oracle (<= 1e-10)",
            gap <= 1e-10,
            f"gap={gap:.2e}",
        )


class TestMoscoCriterion:
    def test_mosco_certificate(self, mesh):
        # (M2) recovery identity toward zero: gap == (alpha/2) * jump^2 exactly
        rep0 = mosco_audit(mesh, 1.0, "to_zero", [10.0 ** (-n) for n in range(1, 5)], tau=0.1)
        from gapflow.lab import default_probes

        probes = dict(default_probes(mesh))
        worst_rel = 0.0
        for pid, gaps in rep0.recovery_gaps.items():
            U = probes[pid]
            jump2 = interface_jump_norm(mesh, U) ** 2
            scale = 1.0 + energy(EnergySpec.zero(mesh, 1.0), U)
            for a, gap in zip(rep0.alphas, gaps):
                expected = 0.5 * a * jump2
                # machine precision of the energies entering the subtraction
                worst_rel = max(worst_rel, abs(gap - expected) / (scale + expected))
        identity_ok = worst_rel <= 1e-12

        # (M1) margins >= -1e-10 in both directions
        repi = mosco_audit(mesh, 1.0, "to_infinity", [10.0**n for n in range(1, 7)], tau=0.1)
        min_margin = np.inf
        for rep in (rep0, repi):
            for per_probe in rep.liminf_margins.values():
                for seq in per_probe.values():
                    min_margin = min(min_margin, float(np.min(seq)))
        margins_ok = min_margin >= -1e-10

        # prox errors strictly decreasing along alpha_n = 10^n, final < 1e-3 ||W||
        rng = np.random.default_rng(99)
        prox_ok = True
        final_ratio = 0.0
        for _ in range(3):
            W = CoupledField(rng.standard_normal(mesh.n1), rng.standard_normal(mesh.n2))
            lim = prox(EnergySpec.infinity(mesh, 1.0), 0.1, W)
            errs = [
                lumped_norm(mesh, prox(EnergySpec.finite(mesh, 1.0, 10.0**n), 0.1, W) - lim)
                for n in range(1, 7)
            ]
            prox_ok &= all(b < a for a, b in zip(errs, errs[1:]))
            final_ratio = max(final_ratio, errs[-1] / lumped_norm(mesh, W))
        prox_ok &= final_ratio < 1e-3

        ok = identity_ok and margins_ok and prox_ok
        report(
            "Mosco certificate (recovery identity, margins, prox decay)",
            ok,
            f"identity_rel={worst_rel:.2e} min_margin={min_margin:.2e} final_prox_ratio={final_ratio:.2e}",
        )


class TestBlowupCriterion:
    def test_blowup_scenario(self, geom, mesh):
        u0, v0 = step_data(mesh)
        spec = ProblemSpec(geom=geom, kappa=1.0, graph=gf.Zero(), u0=u0, v0=v0, T=0.2)
        schedule = PermeabilitySchedule.blowup(1.0, 0.1, 1.0)
        discrepancies = []
        mass_ok = True
        reached = True
        q_detail = ""
        q_ok = False
        for delta in (1e-2, 1e-3, 1e-4):
            cfg = SolverConfig(dt=1e-4, delta_switch=delta)
            tr = solve_blowup_and_extend(spec, schedule, cfg)
            discrepancies.append(tr.annotations["handoff_discrepancy"])
            mass = tr.diagnostics["mass"]
            mass_ok &= float(np.max(np.abs(mass - mass[0])) / abs(mass[0])) <= 1e-12
            reached &= abs(tr.times[-1] - 0.2) <= 1e-12
            if delta == 1e-4:
                idx = tr.annotations["handoff_index"]
                remaining = 0.1 - tr.times[:idx]
                window = (remaining >= delta) & (remaining <= 10 * delta)
                q = tr.alphas[:idx][window] * tr.diagnostics["jump"][:idx][window]
                # bounded, no growth trend as alpha blows up through the window
                coef = np.polyfit(np.log(tr.alphas[:idx][window]), np.log(q), 1)
                q_ok = (np.max(q) / np.min(q) <= 3.0) and coef[0] <= 0.1
                q_detail = f"q_range=[{q.min():.3f},{q.max():.3f}] trend={coef[0]:.3f}"
        monotone_ok = discrepancies[0] > discrepancies[1] > discrepancies[2]
        ok = monotone_ok and mass_ok and reached and q_ok
        report(
            "blow-up scenario (bounded alpha*jump, shrinking hand-off gap, conservation)",
            ok,
            f"{q_detail} discrepancies={['%.2e' % d for d in discrepancies]} mass_ok={mass_ok}",
        )
