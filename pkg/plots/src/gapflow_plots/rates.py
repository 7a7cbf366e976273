"""Log-log convergence-rate plot from rates.csv (alpha, e_C, e_E).

Draws the e_C data points, the least-squares fit line with its slope
annotated, and a dashed reference line of slope 1/2 (the sign follows
the fitted trend) for visual comparison.
"""

import numpy as np
import matplotlib.pyplot as plt

from .common import PlotResult, floats, read_columns, script_main

REQUIRED = ("alpha", "e_C", "e_E")


def fit_loglog(alphas, errors):
    """Least-squares slope and intercept of log(e) against log(alpha)."""
    la, le = np.log(alphas), np.log(errors)
    A = np.vstack([la, np.ones_like(la)]).T
    coef, *_ = np.linalg.lstsq(A, le, rcond=None)
    return float(coef[0]), float(coef[1])


def render(job):
    data = read_columns(job.inputs[0], REQUIRED)
    alphas = np.asarray(floats(data["alpha"]))
    e_c = np.asarray(floats(data["e_C"]))
    e_e = np.asarray(floats(data["e_E"]))
    positive = e_c > 0
    if positive.sum() < 2:
        raise ValueError(f"{job.inputs[0]}: need at least two nonzero e_C rows to fit")
    slope, intercept = fit_loglog(alphas[positive], e_c[positive])
    annotation = f"fitted slope {slope:.2f}"

    fig, ax = plt.subplots(figsize=(5.2, 4.0))
    ax.loglog(alphas, e_c, "o", label="e_C", color="tab:blue")
    ax.loglog(alphas, e_e, "s", mfc="none", label="e_E", color="tab:gray", alpha=0.6)
    xs = np.array([alphas.min(), alphas.max()])
    ax.loglog(xs, np.exp(intercept) * xs**slope, "-", color="tab:blue", label=annotation)
    ref = 0.5 if slope >= 0 else -0.5
    anchor = np.exp(intercept) * alphas.min() ** slope
    ax.loglog(xs, anchor * (xs / xs[0]) ** ref, "--", color="k", label=f"slope {ref:+.1f} reference")
    ax.set_xlabel("alpha")
    ax.set_ylabel("error vs limit trajectory")
    ax.legend(fontsize=8)
    ax.set_title("convergence rate study")
    fig.tight_layout()
    fig.savefig(job.output, dpi=150)
    plt.close(fig)
    return PlotResult(
        path=job.output,
        n_points=len(alphas),
        n_lines=2,
        annotation=annotation,
        printed={"fitted_slope": f"{slope:.6f}"},
    )


render.kind = "rates"
main = script_main(render, "Plot a gapflow rate study (rates.csv) on log-log axes.")

if __name__ == "__main__":
    raise SystemExit(main())
