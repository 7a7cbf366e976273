"""Prox-convergence decay plot from mosco.csv
(n, alpha_n, probe_id, gap, margin, prox_err).

One decay curve per probe on a log axis; monotone decay of the prox
errors is the practical certificate of Mosco convergence.
"""

import numpy as np
import matplotlib.pyplot as plt

from .common import PlotResult, floats, read_columns, script_main

REQUIRED = ("n", "alpha_n", "probe_id", "gap", "margin", "prox_err")


def render(job):
    data = read_columns(job.inputs[0], REQUIRED)
    n = [int(v) for v in data["n"]]
    probes = data["probe_id"]
    errs = floats(data["prox_err"])

    series = {}
    for ni, pid, err in zip(n, probes, errs):
        series.setdefault(pid, []).append((ni, err))

    fig, ax = plt.subplots(figsize=(5.6, 4.0))
    for pid, pts in series.items():
        pts.sort()
        xs = [p[0] for p in pts]
        ys = np.maximum([p[1] for p in pts], 1e-300)
        ax.semilogy(xs, ys, "o-", label=pid, ms=4)
    ax.set_xlabel("n (alpha_n index)")
    ax.set_ylabel("|| prox_n - prox_limit ||")
    ax.set_title("prox convergence along the alpha sequence")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(job.output, dpi=150)
    plt.close(fig)
    monotone = {
        pid: bool(all(b <= a for (_, a), (_, b) in zip(pts, pts[1:])))
        for pid, pts in series.items()
    }
    return PlotResult(
        path=job.output,
        n_points=len(n),
        n_lines=len(series),
        printed={"monotone_probes": f"{sum(monotone.values())}/{len(monotone)}"},
    )


render.kind = "mosco"
main = script_main(render, "Plot gapflow Mosco prox-convergence decay (mosco.csv).")

if __name__ == "__main__":
    raise SystemExit(main())
