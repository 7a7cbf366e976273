"""Blow-up run plot from blowup.csv (t, alpha, jump, jump_times_alpha).

Shows the interface jump against the diverging permeability on log-log
axes; the bounded product jump * alpha is the numerical signature of a
solution that survives the blow-up.
"""

import numpy as np
import matplotlib.pyplot as plt

from .common import PlotResult, floats, read_columns, script_main

REQUIRED = ("t", "alpha", "jump", "jump_times_alpha")


def render(job):
    data = read_columns(job.inputs[0], REQUIRED)
    alpha = np.asarray(floats(data["alpha"]))
    jump = np.asarray(floats(data["jump"]))
    product = np.asarray(floats(data["jump_times_alpha"]))

    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8.4, 3.6))
    ax1.loglog(alpha, np.maximum(jump, 1e-300), ".", color="tab:red")
    ax1.set_xlabel("alpha(t)")
    ax1.set_ylabel("interface jump")
    ax1.set_title("jump vs alpha(t)")
    ax2.semilogx(alpha, product, ".", color="tab:purple")
    ax2.set_xlabel("alpha(t)")
    ax2.set_ylabel("jump * alpha")
    ax2.set_title("flux-scale product stays bounded")
    fig.tight_layout()
    fig.savefig(job.output, dpi=150)
    plt.close(fig)
    finite = product[np.isfinite(product)]
    return PlotResult(
        path=job.output,
        n_points=len(alpha),
        n_lines=0,
        printed={"max_jump_times_alpha": f"{finite.max():.6e}" if len(finite) else "nan"},
    )


render.kind = "blowup"
main = script_main(render, "Plot a gapflow blow-up run (blowup.csv).")

if __name__ == "__main__":
    raise SystemExit(main())
