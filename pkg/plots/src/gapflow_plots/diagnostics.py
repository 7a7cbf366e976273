"""Energy and mass traces from diag.csv
(t, energy, moreau_energy, jump, mass, newton_iters).

Prints the maximum relative mass drift so conservation runs can be
checked at a glance.
"""

import numpy as np
import matplotlib.pyplot as plt

from .common import PlotResult, floats, read_columns, script_main

REQUIRED = ("t", "energy", "moreau_energy", "jump", "mass", "newton_iters")


def mass_drift(mass):
    mass = np.asarray(mass)
    scale = abs(mass[0]) if mass[0] != 0 else 1.0
    return float(np.max(np.abs(mass - mass[0])) / scale)


def render(job):
    data = read_columns(job.inputs[0], REQUIRED)
    t = np.asarray(floats(data["t"]))
    energy = np.asarray(floats(data["energy"]))
    moreau = np.asarray(floats(data["moreau_energy"]))
    jump = np.asarray(floats(data["jump"]))
    mass = np.asarray(floats(data["mass"]))
    drift = mass_drift(mass)

    fig, axes = plt.subplots(3, 1, figsize=(5.6, 6.4), sharex=True)
    axes[0].plot(t, energy, label="coupling energy")
    axes[0].plot(t, energy + moreau, label="+ Moreau term")
    axes[0].set_ylabel("energy")
    axes[0].legend(fontsize=8)
    axes[1].plot(t, mass, color="tab:green")
    axes[1].set_ylabel("total mass")
    axes[1].ticklabel_format(useOffset=False)
    axes[2].plot(t, jump, color="tab:red")
    axes[2].set_ylabel("interface jump")
    axes[2].set_xlabel("t")
    axes[0].set_title(f"diagnostics (max relative mass drift {drift:.2e})")
    fig.tight_layout()
    fig.savefig(job.output, dpi=150)
    plt.close(fig)
    return PlotResult(
        path=job.output,
        n_points=len(t),
        n_lines=4,
        printed={"max_relative_mass_drift": f"{drift:.6e}"},
    )


render.kind = "diagnostics"
main = script_main(render, "Plot gapflow trajectory diagnostics (diag.csv).")

if __name__ == "__main__":
    raise SystemExit(main())
