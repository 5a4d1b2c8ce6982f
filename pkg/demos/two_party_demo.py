"""Nominal two-party polarization run.

Both parties start as truncated Gaussians straddling the center, drift
apart, and collapse onto the polarized equilibria while the inter-party
Wasserstein distance grows monotonically to ~0.67.  Saves band and
distance plots plus the recorded diagnostics.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

import polarize as pz

out_dir = Path(__file__).parent / "output"
out_dir.mkdir(exist_ok=True)

params = pz.ModelParams(sigma0=0.93, sigma=0.6, k=0.5)
init = pz.InitSpec(
    parties=(
        pz.PartyInit(kind="truncated-gaussian", mean=-0.25, std=0.15, lo=-0.8, hi=0.0, count=150),
        pz.PartyInit(kind="truncated-gaussian", mean=0.25, std=0.15, lo=0.0, hi=0.8, count=150),
    ),
    seed=42,
)

run = pz.simulate(init, params, tau=0.05, steps=3000, record_every=25)
print(f"ran {run.steps_run} steps (early stop: {run.early_stopped})")
print(f"final means: {np.round(run.means[-1], 5)}")
print(f"final stds:  {run.stds[-1]}")
print(f"final inter-party W2: {run.w2_matrix[-1, 0, 1]:.5f}  (prediction: 2*y* = "
      f"{2 * pz.polarized_equilibrium(params):.5f})")
print(f"final abstention: {run.abstention[-1]:.5f}")

fig, (ax_band, ax_w2) = plt.subplots(2, 1, figsize=(7, 7), sharex=True)
colors = ("C0", "C3")
for i, color in enumerate(colors):
    mean = run.means[:, i]
    std = run.stds[:, i]
    ax_band.plot(run.times, mean, color, label=f"party {i + 1} mean")
    ax_band.fill_between(run.times, mean - std, mean + std, color=color, alpha=0.25)
ax_band.set_ylabel("ideology")
ax_band.set_title("Party distributions tighten and polarize (mean +- std)")
ax_band.legend()

ax_w2.plot(run.times, run.w2_matrix[:, 0, 1], "C2")
ax_w2.axhline(2 * pz.polarized_equilibrium(params), color="k", lw=0.8, ls=":")
ax_w2.set_xlabel("time")
ax_w2.set_ylabel("inter-party W2")
ax_w2.set_title("Polarization grows monotonically and saturates")
fig.tight_layout()
fig.savefig(out_dir / "two_party_run.png", dpi=150)

final = run.snapshots[-1]
fig2, ax = plt.subplots(figsize=(7, 3.5))
ax.hist(final[0].positions, bins=40, color="C0", alpha=0.7, label="party 1")
ax.hist(final[1].positions, bins=40, color="C3", alpha=0.7, label="party 2")
ax.set_xlabel("ideology")
ax.set_title("Final ensembles: both parties homogeneous at +-y*")
ax.legend()
fig2.tight_layout()
fig2.savefig(out_dir / "two_party_final.png", dpi=150)
print(f"wrote {out_dir / 'two_party_run.png'} and {out_dir / 'two_party_final.png'}")
