"""Vote kernels, the critical tolerance ratio, and the pitchfork sweep.

Evaluates the satisficing kernel and expected-vote surfaces, reports the
regime boundary, and sweeps the voter tolerance across the bifurcation,
writing a CSV table and a bifurcation-diagram PNG to demos/output/.
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

print("satisficing probabilities at sigma = 0.6:")
for d in (0.0, 0.3, 0.6, 1.2):
    print(f"  distance {d:.1f} -> {pz.satisficing(d, 0.6):.5f}")

print("\nexpected votes, both parties at the center:",
      f"{pz.expected_votes_point([0.0, 0.0], params, 0):.5f}")
ystar = pz.polarized_equilibrium(params)
print(f"polarized equilibrium: +-{ystar:.5f} (inter-party gap {2 * ystar:.4f})")
print(f"critical tolerance ratio sigma/sigma0: {pz.critical_ratio():.5f}")

report = pz.classify_equilibria(params)
print(f"\nregime at sigma = 0.6: {report.regime}")
for state, tag in report.equilibria:
    print(f"  equilibrium ({state[0]:+.5f}, {state[1]:+.5f}): {tag}")

# Sweep the tolerance across the bifurcation.
sigmas = np.linspace(0.3, 1.1, 81)
branches = []
for sigma in sigmas:
    p = pz.ModelParams(sigma0=0.93, sigma=float(sigma), k=0.5)
    try:
        branches.append(pz.polarized_equilibrium(p))
    except pz.ConsensusRegimeError:
        branches.append(0.0)
branches = np.array(branches)

with open(out_dir / "pitchfork_sweep.csv", "w", encoding="utf-8") as handle:
    handle.write("sigma,equilibrium_position\n")
    for sigma, y in zip(sigmas, branches):
        handle.write(f"{sigma!r},{y!r}\n")

critical_sigma = pz.critical_ratio() * 0.93
fig, ax = plt.subplots(figsize=(7, 4.5))
ax.plot(sigmas, branches, "C0", label="stable polarized branch")
ax.plot(sigmas, -branches, "C0")
ax.plot(sigmas, np.zeros_like(sigmas), "C3--", label="center (stable only past the fork)")
ax.axvline(critical_sigma, color="k", lw=0.8, ls=":", label=f"critical sigma = {critical_sigma:.3f}")
ax.set_xlabel("voter tolerance sigma")
ax.set_ylabel("equilibrium positions")
ax.set_title("Pitchfork of the two-party satisficing flow (sigma0 = 0.93)")
ax.legend()
fig.tight_layout()
fig.savefig(out_dir / "pitchfork.png", dpi=150)
print(f"\nwrote {out_dir / 'pitchfork_sweep.csv'} and {out_dir / 'pitchfork.png'}")
