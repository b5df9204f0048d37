# %% [markdown]
# # How many modes?
#
# Closed-form counts against the SVD count (99 % of the squared singular
# values) for a 20 cm transmitter and a 1 m receiver.  First the parallel
# geometry at 28 GHz as a function of ``F = z / L_R``, then the rotation of
# the transmitter at 60 GHz and 2 m.

# %%
import numpy as np

from nfmodes import ScenarioGeometry
from nfmodes.analysis import sweep

parallel = ScenarioGeometry(0.2, 1.0, 1.0, 28e9)
F = np.array([0.25, 0.5, 1, 2, 5, 10, 20, 50])
res_F = sweep(parallel, "F", F, svd_every=1, focusing=False)
print(" F      classic parallel  svd")
for f, c, p, s in zip(F, res_F.column("N_classic"), res_F.column("N_parallel"), res_F.column("N_svd")):
    print(f"{f:5.2f} {c:9.2f} {p:8.2f} {s:4.0f}")

# %% [markdown]
# At large ``F`` both closed forms fall towards a single mode.  At small
# ``F`` the classic paraxial count keeps growing while the parallel count
# saturates, as the SVD does.

# %%
rotated = ScenarioGeometry(0.2, 1.0, 2.0, 60e9)
theta = np.radians(np.arange(0, 91, 15))
res_t = sweep(rotated, "theta", theta, svd_every=1, focusing=False)
print("theta  generic  svd")
for t, n, s in zip(np.degrees(theta), res_t.column("N_generic"), res_t.column("N_svd")):
    print(f"{t:5.0f} {n:8.2f} {s:4.0f}")

# %%
try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    plt = None

if plt is not None:
    fig, (a, b) = plt.subplots(1, 2, figsize=(10, 3.5))
    a.loglog(F, res_F.column("N_classic"), label="classic")
    a.loglog(F, res_F.column("N_parallel"), label="parallel")
    a.loglog(F, res_F.column("N_svd"), "o", label="SVD")
    a.set_xlabel("F = z / L_R")
    a.legend()
    b.plot(np.degrees(theta), res_t.column("N_generic"), label="closed form")
    b.plot(np.degrees(theta), res_t.column("N_svd"), "o", label="SVD")
    b.set_xlabel("rotation [deg]")
    b.legend()
    fig.tight_layout()
    fig.savefig("mode_count_curves.png", dpi=120)
