# %% [markdown]
# # Focusing beyond the Fraunhofer picture
#
# A uniform (rect) excitation of a 1 m aperture at 28 GHz illuminates a
# 1 m receiver at 2 m with a pattern about as wide as the aperture itself.
# Conjugating the spherical phase towards a point on the receiver instead
# concentrates the field into a spot a few centimetres wide.

# %%
import numpy as np

from nfmodes import ScenarioGeometry
from nfmodes.analysis import beam_pattern
from nfmodes.basis import focusing_profile, steering_profile
from nfmodes.modes import fraunhofer_distance

g = ScenarioGeometry(tx_length=1.0, rx_length=1.0, distance=2.0, frequency=28e9)
print(f"wavelength {g.wavelength * 1e3:.2f} mm, "
      f"Fraunhofer distance {fraunhofer_distance(g.tx_length, g.wavelength):.0f} m")

# %%
y = np.linspace(-1.0, 1.0, 2001)
rect = beam_pattern(steering_profile(0.0, g), g, y)
focus = {yf: beam_pattern(focusing_profile(yf, g), g, y) for yf in (0.0, 0.25)}


def half_power_width(p):
    inside = y[p.magnitude >= 1 / np.sqrt(2)]
    return inside.max() - inside.min()


print(f"rect     half-power width {half_power_width(rect):.3f} m")
for yf, p in focus.items():
    print(f"focus {yf:+.2f} peak at {y[np.argmax(p.magnitude)]:+.4f} m, "
          f"half-power width {half_power_width(p) * 100:.2f} cm")

# %% [markdown]
# Plot the normalized magnitudes when matplotlib is available.

# %%
try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    plt = None

if plt is not None:
    fig, ax = plt.subplots(figsize=(7, 3.5))
    ax.plot(y, rect.magnitude, label="rect")
    for yf, p in focus.items():
        ax.plot(y, p.magnitude, label=f"focus y={yf:g} m")
    ax.set_xlabel("y on receiver [m]")
    ax.set_ylabel("normalized |field|")
    ax.legend()
    fig.tight_layout()
    fig.savefig("focusing_vs_fresnel.png", dpi=120)
