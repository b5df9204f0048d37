# %% [markdown]
# # SVD modes against focusing and closed-form bases
#
# The SVD gives exactly orthogonal modes but needs the full coupling
# operator.  Focusing bases are cheap to build and almost orthogonal.  For
# paraxial links closed-form bases exist: steered beams with sinc-shaped
# receive functions (uplink) and Fresnel chirps (downlink).

# %%
from nfmodes import ScenarioGeometry
from nfmodes.analysis import compare_methods
from nfmodes.basis import fresnel_downlink_bases, sis_uplink_bases

scenarios = {
    "uplink, 0.2 m -> 1 m at 5 m": ScenarioGeometry(0.2, 1.0, 5.0, 28e9),
    "downlink, 1 m -> 0.2 m at 5 m": ScenarioGeometry(1.0, 0.2, 5.0, 28e9),
    "uplink, 0.2 m -> 2 m at 5 m": ScenarioGeometry(0.2, 2.0, 5.0, 28e9),
}
for name, g in scenarios.items():
    rec = compare_methods(g)
    print(f"{name}: SVD {rec.N_svd}, focusing {rec.N_focusing}, "
          f"closed form {rec.N_closed_form} ({rec.closed_form}); "
          f"TX {rec.gram_worst_tx_db:.1f} dB, RX {rec.gram_worst_rx_db:.1f} dB")

# %% [markdown]
# The closed-form bases on their own.

# %%
tx, rx = sis_uplink_bases(scenarios["uplink, 0.2 m -> 1 m at 5 m"])
print("uplink foci", tx.foci.round(4), f"TX {tx.gram_worst_db:.1f} dB, RX {rx.gram_worst_db:.1f} dB")
tx, rx = fresnel_downlink_bases(scenarios["downlink, 1 m -> 0.2 m at 5 m"])
print("downlink foci", tx.foci.round(4), f"TX {tx.gram_worst_db:.1f} dB, RX {rx.gram_worst_db:.1f} dB")
