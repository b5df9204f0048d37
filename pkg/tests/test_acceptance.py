"""Acceptance checks, one PASS/FAIL line per criterion (or sub-criterion).

Run with ``pytest tests/test_acceptance.py -v``; the PASS/FAIL lines are
collected in the terminal summary.  ``python tests/test_acceptance.py`` runs
the same checks without pytest.
"""

from __future__ import annotations

import math
import time
import warnings
from functools import lru_cache

import numpy as np

from nfmodes import (
    ScenarioGeometry,
    count_generic,
    count_limit,
    count_parallel,
    count_perpendicular,
    f_ratio_counts,
    focusing_basis,
    hemisphere_steering_basis,
    propagate,
    round_count,
    sis_uplink_bases,
    sis_uplink_foci,
    fresnel_downlink_foci,
    sum_rule,
    svd_modes,
)
from nfmodes.basis import ValidityWarning
from nfmodes.modes import MeshCoarseningWarning, count_classic_paraxial

RESULTS: list[str] = []

F28, F60, F300 = 28e9, 60e9, 300e9


def report(label: str, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {label}: {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


def offaxis():
    return ScenarioGeometry(1.0, 0.2, 2.0, F28, rx_center_offset=1.2, tx_rotation=math.radians(20))


def paraxial(direction):
    lt, lr = (0.2, 1.0) if direction == "uplink" else (1.0, 0.2)
    return ScenarioGeometry(lt, lr, 5.0, F28)


def rotated45(direction):
    lt, lr = (0.2, 1.0) if direction == "uplink" else (1.0, 0.2)
    return ScenarioGeometry(lt, lr, 2.0, F28, tx_rotation=math.pi / 4)


@lru_cache(maxsize=None)
def offaxis_results():
    t0 = time.perf_counter()
    g = offaxis()
    tx, rx = focusing_basis(g)
    sol = svd_modes(g)
    return tx, rx, sol, time.perf_counter() - t0


@lru_cache(maxsize=None)
def focusing(scenario, direction):
    g = paraxial(direction) if scenario == 1 else rotated45(direction)
    return focusing_basis(g)


def within(value, target, tol):
    return abs(value - target) <= tol


# -------------------------------------------------------------- criterion 1


def test_criterion_1_offaxis_mode_counts():
    tx, _, sol, elapsed = offaxis_results()
    ok = len(tx) == 7 and abs(sol.mode_count - 7) <= 1 and elapsed < 60
    report(
        "1 (off-axis rotated link counts)",
        ok,
        f"focusing {len(tx)} (need 7), SVD {sol.mode_count} (need 7+-1), {elapsed:.1f} s (< 60 s)",
    )


# -------------------------------------------------------------- criterion 2


def test_criterion_2_offaxis_correlations():
    tx, rx, _, _ = offaxis_results()
    ok = tx.gram_worst_db <= -20 and rx.gram_worst_db <= -13
    report(
        "2 (off-axis rotated link correlations)",
        ok,
        f"TX worst {tx.gram_worst_db:.1f} dB (<= -20), RX worst {rx.gram_worst_db:.1f} dB (<= -13)",
    )


# -------------------------------------------------------------- criterion 3


def test_criterion_3a_paraxial_focusing_counts():
    up, down = len(focusing(1, "uplink")[0]), len(focusing(1, "downlink")[0])
    report("3a (paraxial link focusing N=3)", up == 3 and down == 3, f"uplink {up}, downlink {down}")


def test_criterion_3b_paraxial_svd_count():
    up, down = svd_modes(paraxial("uplink")).mode_count, svd_modes(paraxial("downlink")).mode_count
    report("3b (paraxial link SVD N=3)", up == 3 and down == 3, f"uplink {up}, downlink {down} at 99% sigma^2")


def test_criterion_3c_paraxial_closed_form_count():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ValidityWarning)
        up = len(sis_uplink_foci(paraxial("uplink")).foci)
        down = len(fresnel_downlink_foci(paraxial("downlink")).foci)
    report("3c (paraxial link closed-form N=3)", up == 3 and down == 3, f"steering {up}, Fresnel {down}")


def test_criterion_3d_paraxial_uplink_correlations():
    tx, rx = focusing(1, "uplink")
    ok = within(tx.gram_worst_db, -65, 6) and within(rx.gram_worst_db, -25, 6)
    report(
        "3d (paraxial link uplink correlations)",
        ok,
        f"TX {tx.gram_worst_db:.1f} dB vs -65+-6, RX {rx.gram_worst_db:.1f} dB vs -25+-6",
    )


def test_criterion_3e_paraxial_downlink_correlations():
    tx, rx = focusing(1, "downlink")
    ok = within(tx.gram_worst_db, -43, 6) and within(rx.gram_worst_db, -25, 6)
    report(
        "3e (paraxial link downlink correlations)",
        ok,
        f"TX {tx.gram_worst_db:.1f} dB vs -43+-6, RX {rx.gram_worst_db:.1f} dB vs -25+-6",
    )


# -------------------------------------------------------------- criterion 4


def test_criterion_4a_rotated45_counts():
    up, down = len(focusing(2, "uplink")[0]), len(focusing(2, "downlink")[0])
    ok = abs(up - 6) <= 1 and abs(down - 7) <= 1 and abs(up - down) <= 1
    report("4a (rotated 45 deg link counts)", ok, f"uplink {up} (6+-1), downlink {down} (7+-1)")


def test_criterion_4b_rotated45_correlations():
    utx, urx = focusing(2, "uplink")
    dtx, drx = focusing(2, "downlink")
    ok = (
        within(utx.gram_worst_db, -32, 6)
        and within(urx.gram_worst_db, -25, 6)
        and within(dtx.gram_worst_db, -21, 6)
        and within(drx.gram_worst_db, -14, 6)
    )
    report(
        "4b (rotated 45 deg link correlations)",
        ok,
        f"uplink {utx.gram_worst_db:.1f}/{urx.gram_worst_db:.1f} dB vs -32/-25, "
        f"downlink {dtx.gram_worst_db:.1f}/{drx.gram_worst_db:.1f} dB vs -21/-14 (+-6)",
    )


# -------------------------------------------------------------- criterion 5

LT = 0.2


def _lam(f0):
    return ScenarioGeometry(LT, 1.0, 10.0, f0).wavelength


def test_criterion_5a_parallel_plateau():
    errs = []
    for f0 in (F28, F300):
        lam = _lam(f0)
        n_par, _ = f_ratio_counts(1e-3, LT, lam)
        errs.append(abs(n_par / (1 + 2 * LT / lam) - 1))
    report("5a (parallel plateau)", max(errs) <= 0.01, f"relative error {max(errs):.2e} (<= 1%)")


def test_criterion_5b_perpendicular_plateau():
    errs = []
    for f0 in (F28, F300):
        lam = _lam(f0)
        _, n_perp = f_ratio_counts(1e-3, LT, lam)
        errs.append(abs(n_perp / (1 + LT / lam) - 1))
    report("5b (perpendicular plateau)", max(errs) <= 0.01, f"relative error {max(errs):.2e} (<= 1%)")


def test_criterion_5c_far_field_single_mode():
    lam = _lam(F28)
    counts = [round_count(c) for F in (50, 100, 1000) for c in f_ratio_counts(F, LT, lam)]
    lam300 = _lam(F300)
    info = [round_count(f_ratio_counts(F, LT, lam300)[0]) for F in (50, 100, 1000)]
    report(
        "5c (F >= 50 gives 1 mode at 28 GHz)",
        all(c == 1 for c in counts),
        f"28 GHz rounded counts {counts}; 300 GHz parallel (info) {info}",
    )


def test_criterion_5d_counts_at_F1():
    n28 = f_ratio_counts(1.0, LT, _lam(F28))[0]
    n300 = f_ratio_counts(1.0, LT, _lam(F300))[0]
    ok = 16 <= n28 <= 19 and 165 <= n300 <= 185
    report("5d (F = 1 counts)", ok, f"28 GHz {n28:.2f} in [16, 19], 300 GHz {n300:.2f} in [165, 185]")


def test_criterion_5e_svd_markers():
    t0 = time.perf_counter()
    deltas = []
    for F in (0.25, 0.5, 1.0, 2.0, 5.0):
        g = ScenarioGeometry(LT, 1.0, F, F28)
        deltas.append(svd_modes(g).mode_count - round_count(count_parallel(g)))
    info = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", MeshCoarseningWarning)
        for F in (1.0, 5.0):
            g = ScenarioGeometry(LT, 1.0, F, F300)
            info.append(svd_modes(g).mode_count - round_count(count_parallel(g)))
    elapsed = time.perf_counter() - t0
    ok = all(abs(d) <= 1 for d in deltas) and elapsed < 600
    report(
        "5e (F sweep SVD markers)",
        ok,
        f"28 GHz N_svd - round(N_parallel) at F=0.25..5: {deltas}; 300 GHz F=1,5 (info) {info}; "
        f"{elapsed:.0f} s",
    )


# -------------------------------------------------------------- criterion 6


def test_criterion_6_rotation_sweep():
    thetas = np.radians(np.linspace(0, 90, 181))
    monotone, endpoints, markers, allowed = True, 0.0, [], True
    for lr in (0.5, 1.0, 2.0, 4.0):
        g = ScenarioGeometry(LT, lr, 2.0, F60)
        curve = np.array([count_generic(g.replace(tx_rotation=t)) for t in thetas])
        monotone &= bool(np.all(np.diff(curve) < 0))
        endpoints = max(
            endpoints,
            abs(curve[0] - count_parallel(g)),
            abs(curve[-1] - count_perpendicular(g.replace(tx_rotation=math.pi / 2))),
        )
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", MeshCoarseningWarning)
            for deg in range(0, 91, 15):
                gt = g.replace(tx_rotation=math.radians(deg))
                d = svd_modes(gt).mode_count - round_count(count_generic(gt))
                tol = 2 if lr == 4.0 and abs(deg - 45) <= 15 else 1
                if abs(d) > tol:
                    allowed = False
                    markers.append(f"L_R={lr} {deg}deg:{d:+d}")
    ok = monotone and endpoints <= 1e-12 and allowed
    report(
        "6 (rotation sweep)",
        ok,
        f"monotone {monotone}, endpoint error {endpoints:.1e}, "
        f"markers outside tolerance: {markers or 'none'}",
    )


# -------------------------------------------------------------- criterion 7


def test_criterion_7_hemisphere_steering():
    b = hemisphere_steering_basis(ScenarioGeometry(0.1, 1.0, 5.0, F28))
    ok = len(b) == 19 and b.gram_worst_db <= -100
    report("7 (hemisphere steering basis)", ok, f"{len(b)} members, worst {b.gram_worst_db:.0f} dB")


# -------------------------------------------------------------- criterion 8


def test_criterion_8_f_ratio_invariance():
    a = count_parallel(ScenarioGeometry(0.1, 1.0, 1.0, F28))
    b = count_parallel(ScenarioGeometry(0.1, 3.0, 3.0, F28))
    ok = abs(a - b) <= 1e-12 and round_count(a) == round_count(b) == 9
    report("8 (F = 1 invariance)", ok, f"N = {a:.12f} vs {b:.12f}, rounded {round_count(a)}")


# -------------------------------------------------------------- criterion 9


def test_criterion_9a_sum_rule():
    g = paraxial("uplink")
    gamma = sum_rule(g)
    coarse = abs(svd_modes(g).coupling_gain / gamma - 1)
    tx, rx = g.tx_mesh(), g.rx_mesh()
    fine = abs(svd_modes(g, tx.refined(2), rx.refined(2)).coupling_gain / gamma - 1)
    ok = coarse <= 1e-2 and fine < coarse
    report("9a (sum rule)", ok, f"relative error {coarse:.2e} at default mesh, {fine:.2e} refined")


def test_criterion_9b_propagation_oracle():
    from nfmodes import focusing_profile

    g = offaxis()
    rx = g.rx_mesh()
    p = focusing_profile(1.25, g).profile
    adaptive = propagate(p, g, rx).values
    fine_mesh = p.mesh.refined(10)
    oracle = propagate(type(p).from_function(fine_mesh, p.source), g, rx, rtol=None).values
    err = np.linalg.norm(adaptive - oracle) / np.linalg.norm(oracle)
    report("9b (propagation vs 10x mesh)", err <= 1e-6, f"relative error {err:.2e} (<= 1e-6)")


def test_criterion_9c_sis_sinc_vs_propagation():
    g = ScenarioGeometry(0.05, 3.0, 3.0, F28)
    tx, rx = sis_uplink_bases(g)
    k = g.wavenumber
    worst = 0.0
    for phi, psi in zip(tx.members, rx.members):
        field = propagate(phi, g, psi.mesh)
        # strip the common propagation phase from the aperture center
        stripped = field.values * np.exp(1j * k * np.hypot(g.distance, psi.mesh.coordinates))
        f = stripped / math.sqrt(np.sum(psi.mesh.weights * np.abs(stripped) ** 2))
        overlap = abs(np.sum(psi.mesh.weights * np.conj(psi.values) * f))
        worst = max(worst, math.sqrt(max(0.0, 2 - 2 * overlap)))
    report("9c (SIS sinc vs propagation)", worst <= 0.05, f"{len(tx)} members, worst L2 {worst:.3f}")


def _random_geometries(n, seed):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        f0 = 10 ** rng.uniform(9, 12)
        lam = 299792458.0 / f0
        z = lam * 10 ** rng.uniform(0.8, 4)
        g = ScenarioGeometry(
            tx_length=lam * 10 ** rng.uniform(-0.5, 3),
            rx_length=lam * 10 ** rng.uniform(-0.5, 4),
            distance=max(z, 5 * lam),
            frequency=f0,
            tx_rotation=rng.uniform(0, math.pi / 2),
        )
        out.append(g)
    return out


def test_criterion_9d_scale_invariance():
    counters = (count_parallel, count_perpendicular, count_generic, count_limit, count_classic_paraxial)
    worst = 0.0
    for g in _random_geometries(200, 7):
        for alpha in (1e-3, 0.37, 11.0):
            gs = g.replace(
                tx_length=alpha * g.tx_length,
                rx_length=alpha * g.rx_length,
                distance=alpha * g.distance,
                frequency=g.frequency / alpha,
            )
            for c in counters:
                a, b = c(g), c(gs)
                worst = max(worst, abs(a - b) / max(1.0, abs(a)))
    report("9d (scale invariance)", worst <= 1e-12, f"worst relative change {worst:.1e} (<= 1e-12)")


def test_criterion_9e_limit_bounds_generic():
    gs = _random_geometries(1000, 11)
    bad = sum(count_limit(g) < count_generic(g) for g in gs)
    report("9e (count_limit >= count_generic)", bad == 0, f"{bad} violations in {len(gs)} geometries")


if __name__ == "__main__":
    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_criterion")]
    failed = 0
    for t in tests:
        try:
            t()
        except AssertionError:
            failed += 1
    print(f"{len(tests) - failed}/{len(tests)} criteria passed")
