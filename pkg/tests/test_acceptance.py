"""Acceptance criteria, one test per criterion.

Each test records a PASS/FAIL line (shown in the terminal summary) before it
asserts, so a red criterion still reports what was measured.
"""

import math
import time
from pathlib import Path

import numpy as np
import pytest

from stretchshock.config import load_config
from stretchshock.material import NondimensionalParams
from stretchshock.oracle import OracleMotion, oracle_front
from stretchshock.profiles import CompactBump, RationalBump, make_constant_stretch_data, validate
from stretchshock.runner import restart_check, run
from stretchshock.state import energy_audit, heat_power, rh_residual
from stretchshock.tracker import Termination, continuation_check, integrate

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
R_VALUES = (0.5, 1.0, 2.0)


def random_data(rng):
    """Perturbed constant-stretch data with amplitudes at most 0.05."""
    zeta = float(rng.choice([0.0, 0.5, 1.0]))
    prm = NondimensionalParams.simple(2.0, 1.0, zeta)
    bumps = []
    for _ in range(2):
        a = float(rng.uniform(-0.05, 0.05))
        c = float(rng.uniform(0.0, 10.0))
        w = float(rng.uniform(0.5, 3.0))
        if rng.random() < 0.5:
            bumps.append(RationalBump(a, c, w, float(rng.uniform(1.0, 3.0))))
        else:
            bumps.append(CompactBump(a, c + w, w, 0.5 * w))
    d = make_constant_stretch_data(prm, 1.0, 2.0, *bumps)
    validate(d)
    return d


@pytest.fixture(scope="module")
def random_runs():
    rng = np.random.default_rng(7)
    runs = []
    for _ in range(20):
        d = random_data(rng)
        runs.append(integrate(d, 50.0 if d.params.zeta == 0 else math.inf))
    return runs


def lax_event_run():
    prm = NondimensionalParams.simple(2, 1, 0, eta=0.1)
    b = CompactBump(-0.7, 10, 5, 2)
    return integrate(make_constant_stretch_data(prm, 1, 2, b, b), 50.0)


def test_c1_oracle_exactness(verdict):
    details, ok = [], True
    for zeta in (0.0, 1.0):
        prm = NondimensionalParams.simple(2.0, 1.0, zeta)
        motion = OracleMotion(1.0, 2.0, prm)
        horizon = 10.0 if zeta == 0 else 0.999 * prm.T
        t0 = time.perf_counter()
        traj = integrate(make_constant_stretch_data(prm, 1.0, 2.0), horizon)
        wall = time.perf_counter() - t0
        sig, _ = oracle_front(motion, traj.t)
        if zeta > 0:
            # the closed form quoted for this case
            np.testing.assert_allclose(sig, 1 + 2 * traj.t / (1 - traj.t), rtol=1e-14)
        err = float(np.max(np.abs(traj.sigma - sig)))
        ok &= err <= 1e-8 and wall < 5.0 and traj.final.t == pytest.approx(horizon, abs=1e-12)
        details.append(f"zeta={zeta:g} err={err:.2e} time={wall:.2f}s")
    verdict(1, ok, "; ".join(details))
    assert ok


def test_c2_rankine_hugoniot(random_runs, verdict):
    worst, steps = 0.0, 0
    for traj in random_runs:
        for t, sigma, sp in zip(traj.t, traj.sigma, traj.sigma_prime):
            jump_N = sp**2 * float(traj.field.gap(sigma, t))
            worst = max(worst, abs(rh_residual(traj, t)) / (1e-8 * (1.0 + jump_N)))
            steps += 1
    ok = worst <= 1.0
    verdict(2, ok, f"{len(random_runs)} runs, {steps} steps, max residual / tolerance = {worst:.2e}")
    assert ok


def test_c3_dissipation_and_energy_balance(random_runs, verdict):
    # every accepted step of every run that did not end in an event
    q_ok = all(
        np.all(heat_power(tr.sigma_prime, tr.N_plus, tr.params.N1) < 0)
        for tr in random_runs if not tr.termination.is_event
    )
    # the flat zeta = 0 front dissipates exactly 3 per unit time
    flat = integrate(make_constant_stretch_data(NondimensionalParams.simple(2, 1, 0), 1, 2), 2.0)
    q_flat = heat_power(flat.sigma_prime, flat.N_plus, 2.0)
    q_exact = float(np.max(np.abs(q_flat + 3.0)))
    audits = [(flat, 0.5, 8.0)]
    blow = integrate(make_constant_stretch_data(NondimensionalParams.simple(2, 1, 1), 1, 2), 0.5)
    audits.append((blow, 0.5, 2 * blow.final.sigma + 1))
    for tr in random_runs[:4]:
        end = min(tr.final.t, 2.0 if tr.params.zeta == 0 else 0.5 * tr.params.T)
        short = integrate(tr.data, end)
        audits.append((short, 0.5, 2 * short.final.sigma + 1))
    worst_rel, all_neg = 0.0, True
    for tr, a, b in audits:
        t0, t1 = tr.t_range
        rep = energy_audit(tr, a, b, np.linspace(t0 + 0.05 * (t1 - t0), t1 - 0.05 * (t1 - t0), 200))
        worst_rel = max(worst_rel, rep.max_relative_defect)
        all_neg &= rep.all_Q_negative
        if tr is flat:
            q_exact = max(q_exact, max(abs(row.Q + 3.0) for row in rep.rows))
    ok = q_ok and all_neg and q_exact <= 1e-10 and worst_rel <= 1e-6
    verdict(3, ok, f"Q<0 on all steps={q_ok and all_neg}, |Q+3| flat={q_exact:.1e}, "
                   f"max relative balance defect={worst_rel:.1e} ({len(audits)} audits x 200 times)")
    assert ok


def test_c4_lax_bound(random_runs, verdict):
    clean = [tr for tr in random_runs if not tr.termination.is_event]
    margin = min(float(np.min(tr.sigma_prime)) - 1.0 for tr in clean)
    ev = lax_event_run()
    certified = (ev.termination is Termination.LAX_FAILURE and ev.event is not None
                 and bool(np.all(ev.sigma_prime[:-1] > 1.0))
                 and not continuation_check(ev, ev.final.t).lax)
    ok = margin > 0 and certified
    verdict(4, ok, f"min(sigma'-1) over {len(clean)} event-free runs = {margin:.3e}; "
                   f"subsonic construction ends in certified {ev.termination.value} at t={ev.final.t:.6f}")
    assert ok


def _stability_cfg(name, r, order):
    return load_config(CONFIGS / name, [f"data.r={r}", f"data.chi0.order={order}",
                                        f"data.chi1.order={order}", "output.formats=json"])


def test_c5_stability_zeta0(tmp_path, verdict):
    ok, details = True, []
    for r in R_VALUES:
        cfg = _stability_cfg("stability_zeta0.ini", r, r)
        summary, code = run(cfg, tmp_path / f"r{r}")
        fits = summary["fits"] or {}
        p_chit = fits.get("chit", {}).get("exponent", math.nan)
        p_speed = fits.get("speed", {}).get("exponent", math.nan)
        good = (code == 0 and summary["termination"] == "reached_horizon" and summary["B"] <= 0.01
                and abs(p_chit + r) <= 0.1 * r and abs(p_speed + r) <= 0.1 * r
                and summary["wall_time_s"] < 60)
        ok &= good
        details.append(f"r={r:g}: chi_t {p_chit:.4f}, speed {p_speed:.4f}, B={summary['B']:.3g}, "
                       f"{summary['wall_time_s']:.1f}s")
    verdict(5, ok, "; ".join(details))
    assert ok


@pytest.fixture(scope="module")
def zetapos_runs(tmp_path_factory):
    out = tmp_path_factory.mktemp("zetapos")
    return {r: run(_stability_cfg("stability_zetapos.ini", r, r + 1), out / f"r{r}") for r in R_VALUES}


def test_c6_blow_up_and_rates(zetapos_runs, verdict):
    """Checked exactly as stated, including the -1 tension exponent."""
    ok, details = True, []
    for r, (summary, code) in zetapos_runs.items():
        fits = summary["fits"] or {}
        p_speed = fits.get("speed", {}).get("exponent", math.nan)
        p_N0 = fits.get("N0", {}).get("exponent", math.nan)
        blow = summary["termination"] == "blow_up_certified"
        speed_ok = abs(p_speed - r) <= 0.1 * r
        tension_ok = abs(p_N0 + 1.0) <= 0.1
        ok &= blow and speed_ok and tension_ok and summary["B"] <= 0.01
        details.append(f"r={r:g}: {summary['termination']}, speed {p_speed:.4f} (target {r:g}), "
                       f"N(0,t) {p_N0:.4f} (stated -1)")
    verdict(6, ok, "; ".join(details))
    assert ok


def test_c6_tension_exponent_derived(zetapos_runs, verdict):
    """Same runs; the N(0,t) exponent against the value implied by sigma' ~ (T-t)**-2."""
    exps = [s["fits"]["N0"]["exponent"] for s, _ in zetapos_runs.values()]
    ok = all(abs(p + 3.0) <= 0.3 for p in exps)
    verdict("6 (supplementary, tension exponent -3)", ok, ", ".join(f"{p:.6f}" for p in exps))
    assert ok


def test_c7_instability(tmp_path, verdict):
    summary, code = run(load_config(CONFIGS / "instability.ini"), tmp_path)
    t_ev = (summary["event"] or {}).get("t", math.nan)
    ok = code == 2 and summary["termination"] == "second_shock" and abs(t_ev - 0.9) <= 1e-3
    verdict(7, ok, f"{summary['termination']} at t={t_ev:.9f}")
    assert ok


def test_c8_finite_volume_crossvalidation(tmp_path, verdict):
    t0 = time.perf_counter()
    summary, code = run(load_config(CONFIGS / "crossvalidate.ini"), tmp_path)
    wall = time.perf_counter() - t0
    cv = summary["crossvalidation"]
    err, ds = cv["max_front_error"], cv["ds"]
    plateau_rel = abs(cv["plateau_tension"] - 5.0) / 5.0
    ratio = cv["refined_front_error"] / err
    ok = err <= 5 * ds and plateau_rel <= 0.02 and cv["refined_front_error"] <= 0.5 * err and wall < 120
    verdict(8, ok, f"front error {err / ds:.3f} cells, plateau {cv['plateau_tension']:.6f}, "
                   f"refinement ratio {ratio!r}, {wall:.1f}s")
    assert ok


@pytest.fixture(scope="module")
def restarts(random_runs):
    """(sigma, |difference|) samples from restarts at 25/50/75% of each run's range."""
    flat = integrate(make_constant_stretch_data(NondimensionalParams.simple(2, 1, 1), 1, 2))
    out = []
    for tr in random_runs[:6] + [flat]:
        t0, t1 = tr.t_range
        for frac in (0.25, 0.5, 0.75):
            t_star = t0 + frac * (t1 - t0)
            again = integrate(tr.data, t1, tr.options, start=(t_star, tr.front_at(t_star).sigma),
                              field=tr.field)
            ts = np.linspace(t_star, min(t1, again.final.t), 200)
            s1 = np.array([tr.front_at(t).sigma for t in ts])
            s2 = np.array([again.front_at(t).sigma for t in ts])
            out.append((tr.params.zeta, s1, np.abs(s1 - s2)))
    return out


def test_c9_restart(restarts, verdict):
    """Checked as stated: absolute 1e-8 in sigma over the whole remaining trajectory."""
    worst = max(float(d.max()) for _, _, d in restarts)
    z0 = max((float(d.max()) for z, _, d in restarts if z == 0), default=0.0)
    ok = worst <= 1e-8
    verdict(9, ok, f"{len(restarts)} restarts, max |sigma difference| = {worst:.2e} "
                   f"(zeta=0 runs: {z0:.2e}; worst case at sigma ~ 1e6 near blow-up)")
    assert ok


def test_c9_restart_resolution_limited(restarts, verdict):
    """Restart differences stay at the double-precision floor of the blow-up tail.

    Near T the gap N1 - (zeta t + tau) is a difference of nearly equal
    numbers, so the front is only determined to a relative 1e-10 or so once
    sigma is large.  Below sigma = 1e3 the absolute 1e-8 holds; everywhere
    the relative difference stays under 1e-9.
    """
    low = max(float(d[s <= 1e3].max()) for _, s, d in restarts)
    rel = max(float(np.max(d / np.maximum(1.0, s))) for _, s, d in restarts)
    ok = low <= 1e-8 and rel <= 1e-9
    verdict("9 (supplementary, resolution-limited)", ok,
            f"max |diff| for sigma <= 1e3: {low:.2e}; max |diff|/max(1, sigma): {rel:.2e}")
    assert ok
