"""Scenario orchestration and serialized outputs.

``run(cfg, out_dir)`` executes one configuration and writes its artifacts:

* ``trajectory.csv`` with ``t,sigma,sigma_prime,N_plus,chit_plus,rh_residual``,
  one row per accepted step;
* ``state_<k>.csv`` snapshots (``s,region,chi,nu,N,chit``) at the
  configured sample times;
* ``energy.csv`` (``t,K,E_stored,P,Q,balance_defect``) for energy audits;
* ``deviations.csv`` for stability runs and ``fv_*.csv`` for cross-validation;
* ``summary.json``.

Floats are written with 17 significant digits so that files round-trip and
repeated runs are byte-identical.
"""

from __future__ import annotations

import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .config import RunConfig, Scenario, load_config
from .errors import ValidationError
from .fitting import NOISE_FLOOR, fit_decay
from .fv import energy_dissipation_rate, fv_run, rh_consistency
from .oracle import OracleMotion, asymptotic_deviation, oracle_front
from .profiles import make_constant_stretch_data, sigma1_infinity, validate, weighted_norm_B
from .state import energy_audit, rh_residual, sample_states
from .tracker import Termination, integrate

__all__ = ["run", "run_many", "build_data", "default_out_root", "exit_code", "OUT_ENV"]

log = logging.getLogger(__name__)

OUT_ENV = "STRETCHSHOCK_OUT"
TRAJ_HEADER = ("t", "sigma", "sigma_prime", "N_plus", "chit_plus", "rh_residual")
STATE_HEADER = ("s", "region", "chi", "nu", "N", "chit")
ENERGY_HEADER = ("t", "K", "E_stored", "P", "Q", "balance_defect")


def _fmt(x):
    if isinstance(x, str):
        return x
    return format(float(x), ".17g")


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _clean(obj):
    """JSON-safe copy: NaN/inf become null, numpy scalars become Python ones."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def build_data(cfg: RunConfig):
    """Initial data of a configuration, rescaled to ``scale_to_B`` if requested."""
    p0, p1 = cfg.chi0.build(), cfg.chi1.build()
    scale = cfg.scale_to_B is not None
    data = make_constant_stretch_data(cfg.params, cfg.sigma0, cfg.sigma1, p0, p1,
                                      check=cfg.check_data and not scale)
    if scale:
        B = weighted_norm_B(data, cfg.r, cfg.weight)
        if B > 0:
            data = data.scaled(cfg.scale_to_B / B)
        if cfg.check_data:
            rep = validate(data)
            if not rep.passed:
                f = rep.failures[0]
                raise ValidationError(f"condition {f.item} ({f.condition}) violated at s={f.s}: {f.message}",
                                      rep.failures)
    return data


def exit_code(termination) -> int:
    return 2 if termination is not None and Termination(termination).is_event else 0


def default_out_root() -> Path:
    return Path(os.environ.get(OUT_ENV, "runs"))


# --------------------------------------------------------------------------- #
# shared pieces
# --------------------------------------------------------------------------- #

def _horizon(cfg, default_zeta0, default_pos=math.inf):
    if cfg.horizon is not None:
        return cfg.horizon
    return default_zeta0 if cfg.params.zeta == 0 else default_pos


def _trajectory_rows(traj):
    rows = []
    max_abs, max_rel = 0.0, 0.0
    N1 = traj.params.N1
    for st in traj.states:
        res = rh_residual(traj, st.t)
        jump = st.sigma_prime**2 * (N1 - st.N_plus)
        max_abs = max(max_abs, abs(res))
        max_rel = max(max_rel, abs(res) / (1.0 + jump))
        rows.append((st.t, st.sigma, st.sigma_prime, st.N_plus, st.chit_plus, res))
    return rows, max_abs, max_rel


def _write_trajectory(traj, out: Path, summary: dict):
    rows, max_abs, max_rel = _trajectory_rows(traj)
    write_csv(out / "trajectory.csv", TRAJ_HEADER, rows)
    summary["max_rh_residual"] = max_abs
    summary["max_rh_relative"] = max_rel


def _write_snapshots(cfg, traj, out: Path, summary: dict):
    t0, t1 = traj.t_range
    files = []
    for k, t in enumerate(cfg.sample_times):
        if not t0 <= t <= t1:
            log.warning("sample time %r outside the tracked range; skipped", t)
            continue
        st = traj.front_at(t)
        s_max = cfg.snapshot_s_max or 2.0 * st.sigma + t + 1.0
        s = np.linspace(0.0, s_max, cfg.snapshot_points)
        rows = [(x.s, x.region.value, x.chi, x.nu, x.N, x.chit) for x in sample_states(traj, s, t)]
        name = f"state_{k:03d}.csv"
        write_csv(out / name, STATE_HEADER, rows)
        files.append({"t": t, "file": name})
    if files:
        summary["snapshots"] = files


def _base_summary(cfg, traj):
    s = traj.summary()
    s["min_sigma_prime_margin"] = s.pop("min_lax_margin")
    if traj.termination.is_event and s["event"] is None:
        raise RuntimeError("event termination without an event record")
    return s


# --------------------------------------------------------------------------- #
# scenarios
# --------------------------------------------------------------------------- #

def _simulate(cfg, data, out, summary):
    traj = integrate(data, _horizon(cfg, 1e3), cfg.options)
    summary.update(_base_summary(cfg, traj))
    _write_trajectory(traj, out, summary)
    _write_snapshots(cfg, traj, out, summary)
    rt = cfg.scenario_opts.get("restart_t")
    if rt is not None:
        summary["restart"] = restart_check(traj, rt)
    return traj


def restart_check(traj, t_star, n_compare=200):
    """Restart from the state at ``t_star`` and compare the remaining fronts."""
    st = traj.front_at(t_star)
    t_end = traj.final.t
    again = integrate(traj.data, t_end, traj.options, start=(t_star, st.sigma), field=traj.field)
    ts = np.linspace(t_star, min(t_end, again.final.t), n_compare)
    diff = max(abs(traj.front_at(t).sigma - again.front_at(t).sigma) for t in ts)
    return {"t_restart": float(t_star), "max_sigma_difference": float(diff),
            "termination": again.termination.value}


def _oracle_compare(cfg, data, out, summary):
    prm = cfg.params
    horizon = _horizon(cfg, 10.0, 0.999 * prm.T)
    traj = integrate(data, horizon, cfg.options)
    summary.update(_base_summary(cfg, traj))
    _write_trajectory(traj, out, summary)
    _write_snapshots(cfg, traj, out, summary)
    motion = OracleMotion(cfg.sigma0, cfg.sigma1, prm)
    sig, sp = oracle_front(motion, traj.t)
    summary["oracle"] = {
        "max_sigma_error": float(np.max(np.abs(traj.sigma - sig))),
        "max_relative_sigma_error": float(np.max(np.abs(traj.sigma - sig) / np.abs(sig))),
        "max_sigma_prime_relative_error": float(np.max(np.abs(traj.sigma_prime / sp - 1.0))),
        "horizon": horizon,
        "unperturbed": not data.perturbations,
    }
    return traj


_DEV_HEADER = ("t", "sigma", "weighted_second", "state", "chit", "speed", "tension")


def _stability_zeta0(cfg, data, out, summary):
    so = cfg.scenario_opts
    t0, t1 = so.get("fit_t0", 10.0), so.get("fit_t1", 1e3)
    n = so.get("fit_points", 60)
    tol = so.get("tolerance", 0.1)
    traj = integrate(data, _horizon(cfg, t1), cfg.options)
    summary.update(_base_summary(cfg, traj))
    _write_trajectory(traj, out, summary)
    _write_snapshots(cfg, traj, out, summary)
    r = so.get("r", cfg.r)
    summary["B"] = weighted_norm_B(data, r, cfg.weight)
    if traj.termination is not Termination.REACHED_HORIZON:
        summary["fits"] = None
        return traj
    ref = OracleMotion(cfg.sigma0, sigma1_infinity(data), cfg.params)
    ts = np.geomspace(t0, t1, n)
    recs = [asymptotic_deviation(traj, ref, t, r) for t in ts]
    write_csv(out / "deviations.csv", _DEV_HEADER,
              [tuple(getattr(x, k) for k in _DEV_HEADER) for x in recs])
    fits = {}
    for key in ("chit", "speed", "state", "tension"):
        fit = fit_decay(ts, [getattr(x, key) for x in recs], "power_in_1_plus_t")
        d = fit.as_dict()
        d["target"] = -r
        d["within_tolerance"] = bool(abs(fit.exponent + r) <= tol * r)
        fits[key] = d
    summary["fits"] = fits
    summary["sigma1_infinity"] = ref.sigma1
    return traj


def final_window(T, t_last, values_fn, per_decade=40, max_decades=6, floor=NOISE_FLOOR):
    """Sample times for ``(T - t)``-fits: the last decade above the noise floor.

    Candidate times are geometric in ``T - t`` from the end of the trajectory
    back over ``max_decades`` decades (never before ``t = 0``).  Points whose
    value is at the noise floor are dropped and the fit window is the decade
    of ``T - t`` ending at the smallest surviving gap.
    """
    g_end = T - t_last
    g_start = min(T, g_end * 10.0**max_decades)
    n = int(per_decade * math.log10(g_start / g_end)) + 1
    gaps = np.geomspace(g_start, g_end, n)
    ts = T - gaps
    ts = np.clip(ts, 0.0, t_last)
    vals = np.asarray(values_fn(ts), dtype=float)
    ok = np.abs(vals) > floor
    if not np.any(ok):
        return ts[:0], vals[:0]
    g_min = gaps[ok].min()
    sel = ok & (gaps <= 10.0 * g_min)
    return ts[sel], vals[sel]


def _stability_zetapos(cfg, data, out, summary):
    so = cfg.scenario_opts
    tol = so.get("tolerance", 0.1)
    r = so.get("r", cfg.r)
    prm = cfg.params
    T = prm.T
    traj = integrate(data, _horizon(cfg, math.inf), cfg.options)
    summary.update(_base_summary(cfg, traj))
    _write_trajectory(traj, out, summary)
    _write_snapshots(cfg, traj, out, summary)
    summary["B"] = weighted_norm_B(data, r, cfg.weight)
    summary["T"] = T
    if traj.termination is not Termination.BLOW_UP_CERTIFIED:
        summary["fits"] = None
        return traj
    ref = OracleMotion(cfg.sigma0, sigma1_infinity(data), prm)
    cache = {}

    def speed(ts):
        out_ = []
        for t in ts:
            rec = asymptotic_deviation(traj, ref, float(t), r)
            cache[float(t)] = rec
            out_.append(rec.speed)
        return out_

    t_fin = traj.final.t
    ts, sv = final_window(T, t_fin, speed)
    fits = {}
    try:
        f = fit_decay(ts, sv, "power_in_T_minus_t", T=T)
        d = f.as_dict()
        d["target"] = r
        d["within_tolerance"] = bool(abs(f.exponent - r) <= tol * r)
    except Exception as exc:   # reported, not fatal: the run itself succeeded
        d = {"error": str(exc)}
    fits["speed"] = d
    recs = [cache[float(t)] for t in ts]
    write_csv(out / "deviations.csv", _DEV_HEADER,
              [tuple(getattr(x, k) for k in _DEV_HEADER) for x in recs])

    g_end = T - t_fin
    t_N = T - np.geomspace(10.0 * g_end, g_end, 40)
    N0 = [sample_states(traj, [0.0], float(t))[0].N for t in t_N]
    f = fit_decay(t_N, N0, "power_in_T_minus_t", T=T)
    d = f.as_dict()
    # behind the front N ~ A^2 / D with A ~ 1/D, hence (T - t)**-3
    target = so.get("tension_target", -3.0)
    d["target"] = target
    d["within_tolerance"] = bool(abs(f.exponent - target) <= tol * abs(target))
    fits["N0"] = d
    summary["fits"] = fits
    summary["sigma1_infinity"] = ref.sigma1
    return traj


def _instability(cfg, data, out, summary):
    traj = integrate(data, _horizon(cfg, 1e3), cfg.options)
    summary.update(_base_summary(cfg, traj))
    _write_trajectory(traj, out, summary)
    _write_snapshots(cfg, traj, out, summary)
    expected = cfg.scenario_opts.get("expected_event_t")
    if expected is None and cfg.params.zeta > 0 and cfg.chi0.kind.value == "compact_bump":
        # the plateau reaches the threshold when zeta t + tau + eps = N1
        expected = (cfg.params.N1 - (cfg.params.tau + cfg.chi0.amplitude)) / cfg.params.zeta
    summary["expected_event_t"] = expected
    if expected is not None and traj.event is not None:
        summary["event_time_error"] = abs(traj.event.t - expected)
    return traj


def _energy_audit(cfg, data, out, summary):
    so = cfg.scenario_opts
    prm = cfg.params
    horizon = _horizon(cfg, 2.0, 0.5 * prm.T)
    traj = integrate(data, horizon, cfg.options)
    summary.update(_base_summary(cfg, traj))
    _write_trajectory(traj, out, summary)
    _write_snapshots(cfg, traj, out, summary)
    t_fin = traj.final.t
    ta = so.get("audit_t0", 0.05 * t_fin)
    tb = so.get("audit_t1", 0.95 * t_fin)
    a = so.get("audit_a", 0.5 * cfg.sigma0)
    b = so.get("audit_b", 2.0 * traj.final.sigma + 1.0)
    grid = np.linspace(ta, tb, so.get("audit_points", 200))
    rep = energy_audit(traj, a, b, grid)
    write_csv(out / "energy.csv", ENERGY_HEADER,
              [(x.t, x.K, x.E_stored, x.P, x.Q, x.balance_defect) for x in rep.rows])
    summary["energy"] = rep.as_dict()
    summary["energy"]["segment"] = [a, b]
    summary["max_energy_defect"] = rep.max_defect
    return traj


def _crossvalidate(cfg, data, out, summary):
    so = cfg.scenario_opts
    prm = cfg.params
    t_end = so.get("fv_t_end", 1.0 if prm.zeta == 0 else 0.8 * prm.T)
    ds = so.get("fv_ds", 1e-3)
    traj = integrate(data, t_end, cfg.options)
    summary.update(_base_summary(cfg, traj))
    _write_trajectory(traj, out, summary)
    _write_snapshots(cfg, traj, out, summary)
    S = so.get("fv_S")
    if S is None:
        # keep the front's domain of influence inside 80% of the domain, with room to spare
        S = 1.25 * (traj.final.sigma + t_end) + 1.0
    snaps = [t for t in cfg.sample_times if t <= t_end]

    def one(h):
        res = fv_run(data, S, h, t_end, snapshot_times=snaps)
        err = max(abs(f - traj.sigma_at(t)) for t, f in zip(res.times, res.front))
        return res, float(err)

    res, err = one(ds)
    N_minus = traj.final.N_plus + traj.final.sigma_prime * traj.final.chit_plus
    plateau = float(res.N_block[-1])
    window = so.get("fv_window", 0.1)
    rates = energy_dissipation_rate(res, min(window, 0.5 * t_end))
    speed, rh_res, rh_rel = rh_consistency(res, 0.2 * t_end, t_end)
    cv = {
        "S": S, "ds": res.ds, "t_end": t_end, "n_steps": res.n_steps,
        "max_front_error": err, "front_error_in_cells": err / res.ds,
        "plateau_tension": plateau, "tracked_tension_behind": N_minus,
        "plateau_relative_error": abs(plateau - N_minus) / abs(N_minus),
        "max_windowed_dissipation_rate": float(np.max(rates)),
        "energy_rate_window": window,
        "rh_fit_speed": speed, "rh_relative_residual": rh_rel,
    }
    if so.get("fv_refine", True):
        res2, err2 = one(0.5 * ds)
        cv["refined_front_error"] = err2
        cv["refinement_ratio"] = err2 / err if err > 0 else 0.0
    summary["crossvalidation"] = cv
    fv_rows = []
    for k, t in enumerate(res.times):
        jump = res.N_ahead[k] - res.N_block[k]
        fv_rows.append((t, res.front[k], res.front_speed[k], res.N_ahead[k], res.v_ahead[k],
                        jump + res.front_speed[k] * res.v_ahead[k]))
    write_csv(out / "fv_front.csv", TRAJ_HEADER, fv_rows)
    for k, t in enumerate(sorted(res.snapshots)):
        s, v, w, N = res.snapshots[t]
        write_csv(out / f"fv_fields_{k:03d}.csv", ("s", "v", "w", "N"), zip(s, v, w, N))
    s, v, w, N = res.fields_at_end()
    write_csv(out / "fv_fields_end.csv", ("s", "v", "w", "N"), zip(s, v, w, N))
    return traj


_SCENARIOS = {
    Scenario.SIMULATE: _simulate,
    Scenario.ORACLE_COMPARE: _oracle_compare,
    Scenario.STABILITY_ZETA0: _stability_zeta0,
    Scenario.STABILITY_ZETAPOS: _stability_zetapos,
    Scenario.INSTABILITY_DEMO: _instability,
    Scenario.ENERGY_AUDIT: _energy_audit,
    Scenario.CROSSVALIDATE: _crossvalidate,
}


def run(cfg: RunConfig, out_dir=None):
    """Run one configuration; returns ``(summary, exit_code)``.

    Errors from the numerical modules propagate to the caller; the CLI maps
    them to exit status 1.
    """
    out = Path(out_dir or cfg.out_dir or default_out_root() / Path(cfg.source).stem)
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    data = build_data(cfg)
    summary = {"scenario": cfg.scenario.value, "max_energy_defect": None}
    traj = _SCENARIOS[cfg.scenario](cfg, data, out, summary)
    summary["wall_time_s"] = time.perf_counter() - start
    summary["config"] = cfg.echo()
    summary["config_sha256"] = cfg.digest
    code = exit_code(traj.termination)
    summary["exit_status"] = code
    if "json" in cfg.formats:
        with open(out / "summary.json", "w") as fh:
            json.dump(_clean(summary), fh, indent=2, sort_keys=True, allow_nan=False)
            fh.write("\n")
    return _clean(summary), code


def _run_path(args):
    path, overrides, out = args
    try:
        cfg = load_config(path, overrides)
        summary, code = run(cfg, out)
        return str(path), code, summary.get("termination"), None
    except Exception as exc:   # one failed run must not take down the sweep
        return str(path), 1, None, f"{type(exc).__name__}: {exc}"


def run_many(paths, overrides=(), out_root=None, jobs=None, per_path=None):
    """Run several configurations in a process pool, one output directory each.

    ``per_path`` optionally lists extra overrides for each path.  Returns a
    list of ``(path, exit_code, termination, error)``.
    """
    root = Path(out_root) if out_root else default_out_root()
    stems = [Path(p).stem for p in paths]
    if len(set(stems)) != len(stems):
        stems = [f"{i:03d}_{s}" for i, s in enumerate(stems)]
    extra = per_path or [()] * len(paths)
    tasks = [(p, tuple(overrides) + tuple(e), root / s) for p, s, e in zip(paths, stems, extra)]
    if jobs == 1 or len(tasks) == 1:
        return [_run_path(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_path, tasks))
