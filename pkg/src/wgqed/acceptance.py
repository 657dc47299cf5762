"""Exit criteria for the simulator, runnable from the CLI (``wgqed check``) and pytest."""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable

import mpmath as mp
import numpy as np

from .analysis import curve_distance, dark_ratio_formula, local_extrema, tail_average
from .oracle import grids_for, integrate_full
from .retarded import integrate_retarded
from .scenario import PRESETS, apply_override, build_scenario, derived_quantities, preset_config, run_scenario


@dataclass
class CheckResult:
    number: int
    name: str
    passed: bool
    detail: str
    elapsed: float

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"[{flag}] {self.number}. {self.name} ({self.elapsed:.2f}s): {self.detail}"


def _timed(fn: Callable[[], tuple[bool, str]], number: int, name: str) -> CheckResult:
    t0 = time.perf_counter()
    ok, detail = fn()
    return CheckResult(number, name, bool(ok), detail, time.perf_counter() - t0)


def _preset(name: str, *overrides: str) -> dict:
    cfg = preset_config(name)
    for ov in overrides:
        apply_override(cfg, ov)
    return cfg


def causality() -> CheckResult:
    def body():
        t0 = time.perf_counter()
        run = run_scenario(_preset("centered-12", 'engines=["dde"]'))
        runtime = time.perf_counter() - t0
        tr, tau = run.results["dde"], run.scenario.tau
        g = run.scenario.rates.gamma11
        p2_max = float(tr.p2[tr.t <= tau].max())
        m = tr.t <= 2 * tau
        echo = float(np.abs(tr.p1[m] - np.exp(-2 * g * tr.t[m])).max())
        ok = p2_max <= 1e-12 and echo <= 1e-8 and runtime < 1.0
        return ok, f"max P2(t<=tau)={p2_max:.2e}, max|P1-exp(-2g t)| (t<=2tau)={echo:.2e}, runtime={runtime:.3f}s"

    return _timed(body, 1, "causality")


def revival_structure() -> CheckResult:
    """gamma11 tau1 = 1 with the centred-geometry phase k10 d = 12."""

    def body():
        cfg = {"name": "revival", "rates": {"gamma11": 1.0, "tau1": 1.0, "phase": 12.0}, "t_end": 30.0,
               "samples": 6001}
        run = run_scenario(cfg)
        tr = run.results["dde"]
        tau = 1.0
        mins, maxs = local_extrema(tr.p1, 1e-14)
        t = tr.t
        first_min = next((t[i] for i in mins if tau < t[i] < 2 * tau), None)
        later_max = None
        if first_min is not None:
            later_max = next((t[i] for i in maxs if first_min < t[i] < 3 * tau), None)
        structure = first_min is not None and later_max is not None
        dde_left = float(tr.p1[-1] + tr.p2[-1])
        me = run.results["me"]
        me_left = float(me.p1[-1] + me.p2[-1])
        ok = structure and dde_left <= 1e-4 and me_left <= 1e-4
        actual_min = t[mins[0]] if mins else float("nan")
        actual_max = t[maxs[0]] if maxs else float("nan")
        return ok, (
            f"P1 min in (tau,2tau): {first_min}, then max before 3tau: {later_max} "
            f"(first P1 min at t/tau={actual_min:.3f}, first max at {actual_max:.3f}); "
            f"P1+P2 at 30/g: dde={dde_left:.3e}, me={me_left:.3e}"
        )

    return _timed(body, 2, "revival structure")


def oracle_equivalence() -> CheckResult:
    def body():
        cfg = _preset("centered-12", 'engines=["dde"]', "t_end_tau=5", "samples=1001")
        sc = build_scenario(cfg)
        dde = integrate_retarded(sc.retarded, sc.initial, float(sc.t[-1]), samples=sc.t.size)
        t0 = time.perf_counter()
        grids = grids_for(sc.table, *sc.z, n=4001)
        base = integrate_full(grids, sc.table.omega_a, sc.initial, sc.t)
        runtime = time.perf_counter() - t0
        d0 = max(curve_distance(base.trajectory, dde, o).sup for o in ("p1", "p2"))
        fine = grids_for(sc.table, *sc.z, n=8001, k_max=2 * grids[0].k[-1])
        refined = integrate_full(fine, sc.table.omega_a, sc.initial, sc.t)
        d1 = max(curve_distance(refined.trajectory, dde, o).sup for o in ("p1", "p2"))
        ok = d0 <= 5e-2 and d1 <= 0.5 * d0 and runtime < 60
        return ok, (
            f"sup|P_oracle-P_dde| on [0,5tau]: N=4001 {d0:.4f}, N=8001 & 2k_max {d1:.4f} "
            f"(ratio {d1 / d0:.3f}); oracle runtime={runtime:.1f}s, norm error={base.norm_error:.1e}"
        )

    return _timed(body, 3, "oracle equivalence")


def markovian_recovery() -> CheckResult:
    def body():
        on = run_scenario(_preset("offcenter-x"))
        off = run_scenario(_preset("offcenter-x", "include_higher_modes=false", 'engines=["dde"]'))
        dist = curve_distance(on.results["dde"], on.results["me"], "p1").sup
        p2_on = float(on.results["dde"].p2.max())
        p2_off = float(off.results["dde"].p2.max())
        ok = dist <= 0.05 and p2_on <= 0.05 * p2_off
        return ok, (
            f"sup|P1_dde-P1_me|={dist:.4f} (<=0.05); max P2 with TM21={p2_on:.4f}, "
            f"without={p2_off:.4f}, ratio={p2_on / p2_off:.3f} (<=0.05)"
        )

    return _timed(body, 4, "Markovian recovery")


def tm21_switch() -> CheckResult:
    def body():
        off = run_scenario(_preset("offcenter-x", "include_higher_modes=false", 'engines=["dde"]'))
        on = run_scenario(_preset("offcenter-x", 'engines=["dde"]'))
        p_off, p_on = off.results["dde"].p1, on.results["dde"].p1
        mins, maxs = local_extrema(p_off, 1e-10)
        revival_off = any(mx > mn for mn in mins for mx in maxs)
        rise = float(np.diff(p_on).max())
        ok = revival_off and rise <= 1e-10
        mins_on, maxs_on = local_extrema(p_on, 1e-10)
        peak = float(p_on[maxs_on[0]]) if maxs_on else 0.0
        return ok, (
            f"without TM21: revival={revival_off}; with TM21: largest P1 increase per sample={rise:.2e} "
            f"(first revival peak P1={peak:.2e})"
        )

    return _timed(body, 5, "TM21 switch")


def dark_state_steady() -> CheckResult:
    def body():
        t0 = time.perf_counter()
        run = run_scenario(_preset("perp-y"))
        errs = []
        for eng in ("dde", "me"):
            tr = run.results[eng]
            p1, p2 = tail_average(tr.t, tr.p1), tail_average(tr.t, tr.p2)
            errs.append(max(abs(p1 - 1 / 9), abs(p2 - 2 / 9), abs(p1 / p2 - dark_ratio_formula(0.125, 0.5))))
        sweep = []
        for frac in (1 / 8, 1 / 4, 3 / 8):
            dy = frac * 0.5
            r = run_scenario(_preset("perp-y", f"atoms.1.y={0.25 + dy!r}"))
            for eng in ("dde", "me"):
                tr = r.results[eng]
                ratio = tail_average(tr.t, tr.p1) / tail_average(tr.t, tr.p2)
                sweep.append(abs(ratio - dark_ratio_formula(dy, 0.5)))
        runtime = time.perf_counter() - t0
        ok = max(errs) <= 1e-3 and max(sweep) <= 1e-3 and runtime < 5
        return ok, f"max error vs (1/9, 2/9, 1/2)={max(errs):.2e}; sweep ratio error={max(sweep):.2e}; runtime={runtime:.2f}s"

    return _timed(body, 6, "dark state")


def perp_x_freezing() -> CheckResult:
    def body():
        run = run_scenario(_preset("perp-x"))
        d = max(curve_distance(run.results["dde"], run.results["me"], o).sup for o in ("p1", "p2"))
        p2 = float(run.results["dde"].p2.max())
        return d <= 1e-6 and p2 <= 0.02, f"sup|dde-me|={d:.2e}; max P2={p2:.4f}"

    return _timed(body, 7, "perp-x freezing")


def lindblad_sanity() -> CheckResult:
    def body():
        worst = [0.0, 0.0, 0.0]
        cfgs = [_preset(n, 'engines=["me"]') for n in PRESETS]
        cfgs.append(_preset("offcenter-x", 'engines=["me"]', "include_higher_modes=false"))
        for cfg in cfgs:
            me = run_scenario(cfg).results["me"]
            worst[0] = max(worst[0], float(np.abs(me.trace - 1).max()))
            worst[1] = min(worst[1], float(me.min_eig.min()))
            worst[2] = max(worst[2], float(me.p_ee.max()))
        ok = worst[0] <= 1e-10 and worst[1] >= -1e-10 and worst[2] <= 1e-12
        return ok, f"trace drift={worst[0]:.1e}, min eigenvalue={worst[1]:.1e}, |ee> leakage={worst[2]:.1e}"

    return _timed(body, 8, "Lindblad sanity")


def reference_rates(sep_k10: float, dx: float = 0.0, dy: float = 0.0, scale: float = 0.08):
    """High-precision re-derivation of the TM11 collective rates (a=1, b=1/2, c=1)."""
    mp.mp.dps = 40
    a, b = mp.mpf(1), mp.mpf(1) / 2
    O1 = mp.pi * mp.sqrt(1 / a**2 + 1 / b**2)
    O3 = mp.pi * mp.sqrt(9 / a**2 + 1 / b**2)
    wa = (O1 + O3) / 2
    k10 = mp.sqrt(wa**2 - O1**2)
    v1 = k10 / wa
    g1 = mp.mpf(scale) * O1
    g2 = g1 * mp.sin(mp.pi * (a / 2 + dx) / a) * mp.sin(mp.pi * (b / 2 + dy) / b)
    pref = mp.pi / v1
    gam11, gam12, gam22 = pref * g1 * g1, pref * g1 * g2, pref * g2 * g2
    phi = mp.mpf(sep_k10)
    Gamma = [[2 * gam11, 2 * gam12 * mp.cos(phi)], [2 * gam12 * mp.cos(phi), 2 * gam22]]
    U = [[0, 2 * gam12 * mp.sin(phi)], [2 * gam12 * mp.sin(phi), 0]]
    return {"gamma11": gam11, "gamma12": gam12, "gamma22": gam22, "Gamma": Gamma, "U": U,
            "tau1": phi / (k10 * v1)}


def rate_algebra() -> CheckResult:
    def body():
        worst = 0.0
        cases = [("centered-12", 12, 0, 0), ("centered-24", 24, 0, 0), ("offcenter-x", 12, 0.25, 0),
                 ("perp-x", 0, 0.25, 0), ("perp-y", 0, 0, 0.125)]
        algebra = 0.0
        for name, sep, dx, dy in cases:
            dq = derived_quantities(build_scenario(_preset(name)))
            ref = reference_rates(sep, dx, dy)
            for key in ("Gamma", "U"):
                got = np.array(dq[key])
                want = np.array([[float(x) for x in row] for row in ref[key]])
                worst = max(worst, float(np.abs(got - want).max()))
            for key in ("gamma11", "gamma12", "gamma22", "tau1"):
                worst = max(worst, abs(dq[key] - float(ref[key])))
            g11, g12, g22 = dq["gamma11"], dq["gamma12"], dq["gamma22"]
            algebra = max(algebra, abs(g12**2 - g11 * g22) / g11**2)
        c12 = build_scenario(_preset("centered-12")).lindblad
        ok = worst <= 1e-12 and algebra <= 1e-15
        return ok, (
            f"max |numeric - reference|={worst:.1e}; max |g12^2-g11 g22|/g11^2={algebra:.1e}; "
            f"centered-12 Gamma12={c12.Gamma[0, 1]:.9f}, U12={c12.U[0, 1]:.9f}"
        )

    return _timed(body, 9, "rate algebra")


CRITERIA = (
    causality,
    revival_structure,
    oracle_equivalence,
    markovian_recovery,
    tm21_switch,
    dark_state_steady,
    perp_x_freezing,
    lindblad_sanity,
    rate_algebra,
)


def run_all(echo: Callable[[str], None] | None = print) -> list[CheckResult]:
    results = []
    for crit in CRITERIA:
        res = crit()
        if echo:
            echo(res.line())
        results.append(res)
    return results
