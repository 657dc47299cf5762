"""JSON scenario configs, geometry presets, engine runs and file output."""

from __future__ import annotations

import copy
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import analysis
from .lindblad import LindbladSpec, build_generator, integrate_me, projector, single_excitation_state
from .modes import (
    DEFAULT_MODE_LIST,
    AtomSpec,
    ChannelRates,
    CouplingTable,
    CrossSection,
    GeometryError,
    channel_rates,
    collective_rates,
    coupling_table,
    cutoff_frequency,
    midpoint_frequency,
    propagating_modes,
)
from .oracle import grids_for, integrate_full
from .retarded import RetardedSystem, Trajectory, integrate_retarded

log = logging.getLogger(__name__)

ENGINES = ("dde", "me", "oracle")


class ConfigError(ValueError):
    category = "config"


class CutoffError(ValueError):
    category = "cutoff"


DEFAULTS: dict[str, Any] = {
    "name": "custom",
    "cross_section": {"a": 1.0, "b": 0.5},
    "omega_a": "midpoint",
    "modes": [list(m) for m in DEFAULT_MODE_LIST],
    "atoms": [{"x": 0.5, "y": 0.25, "z": 0.0}, {"x": 0.5, "y": 0.25, "z": 0.0}],
    "separation_k10": None,
    "coupling_scale": 0.08,
    "rates": None,
    "include_higher_modes": True,
    "initial": "eg",
    "engines": ["dde", "me"],
    "t_end": None,
    "t_end_tau": 6.0,
    "t_end_gamma": 10.0,
    "samples": 2000,
    "oracle": {"n": 4001, "k_max": None},
    "dde": {"step": None},
    "me": {"method": "rk4"},
    "output": {"dir": "out"},
}


def _preset(name, atom2, sep, **extra):
    cfg = copy.deepcopy(DEFAULTS)
    cfg["name"] = name
    cfg["atoms"][1].update(atom2)
    cfg["separation_k10"] = sep
    cfg.update(extra)
    return cfg


PRESETS: dict[str, dict] = {
    "centered-12": _preset("centered-12", {}, 12.0),
    "centered-24": _preset("centered-24", {}, 24.0),
    "offcenter-x": _preset("offcenter-x", {"x": 0.75}, 12.0),
    "perp-x": _preset("perp-x", {"x": 0.75}, 0.0),
    "perp-y": _preset("perp-y", {"y": 0.375}, 0.0),
}


def preset_config(name: str) -> dict:
    try:
        return copy.deepcopy(PRESETS[name])
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}") from None


def apply_override(cfg: dict, assignment: str) -> dict:
    """Set a dotted key, e.g. ``atoms.1.y=0.4375`` or ``engines=["dde"]`` (JSON values)."""
    if "=" not in assignment:
        raise ConfigError(f"override must look like key=value, got {assignment!r}")
    key, raw = assignment.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    parts = key.strip().split(".")
    node = cfg
    for p in parts[:-1]:
        node = node[int(p)] if isinstance(node, list) else node.setdefault(p, {})
    last = parts[-1]
    if isinstance(node, list):
        node[int(last)] = value
    else:
        node[last] = value
    return cfg


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc


def normalize_config(raw: dict) -> dict:
    """Fill defaults and validate; returns the effective config."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(raw) - set(DEFAULTS)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    cfg = copy.deepcopy(DEFAULTS)
    for key, val in raw.items():
        if isinstance(cfg.get(key), dict) and isinstance(val, dict):
            cfg[key].update(val)
        else:
            cfg[key] = val
    if raw.get("coupling_scale") is not None and raw.get("rates") is not None:
        raise ConfigError("give exactly one of coupling_scale and rates")
    if cfg["rates"] is not None:
        cfg["coupling_scale"] = None
        missing = {"gamma11", "tau1", "phase"} - set(cfg["rates"])
        if missing:
            raise ConfigError(f"explicit rates need {sorted(missing)}")
    elif cfg["coupling_scale"] is None:
        raise ConfigError("give exactly one of coupling_scale and rates")
    engines = cfg["engines"]
    if not engines or any(e not in ENGINES for e in engines):
        raise ConfigError(f"engines must be a nonempty subset of {ENGINES}, got {engines}")
    if len(cfg["atoms"]) != 2:
        raise ConfigError("exactly two atoms are required")
    if int(cfg["samples"]) < 2:
        raise ConfigError("samples must be at least 2")
    return cfg


@dataclass
class Scenario:
    config: dict
    rates: ChannelRates
    tau: float
    phase: float
    retarded: RetardedSystem
    lindblad: LindbladSpec
    initial: tuple[complex, complex]
    t: np.ndarray
    table: CouplingTable | None = None
    z: tuple[float, float] = (0.0, 0.0)
    derived: dict = field(default_factory=dict)


def _initial_amplitudes(sel, table: CouplingTable | None) -> tuple[complex, complex]:
    if isinstance(sel, str):
        s = 1 / math.sqrt(2)
        fixed = {"eg": (1, 0), "ge": (0, 1), "symmetric": (s, s), "antisymmetric": (s, -s)}
        if sel in fixed:
            return tuple(complex(v) for v in fixed[sel])
        if sel == "dark":
            if table is None:
                raise ConfigError("initial 'dark' needs a geometric (coupling_scale) config")
            d = analysis.dark_state(*table.g_renorm[0])
            return complex(d.c1), complex(d.c2)
        raise ConfigError(f"unknown initial state {sel!r}")
    try:
        amps = tuple(complex(*v) if isinstance(v, list) else complex(v) for v in sel)
    except TypeError as exc:
        raise ConfigError(f"initial must be a name or two amplitudes, got {sel!r}") from exc
    if len(amps) != 2 or abs(amps[0]) ** 2 + abs(amps[1]) ** 2 > 1 + 1e-12:
        raise ConfigError("initial amplitudes must be two numbers with total population <= 1")
    return amps


def build_scenario(raw: dict) -> Scenario:
    cfg = normalize_config(raw)
    if cfg["rates"] is not None:
        sc = _explicit_scenario(cfg)
    else:
        sc = _geometric_scenario(cfg)
    if cfg["t_end"] is not None:
        t_end = float(cfg["t_end"])
    elif sc.tau > 0:
        t_end = cfg["t_end_tau"] * sc.tau
    else:
        t_end = cfg["t_end_gamma"] / sc.rates.gamma11
    if not t_end > 0:
        raise ConfigError(f"time window must be positive, got t_end={t_end}")
    sc.t = np.linspace(0.0, t_end, int(cfg["samples"]))
    return sc


def _explicit_scenario(cfg) -> Scenario:
    r = cfg["rates"]
    g11 = float(r["gamma11"])
    g12 = float(r.get("gamma12", g11))
    g22 = float(r.get("gamma22", g12**2 / g11 if g11 else 0.0))
    g212 = float(r.get("gamma212", 0.0)) if cfg["include_higher_modes"] else 0.0
    rates = ChannelRates(g11, g12, g22, g212)
    tau, phase = float(r["tau1"]), float(r["phase"])
    if "oracle" in cfg["engines"]:
        raise ConfigError("the oracle engine needs a geometric config (coupling_scale), not explicit rates")
    spec = LindbladSpec.from_rates(rates, phase)
    sc = Scenario(cfg, rates, tau, phase, RetardedSystem.from_rates(rates, tau, phase), spec,
                  _initial_amplitudes(cfg["initial"], None), np.empty(0))
    sc.derived = {"explicit_rates": True}
    return sc


def _geometric_scenario(cfg) -> Scenario:
    cs_cfg = cfg["cross_section"]
    try:
        cs = CrossSection(float(cs_cfg["a"]), float(cs_cfg["b"]))
    except KeyError as exc:
        raise ConfigError(f"cross_section needs a and b: missing {exc}") from None
    omega_a = midpoint_frequency(cs) if cfg["omega_a"] == "midpoint" else float(cfg["omega_a"])
    modes = propagating_modes(cs, omega_a, [tuple(m) for m in cfg["modes"]])
    if not modes:
        raise CutoffError(f"omega_a={omega_a:.6g} lies below the cutoff of every listed mode")
    if (modes[0].m, modes[0].n) != (1, 1) and cfg["omega_a"] != "midpoint":
        log.warning("fundamental propagating mode is %s, not TM11", modes[0].label)
    k10 = math.sqrt(omega_a**2 - modes[0].cutoff**2)
    z1 = float(cfg["atoms"][0].get("z", 0.0))
    z2 = float(cfg["atoms"][1].get("z", 0.0))
    if cfg["separation_k10"] is not None:
        z2 = z1 + float(cfg["separation_k10"]) / k10
    atoms = []
    for at, z in zip(cfg["atoms"], (z1, z2)):
        try:
            atoms.append(AtomSpec(float(at["x"]), float(at["y"]), z, omega_a))
        except KeyError as exc:
            raise ConfigError(f"atom entries need x and y: missing {exc}") from None
    table = coupling_table(cs, atoms, modes, float(cfg["coupling_scale"]))
    if not cfg["include_higher_modes"]:
        table = table.without_higher_modes()
    rates = channel_rates(table)
    v1 = table.velocity(0)
    sep = abs(z2 - z1)
    sc = Scenario(
        cfg,
        rates,
        sep / v1,
        k10 * sep,
        RetardedSystem.from_table(table, z1, z2),
        LindbladSpec.from_table(table, z1, z2),
        _initial_amplitudes(cfg["initial"], table),
        np.empty(0),
        table=table,
        z=(z1, z2),
    )
    sc.derived = {
        "omega_a": omega_a,
        "modes": [
            {
                "label": md.label,
                "cutoff": md.cutoff,
                "cutoff_over_c_pi_a": md.cutoff * cs.a / math.pi,
                "k0": table.wavevector(j),
                "group_velocity": table.velocity(j),
                "g_renorm": table.g_renorm[j].tolist(),
                "g_raw": table.g_raw[j].tolist(),
            }
            for j, md in enumerate(table.modes)
        ],
        "evanescent_modes": [
            {"label": f"TM{m}{n}", "cutoff": cutoff_frequency(m, n, cs)}
            for m, n in cfg["modes"]
            if cutoff_frequency(m, n, cs) >= omega_a
        ],
        "z": [z1, z2],
        "separation": sep,
    }
    return sc


def derived_quantities(sc: Scenario) -> dict:
    A = collective_rates(sc.table, *sc.z).A if sc.table is not None else None
    out = dict(sc.derived)
    out.update(
        gamma11=sc.rates.gamma11,
        gamma12=sc.rates.gamma12,
        gamma22=sc.rates.gamma22,
        gamma212=sc.rates.gamma212,
        tau1=sc.tau,
        phase_k10_d=sc.phase,
        Gamma=sc.lindblad.Gamma.tolist(),
        U=sc.lindblad.U.tolist(),
        gamma_local2=sc.lindblad.gamma_local2,
        delays=sc.retarded.positive_delays,
    )
    if A is not None:
        out["A_tm11"] = {"re": A.real.tolist(), "im": A.imag.tolist()}
    if sc.tau == 0 and sc.table is not None and np.any(sc.table.g_renorm[0]):
        d = analysis.dark_state(*sc.table.g_renorm[0])
        st = analysis.steady_ratio(d, _normalized(sc.initial))
        out["dark_state"] = {
            "c1": d.c1,
            "c2": d.c2,
            "decoupled_from_higher_modes": sc.rates.gamma212 == 0.0,
            "predicted_p1_inf": st.p1,
            "predicted_p2_inf": st.p2,
            "predicted_ratio": st.ratio,
        }
    return out


def _normalized(amps):
    n = math.sqrt(abs(amps[0]) ** 2 + abs(amps[1]) ** 2)
    return (amps[0] / n, amps[1] / n) if n else amps


@dataclass
class RunResult:
    scenario: Scenario
    results: dict
    summary: dict


def run_engines(sc: Scenario) -> dict:
    cfg = sc.config
    out = {}
    t_end = float(sc.t[-1])
    if "dde" in cfg["engines"]:
        tr = integrate_retarded(sc.retarded, sc.initial, t_end, samples=sc.t.size, step=cfg["dde"]["step"])
        tr.tau = sc.tau or None
        out["dde"] = tr
    if "me" in cfg["engines"]:
        c1, c2 = sc.initial
        psi = single_excitation_state(c1, c2)
        rho0 = projector(psi)
        rho0[0, 0] += 1 - (abs(c1) ** 2 + abs(c2) ** 2)
        out["me"] = integrate_me(build_generator(sc.lindblad), rho0, sc.t, method=cfg["me"]["method"])
    if "oracle" in cfg["engines"]:
        o = cfg["oracle"]
        grids = grids_for(sc.table, *sc.z, n=int(o["n"]), k_max=o["k_max"])
        res = integrate_full(grids, sc.table.omega_a, _normalized(sc.initial), sc.t)
        res.trajectory.tau = sc.tau or None
        out["oracle"] = res
    return out


def scenario_checks(sc: Scenario, results: dict) -> dict:
    checks: dict[str, Any] = {}
    if "dde" in results:
        tr = results["dde"]
        checks["dde_max_total_population"] = float((tr.p1 + tr.p2).max())
        b1, b2 = sc.initial
        if sc.tau > 0 and b2 == 0:
            checks["dde_max_p2_before_tau"] = float(tr.p2[tr.t <= sc.tau].max())
            m = tr.t <= 2 * sc.tau
            ref = abs(b1) ** 2 * np.exp(-2 * sc.retarded.self_rate_1 * tr.t[m])
            checks["dde_pre_echo_error"] = float(np.abs(tr.p1[m] - ref).max())
    if "me" in results:
        me = results["me"]
        checks["me_trace_drift"] = float(np.abs(me.trace - 1).max())
        checks["me_min_eigenvalue"] = float(me.min_eig.min())
        checks["me_ee_leakage"] = float(me.p_ee.max())
    if "oracle" in results:
        checks["oracle_norm_error"] = results["oracle"].norm_error
        checks["oracle_revival_time"] = results["oracle"].revival_time
    trajs = {k: _traj(v) for k, v in results.items()}
    names = sorted(trajs)
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            for obs in ("p1", "p2"):
                checks[f"sup_{obs}_{a}_vs_{b}"] = analysis.curve_distance(trajs[a], trajs[b], obs).sup
    return checks


def _traj(res):
    return res.trajectory if hasattr(res, "trajectory") else res


def run_scenario(raw: dict, out_dir=None) -> RunResult:
    sc = build_scenario(raw)
    results = run_engines(sc)
    summary = {
        "name": sc.config["name"],
        "derived": derived_quantities(sc),
        "time_window": [0.0, float(sc.t[-1])],
        "samples": int(sc.t.size),
        "checks": scenario_checks(sc, results),
    }
    if "dark_state" in summary["derived"]:
        for eng, res in results.items():
            tr = _traj(res)
            try:
                p1 = analysis.tail_average(tr.t, tr.p1)
                p2 = analysis.tail_average(tr.t, tr.p2)
            except ValueError:
                continue
            summary["checks"][f"{eng}_p_inf"] = [p1, p2]
            summary["checks"][f"{eng}_steady_ratio"] = p1 / p2 if p2 > 0 else None
    if out_dir is not None:
        write_outputs(Path(out_dir), sc, results, summary)
    return RunResult(sc, results, summary)


def write_outputs(out: Path, sc: Scenario, results: dict, summary: dict) -> None:
    out.mkdir(parents=True, exist_ok=True)
    for eng, res in results.items():
        write_csv(out / f"{eng}.csv", res, sc.tau)
    with open(out / "summary.json", "w") as fh:
        json.dump(_jsonable(summary), fh, indent=2)
    with open(out / "config.json", "w") as fh:
        json.dump(sc.config, fh, indent=2)


def write_csv(path: Path, res, tau: float) -> None:
    if hasattr(res, "trace"):
        names = ["p1", "p2", "trace", "min_eig"]
        cols = [res.p1, res.p2, res.trace, res.min_eig]
    else:
        tr = _traj(res)
        names = ["p1", "p2", "re_b1", "im_b1", "re_b2", "im_b2"]
        cols = [tr.p1, tr.p2, tr.b1.real, tr.b1.imag, tr.b2.real, tr.b2.imag]
    t = res.t if hasattr(res, "t") else _traj(res).t
    head = ["t"]
    lead = [t]
    if tau > 0:
        head.append("t_over_tau")
        lead.append(t / tau)
    data = np.column_stack(lead + cols)
    np.savetxt(path, data, delimiter=",", header=",".join(head + names), comments="", fmt="%.17g")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


__all__ = [
    "ConfigError",
    "CutoffError",
    "GeometryError",
    "PRESETS",
    "apply_override",
    "build_scenario",
    "derived_quantities",
    "load_config",
    "preset_config",
    "run_scenario",
]
