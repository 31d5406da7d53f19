"""Named, versioned configuration presets and the JSON config schema.

A config document is a single JSON object with sections:

    oscillators: list of oscillator objects (each with a nested switch)
    couplings:   list of {i, j, kind, value[, r_ox]}
    sim:         SimConfig fields
    analysis:    free-form analysis options (thresholds etc.), optional

All numeric values are SI base units.  Shipped presets live as JSON files
next to this module and are loaded read-only; calibrated values are frozen
there rather than recomputed at import time.
"""

from __future__ import annotations

import copy
import json
from importlib import resources
from typing import Any

from ..circuit import (
    CouplingKind,
    CouplingSpec,
    NetworkConfig,
    OscillatorParams,
    SimConfig,
)
from ..device import NoiseParams, SwitchParams

_PRESET_PACKAGE = "vo2osc.presets"


def list_presets() -> list[str]:
    names = []
    for entry in resources.files(_PRESET_PACKAGE).iterdir():
        if entry.name.endswith(".json"):
            names.append(entry.name[: -len(".json")])
    return sorted(names)


def load_preset(name: str) -> dict:
    """Load a shipped preset config by name (without the .json suffix)."""
    try:
        text = (resources.files(_PRESET_PACKAGE) / f"{name}.json").read_text()
    except FileNotFoundError:
        raise KeyError(
            f"unknown preset {name!r}; available: {', '.join(list_presets())}"
        ) from None
    return json.loads(text)


def load_config(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


# ---------------------------------------------------------------------------
# dict <-> dataclass conversion


def noise_from_dict(d: dict) -> NoiseParams:
    return NoiseParams(
        alpha=d.get("alpha", 1.0),
        peak_amplitude=d.get("peak_amplitude", 1e-3),
        band_lo=d.get("band_lo", 1.0),
        band_hi=d.get("band_hi", 1000.0),
    )


def switch_from_dict(d: dict) -> SwitchParams:
    kwargs: dict[str, Any] = {
        k: d[k]
        for k in ("v_th", "v_h", "r_off", "a", "b", "c", "r_on_floor", "r_on_ceiling")
        if k in d
    }
    if "noise" in d:
        kwargs["noise"] = noise_from_dict(d["noise"])
    return SwitchParams(**kwargs)


def oscillator_from_dict(d: dict) -> OscillatorParams:
    kwargs: dict[str, Any] = {
        k: d[k] for k in ("v_dd", "r_s", "c_par", "r_i") if k in d
    }
    if "switch" in d:
        kwargs["switch"] = switch_from_dict(d["switch"])
    return OscillatorParams(**kwargs)


def coupling_from_dict(d: dict) -> CouplingSpec:
    return CouplingSpec(
        i=d["i"],
        j=d["j"],
        kind=CouplingKind(d["kind"]),
        value=d["value"],
        r_ox=d.get("r_ox"),
    )


def network_from_config(cfg: dict) -> NetworkConfig:
    oscs = tuple(oscillator_from_dict(o) for o in cfg["oscillators"])
    coups = tuple(coupling_from_dict(c) for c in cfg.get("couplings", []))
    return NetworkConfig(oscillators=oscs, couplings=coups)


def sim_from_config(cfg: dict) -> SimConfig:
    d = cfg.get("sim", {})
    kwargs = {
        k: d[k]
        for k in ("duration", "dt", "record_every", "event_tol", "master_seed")
        if k in d
    }
    return SimConfig(**kwargs)


def noise_to_dict(n: NoiseParams) -> dict:
    return {
        "alpha": n.alpha,
        "peak_amplitude": n.peak_amplitude,
        "band_lo": n.band_lo,
        "band_hi": n.band_hi,
    }


def switch_to_dict(sw: SwitchParams) -> dict:
    return {
        "v_th": sw.v_th,
        "v_h": sw.v_h,
        "r_off": sw.r_off,
        "a": sw.a,
        "b": sw.b,
        "c": sw.c,
        "r_on_floor": sw.r_on_floor,
        "r_on_ceiling": sw.r_on_ceiling,
        "noise": noise_to_dict(sw.noise),
    }


def oscillator_to_dict(o: OscillatorParams) -> dict:
    return {
        "v_dd": o.v_dd,
        "r_s": o.r_s,
        "c_par": o.c_par,
        "r_i": o.r_i,
        "switch": switch_to_dict(o.switch),
    }


def coupling_to_dict(cp: CouplingSpec) -> dict:
    d = {"i": cp.i, "j": cp.j, "kind": cp.kind.value, "value": cp.value}
    if cp.r_ox is not None:
        d["r_ox"] = cp.r_ox
    return d


def network_to_config(net: NetworkConfig, sim: SimConfig | None = None) -> dict:
    cfg: dict[str, Any] = {
        "oscillators": [oscillator_to_dict(o) for o in net.oscillators],
        "couplings": [coupling_to_dict(c) for c in net.couplings],
    }
    if sim is not None:
        cfg["sim"] = {
            "duration": sim.duration,
            "dt": sim.dt,
            "record_every": sim.record_every,
            "event_tol": sim.event_tol,
            "master_seed": sim.master_seed,
        }
    return cfg


# ---------------------------------------------------------------------------
# dotted-path overrides ("oscillators.1.switch.v_th", "sim.duration", ...)


def apply_override(cfg: dict, key: str, value: Any) -> dict:
    """Return a copy of cfg with the dotted-path key set to value.

    Bare oscillator/switch field names (e.g. "v_dd") are broadcast to every
    oscillator as a convenience for single- and symmetric-pair configs.
    """
    cfg = copy.deepcopy(cfg)
    parts = key.split(".")

    osc_fields = {"v_dd", "r_s", "c_par", "r_i"}
    sw_fields = {"v_th", "v_h", "r_off", "a", "b", "c", "r_on_floor", "r_on_ceiling"}
    if len(parts) == 1 and parts[0] in osc_fields:
        for o in cfg["oscillators"]:
            o[parts[0]] = value
        return cfg
    if len(parts) == 1 and parts[0] in sw_fields:
        for o in cfg["oscillators"]:
            o.setdefault("switch", {})[parts[0]] = value
        return cfg

    node: Any = cfg
    for p in parts[:-1]:
        if isinstance(node, list):
            node = node[int(p)]
        else:
            node = node.setdefault(p, {})
    last = parts[-1]
    if isinstance(node, list):
        node[int(last)] = value
    else:
        node[last] = value
    return cfg
