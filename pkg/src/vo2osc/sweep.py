"""Coupling-strength sweeps with regime classification and zone boundaries.

Each sweep point replaces the value (and kind, if needed) of the network's
single coupling slot, runs a full simulation with a per-point derived seed,
and classifies the result.  Points are independent, so they run on a thread
pool (the integration kernel releases the GIL).
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

from .analysis import Regime, SyncReport, classify_regime
from .circuit import (
    CouplingKind,
    CouplingSpec,
    NetworkConfig,
    SimConfig,
    simulate,
)


@dataclass
class SweepPoint:
    param: float
    f1_per_osc: list[float]
    delta_phi_mean_deg: float
    regime: Optional[Regime]
    error: Optional[str] = None

    @property
    def failed(self) -> bool:
        return self.error is not None


@dataclass
class SweepResult:
    kind: CouplingKind
    param_values: list[float]
    points: list[SweepPoint]
    zone_boundaries: dict = field(default_factory=dict)

    def regimes(self) -> list[Optional[Regime]]:
        return [p.regime for p in self.points]


def _single_slot(net: NetworkConfig) -> CouplingSpec:
    if len(net.couplings) != 1:
        raise ValueError(
            f"sweep needs a network with exactly one coupling slot, "
            f"got {len(net.couplings)}"
        )
    return net.couplings[0]


def _point_seed(master_seed: int, index: int) -> int:
    # Knuth multiplicative hash keeps per-point streams decorrelated while
    # remaining a pure function of (master_seed, index).
    return (master_seed ^ ((index + 1) * 2654435761)) & 0x7FFFFFFF


def _run_point(
    net: NetworkConfig, sim: SimConfig, kind: CouplingKind, value: float, index: int
) -> SweepPoint:
    slot = _single_slot(net)
    r_ox = slot.r_ox if kind is CouplingKind.RESISTIVE else None
    coupling = CouplingSpec(slot.i, slot.j, kind, value, r_ox)
    net_k = replace(net, couplings=(coupling,))
    sim_k = replace(sim, master_seed=_point_seed(sim.master_seed, index))
    try:
        wf = simulate(net_k, sim_k)
        report: SyncReport = classify_regime(wf, pair=(slot.i, slot.j))
    except Exception as exc:  # noqa: BLE001 - per-point isolation is the contract
        return SweepPoint(value, [0.0, 0.0], 0.0, None, error=str(exc))
    return SweepPoint(
        param=value,
        f1_per_osc=report.f1_per_osc,
        delta_phi_mean_deg=report.delta_phi_mean_deg,
        regime=report.regime,
    )


def _sweep(
    net: NetworkConfig,
    values: list[float],
    sim: SimConfig,
    kind: CouplingKind,
    jobs: Optional[int],
) -> list[SweepPoint]:
    _single_slot(net)
    order = sorted(range(len(values)), key=lambda k: values[k])
    svals = [values[k] for k in order]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        points = list(
            pool.map(
                lambda iv: _run_point(net, sim, kind, iv[1], iv[0]),
                enumerate(svals),
            )
        )
    return points


def sweep_r(
    net_base: NetworkConfig,
    r_values: list[float],
    sim: SimConfig,
    jobs: Optional[int] = None,
) -> SweepResult:
    """Sweep the resistive coupling value; boundaries from the largest-r side."""
    points = _sweep(net_base, list(r_values), sim, CouplingKind.RESISTIVE, jobs)
    sync = [p.param for p in points if p.regime is Regime.SYNCHRONIZED]
    death = [p.param for p in points if p.regime is Regime.DEATH]
    boundaries = {
        "sync_onset": max(sync) if sync else None,
        "death_onset": max(death) if death else None,
    }
    return SweepResult(
        kind=CouplingKind.RESISTIVE,
        param_values=[p.param for p in points],
        points=points,
        zone_boundaries=boundaries,
    )


def sweep_c(
    net_base: NetworkConfig,
    c_values: list[float],
    sim: SimConfig,
    jobs: Optional[int] = None,
) -> SweepResult:
    """Sweep the capacitive coupling value; boundaries bracket the chaotic band."""
    points = _sweep(net_base, list(c_values), sim, CouplingKind.CAPACITIVE, jobs)
    chaotic = [p.param for p in points if p.regime is Regime.CHAOTIC]
    weak_to_chaos = min(chaotic) if chaotic else None
    strong = [
        p.param
        for p in points
        if p.regime is Regime.SYNCHRONIZED
        and weak_to_chaos is not None
        and p.param > weak_to_chaos
    ]
    boundaries = {
        "weak_to_chaos": weak_to_chaos,
        "chaos_to_strong": min(strong) if strong else None,
    }
    return SweepResult(
        kind=CouplingKind.CAPACITIVE,
        param_values=[p.param for p in points],
        points=points,
        zone_boundaries=boundaries,
    )


def sweep_to_csv(result: SweepResult, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["param", "f1_osc0", "f1_osc1", "delta_phi_deg", "regime"])
        for p in result.points:
            w.writerow(
                [
                    repr(p.param),
                    repr(p.f1_per_osc[0]),
                    repr(p.f1_per_osc[1]),
                    repr(p.delta_phi_mean_deg),
                    p.regime.name if p.regime is not None else f"ERROR: {p.error}",
                ]
            )


def boundaries_to_json(result: SweepResult, path) -> None:
    with open(path, "w") as fh:
        json.dump(
            {"kind": result.kind.value, "zone_boundaries": result.zone_boundaries},
            fh,
            indent=2,
        )
        fh.write("\n")
