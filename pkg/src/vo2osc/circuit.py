"""Oscillator network assembly and deterministic transient simulation.

Each oscillator is a Pearson-Anson cell: supply v_dd through r_s into a
node with capacitance c_par to ground, shunted by the VO2 switch in series
with a small current-sense resistor r_i.  Oscillator nodes may be joined
pairwise by coupling resistors (r_ext in parallel with an embedded film
resistance r_ox) or coupling capacitors.

Thresholds are sensed on the node voltage plus the flicker-noise sample;
the circuit ODE itself sees the noiseless node voltages.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional

import numpy as np

from . import _kernel
from .device import (
    FlickerNoise,
    SwitchEvent,
    SwitchParams,
    SwitchPhase,
    SwitchState,
    switch_update,
    validity_check,
)


class CouplingKind(Enum):
    RESISTIVE = "resistive"
    CAPACITIVE = "capacitive"


@dataclass(frozen=True)
class OscillatorParams:
    v_dd: float = 82.0
    r_s: float = 50e3
    c_par: float = 100e-9
    r_i: float = 10.0
    switch: SwitchParams = field(default_factory=SwitchParams)

    def __post_init__(self):
        for name in ("v_dd", "r_s", "c_par", "r_i"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class CouplingSpec:
    i: int
    j: int
    kind: CouplingKind
    value: float
    r_ox: Optional[float] = None  # ignored for capacitive coupling

    def __post_init__(self):
        if self.i == self.j:
            raise ValueError("coupling must join two distinct oscillators")
        if self.value <= 0.0:
            raise ValueError("coupling value must be positive")
        if self.r_ox is not None and self.r_ox <= 0.0:
            raise ValueError("r_ox must be positive")

    @property
    def effective_resistance(self) -> float:
        """r_ext in parallel with the embedded film resistance."""
        if self.kind is not CouplingKind.RESISTIVE:
            raise ValueError("effective resistance applies to resistive coupling")
        if self.r_ox is None:
            return self.value
        return self.value * self.r_ox / (self.value + self.r_ox)


@dataclass(frozen=True)
class NetworkConfig:
    oscillators: tuple[OscillatorParams, ...]
    couplings: tuple[CouplingSpec, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "oscillators", tuple(self.oscillators))
        object.__setattr__(self, "couplings", tuple(self.couplings))
        n = len(self.oscillators)
        if n == 0:
            raise ValueError("need at least one oscillator")
        seen = set()
        for cp in self.couplings:
            if not (0 <= cp.i < n and 0 <= cp.j < n):
                raise ValueError(f"coupling indices ({cp.i},{cp.j}) out of range")
            key = (min(cp.i, cp.j), max(cp.i, cp.j), cp.kind)
            if key in seen:
                raise ValueError(f"duplicate {cp.kind.value} coupling on pair {key[:2]}")
            seen.add(key)

    @property
    def n_osc(self) -> int:
        return len(self.oscillators)


@dataclass(frozen=True)
class SimConfig:
    duration: float = 0.2
    dt: float = 1e-7
    record_every: int = 8
    event_tol: float = 1e-9
    master_seed: int = 0

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        if not (0.0 < self.event_tol < self.dt):
            raise ValueError("need 0 < event_tol < dt")
        if self.duration < self.dt:
            raise ValueError("duration must cover at least one step")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")


class SimulationError(RuntimeError):
    pass


@dataclass
class System:
    """Immutable assembled network: capacitance matrix + conductance stamps."""

    net: NetworkConfig
    M: np.ndarray       # (n, n) capacitance matrix
    lap_r: np.ndarray   # (n, n) resistive-coupling Laplacian
    v_dd: np.ndarray
    g_s: np.ndarray
    r_i: np.ndarray
    v_th: np.ndarray
    v_h: np.ndarray
    r_off: np.ndarray
    qa: np.ndarray
    qb: np.ndarray
    qc: np.ndarray
    r_floor: np.ndarray
    r_ceil: np.ndarray

    @property
    def n(self) -> int:
        return len(self.v_dd)


def build_system(net: NetworkConfig) -> System:
    n = net.n_osc
    M = np.zeros((n, n))
    lap_r = np.zeros((n, n))
    for k, osc in enumerate(net.oscillators):
        M[k, k] += osc.c_par
    for cp in net.couplings:
        if cp.kind is CouplingKind.CAPACITIVE:
            M[cp.i, cp.i] += cp.value
            M[cp.j, cp.j] += cp.value
            M[cp.i, cp.j] -= cp.value
            M[cp.j, cp.i] -= cp.value
        else:
            g = 1.0 / cp.effective_resistance
            lap_r[cp.i, cp.i] += g
            lap_r[cp.j, cp.j] += g
            lap_r[cp.i, cp.j] -= g
            lap_r[cp.j, cp.i] -= g
    if np.linalg.matrix_rank(M) < n:
        raise ValueError("capacitance matrix is singular")

    def arr(f):
        return np.array([f(o) for o in net.oscillators], dtype=float)

    return System(
        net=net,
        M=M,
        lap_r=lap_r,
        v_dd=arr(lambda o: o.v_dd),
        g_s=arr(lambda o: 1.0 / o.r_s),
        r_i=arr(lambda o: o.r_i),
        v_th=arr(lambda o: o.switch.v_th),
        v_h=arr(lambda o: o.switch.v_h),
        r_off=arr(lambda o: o.switch.r_off),
        qa=arr(lambda o: o.switch.a),
        qb=arr(lambda o: o.switch.b),
        qc=arr(lambda o: o.switch.c),
        r_floor=arr(lambda o: o.switch.r_on_floor),
        r_ceil=arr(lambda o: o.switch.r_on_ceiling),
    )


@dataclass
class SimState:
    """Mutable integration state for the step-level API."""

    v: np.ndarray
    states: list[SwitchState]
    t: float
    events: list[SwitchEvent] = field(default_factory=list)


def initial_state(system: System) -> SimState:
    """Power-on conditions: all nodes at 0 V, all switches OFF."""
    return SimState(
        v=np.zeros(system.n),
        states=[SwitchState() for _ in range(system.n)],
        t=0.0,
    )


def _branch_g_eff(system: System, v: np.ndarray, phases: np.ndarray) -> np.ndarray:
    g = np.empty(system.n)
    for k in range(system.n):
        g[k] = _kernel._branch_g_eff(
            k, v, phases, system.r_off, system.qa, system.qb, system.qc,
            system.r_floor, system.r_ceil, system.r_i,
        )
    return g


def _advance_frozen(system, g_eff, v, tau):
    A = system.M + tau * system.lap_r + tau * np.diag(system.g_s + g_eff)
    rhs = system.M @ v + tau * (system.g_s * system.v_dd)
    try:
        return np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError as exc:
        raise SimulationError(f"linear solve failed: {exc}") from exc


def step(
    system: System,
    state: SimState,
    dt: float,
    event_tol: float = 1e-9,
    noise: Optional[np.ndarray] = None,
) -> SimState:
    """One semi-implicit step with bisection event localization.

    Pure-Python reference path; `simulate` runs the compiled equivalent.
    The optional per-oscillator noise sample is held constant over the step.
    """
    nz = np.zeros(system.n) if noise is None else np.asarray(noise, dtype=float)
    v = state.v.copy()
    states = list(state.states)
    events = list(state.events)
    phases = np.array([s.phase.value for s in states], dtype=np.uint8)
    t0 = state.t
    remaining = dt

    def crossings(v_cand):
        out = []
        for k in range(system.n):
            st, ev = switch_update(
                system.net.oscillators[k].switch, states[k], v_cand[k] + nz[k], 0.0, k
            )
            if ev is not None:
                out.append(k)
        return out

    while remaining > 0.0:
        g_eff = _branch_g_eff(system, v, phases)
        v_cand = _advance_frozen(system, g_eff, v, remaining)
        if not crossings(v_cand):
            v = v_cand
            break
        lo, hi = 0.0, remaining
        while hi - lo > event_tol:
            mid = 0.5 * (lo + hi)
            if crossings(_advance_frozen(system, g_eff, v, mid)):
                hi = mid
            else:
                lo = mid
        v = _advance_frozen(system, g_eff, v, hi)
        t_ev = t0 + (dt - remaining) + hi
        k = min(crossings(v))  # simultaneous crossings: lower index first
        states[k], ev = switch_update(
            system.net.oscillators[k].switch, states[k], v[k] + nz[k], t_ev, k
        )
        assert ev is not None
        events.append(ev)
        phases[k] = states[k].phase.value
        remaining -= hi

    return SimState(v=v, states=states, t=t0 + dt, events=events)


@dataclass
class Waveform:
    """Decimated multi-channel record of one simulation run."""

    t: np.ndarray
    v: np.ndarray       # (n_samples, n_osc) node voltages
    i: np.ndarray       # (n_samples, n_osc) switch-branch currents
    state: np.ndarray   # (n_samples, n_osc) 0 = OFF, 1 = ON
    events: list[SwitchEvent]
    net: NetworkConfig
    sim: SimConfig
    warnings: list[str] = field(default_factory=list)

    @property
    def n_osc(self) -> int:
        return self.v.shape[1]

    def event_times(self, osc: int, direction: str = "on") -> np.ndarray:
        return np.array(
            [e.t for e in self.events if e.oscillator == osc and e.direction == direction]
        )

    def fundamental_estimate(self, osc: int) -> Optional[float]:
        """Rough fundamental from mean ON-event spacing; None if < 2 events."""
        t_on = self.event_times(osc, "on")
        if len(t_on) < 2:
            return None
        return (len(t_on) - 1) / (t_on[-1] - t_on[0])


def _noise_blocks(net: NetworkConfig, sim: SimConfig, fs: float) -> np.ndarray:
    n = net.n_osc
    n_samples = int(sim.duration * fs) + 2
    if all(o.switch.noise.peak_amplitude == 0.0 for o in net.oscillators):
        return np.zeros((n, 1))
    blocks = np.empty((n, n_samples))
    for k, osc in enumerate(net.oscillators):
        gen = FlickerNoise(osc.switch.noise, seed=sim.master_seed ^ k, fs=fs)
        blocks[k] = gen.block(n_samples)
    return blocks


NOISE_FS = 1e5


def simulate(net: NetworkConfig, sim: SimConfig) -> Waveform:
    """Deterministic transient run of the whole network."""
    system = build_system(net)
    n_steps = int(round(sim.duration / sim.dt))
    noise = _noise_blocks(net, sim, NOISE_FS)
    ev_cap = max(10_000, net.n_osc * n_steps // 100)
    (rec_t, rec_v, rec_i, rec_s, ev_t, ev_osc, ev_dir, _vf, _pf, status) = (
        _kernel.run_network(
            system.M, system.lap_r, system.v_dd, system.g_s, system.r_i,
            system.v_th, system.v_h, system.r_off,
            system.qa, system.qb, system.qc, system.r_floor, system.r_ceil,
            noise, NOISE_FS, sim.dt, n_steps, sim.event_tol, sim.record_every,
            np.zeros(system.n), np.zeros(system.n, dtype=np.uint8), ev_cap,
        )
    )
    if status == _kernel.STATUS_SOLVE_FAILED:
        raise SimulationError("linear solve failed during integration")
    if status == _kernel.STATUS_EVENT_OVERFLOW:
        raise SimulationError("event buffer overflow (implausible event rate)")
    events = [
        SwitchEvent(int(o), "on" if d > 0 else "off", float(t))
        for t, o, d in zip(ev_t, ev_osc, ev_dir)
    ]
    wf = Waveform(
        t=rec_t, v=rec_v, i=rec_i, state=rec_s,
        events=events, net=net, sim=sim,
    )
    for k in range(net.n_osc):
        f = wf.fundamental_estimate(k)
        if f is not None:
            for w in validity_check(f):
                wf.warnings.append(f"oscillator {k}: {w}")
    return wf


def analytic_period(osc: OscillatorParams, r_on_fixed: float) -> float:
    """Closed-form period oracle for a single cell with a constant ON resistance.

    Models the OFF phase as pure r_s charging (non-conducting OFF branch)
    and the ON phase as a divider discharge through r_on_fixed + r_i.
    Intended for validating the integrator, not for production estimates.
    """
    sw = osc.switch
    if osc.v_dd <= sw.v_th:
        raise ValueError("OFF-state asymptote must exceed v_th for oscillation")
    r_on_total = r_on_fixed + osc.r_i
    v_inf = osc.v_dd * r_on_total / (osc.r_s + r_on_total)
    if v_inf >= sw.v_h:
        raise ValueError("ON-state asymptote must be below v_h for oscillation")
    t_charge = osc.r_s * osc.c_par * math.log(
        (osc.v_dd - sw.v_h) / (osc.v_dd - sw.v_th)
    )
    tau = (r_on_total * osc.r_s / (r_on_total + osc.r_s)) * osc.c_par
    t_discharge = tau * math.log((sw.v_th - v_inf) / (sw.v_h - v_inf))
    return t_charge + t_discharge


def dynamic_iv(wf: Waveform, osc: int) -> np.ndarray:
    """(v, i) trajectory over an integer number of periods (ON-event bounded)."""
    t_on = wf.event_times(osc, "on")
    if len(t_on) < 2:
        raise ValueError("need at least 2 ON events for a full period")
    mask = (wf.t >= t_on[0]) & (wf.t < t_on[-1])
    return np.column_stack([wf.v[mask, osc], wf.i[mask, osc]])


def waveform_to_csv(wf: Waveform, path) -> None:
    header = ["t"]
    for k in range(wf.n_osc):
        header += [f"osc{k}_v", f"osc{k}_i", f"osc{k}_state"]
    cols = [wf.t]
    for k in range(wf.n_osc):
        cols += [wf.v[:, k], wf.i[:, k], wf.state[:, k]]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in zip(*cols):
            w.writerow([repr(float(x)) if not float(x).is_integer() else int(x)
                        for x in row])


def events_to_csv(wf: Waveform, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "osc", "direction"])
        for e in wf.events:
            w.writerow([repr(e.t), e.oscillator, e.direction])


def waveform_from_csv(path, events_path=None) -> Waveform:
    """Rebuild a Waveform from exported CSVs (config is not recoverable)."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, data = rows[0], np.array(rows[1:], dtype=float)
    n_osc = (len(header) - 1) // 3
    t = data[:, 0]
    v = data[:, 1 + 3 * np.arange(n_osc)]
    i = data[:, 2 + 3 * np.arange(n_osc)]
    state = data[:, 3 + 3 * np.arange(n_osc)].astype(np.uint8)
    events: list[SwitchEvent] = []
    if events_path is not None:
        with open(events_path, newline="") as fh:
            for row in list(csv.reader(fh))[1:]:
                events.append(SwitchEvent(int(row[1]), row[2], float(row[0])))
    else:
        # Reconstruct events from the recorded state channel (coarser than
        # the integrator's event times by up to record_every steps).
        for k in range(n_osc):
            ds = np.diff(state[:, k].astype(np.int8))
            for idx in np.nonzero(ds)[0]:
                direction = "on" if ds[idx] > 0 else "off"
                events.append(SwitchEvent(k, direction, float(t[idx + 1])))
        events.sort(key=lambda e: e.t)
    dt = t[1] - t[0] if len(t) > 1 else 1e-7
    net = NetworkConfig(oscillators=tuple(OscillatorParams() for _ in range(n_osc)))
    sim = SimConfig(duration=max(t[-1], dt), dt=dt, record_every=1, event_tol=dt / 100)
    return Waveform(t=t, v=v, i=i, state=state, events=events, net=net, sim=sim)
