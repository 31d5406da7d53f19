"""Spectral, phase and regime analysis of simulated waveforms.

Phase is defined from ON-switching events rather than a Hilbert transform:
relaxation oscillations are pulse-like and event phase matches how the
waveforms are compared visually.  All functions are pure.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, asdict
from enum import Enum
from typing import Optional

import numpy as np

from .circuit import Waveform


class Regime(Enum):
    UNCOUPLED = "uncoupled"
    QUASI_PERIODIC = "quasi_periodic"
    SYNCHRONIZED = "synchronized"
    CHAOTIC = "chaotic"
    DEATH = "death"


@dataclass(frozen=True)
class RegimeThresholds:
    """Fixed, documented defaults for regime classification (all overridable)."""

    freq_match_rel: float = 0.01       # |f1_a - f1_b| / f1_a for sync
    phase_circstd_deg: float = 30.0    # circular std of delta-phi for sync
    spectral_flatness: float = 0.35    # geometric/arithmetic mean over 0..5 f1
    period_cv: float = 0.25            # per-period coefficient of variation
    sideband_rel: float = 0.10         # secondary-peak height vs fundamental
    death_trailing_frac: float = 0.25  # no ON events in this trailing fraction
    failure_excursion_deg: float = 45.0  # |dphi - plateau| defining a failure


class Window(Enum):
    RECT = "rect"
    HANN = "hann"


@dataclass
class Spectrum:
    freqs: np.ndarray
    magnitude: np.ndarray  # amplitude spectrum, volts
    df: float
    window: Window


@dataclass
class PeakMetrics:
    f1: float
    delta_f1: float       # width at 1% of peak height
    rel_fluct: float      # delta_f1 / f1
    peak_height: float


@dataclass
class SyncReport:
    f1_per_osc: list[float]
    delta_phi_mean_deg: float
    delta_phi_circstd_deg: float
    regime: Regime
    phase_failures: int
    thresholds: RegimeThresholds = field(default_factory=RegimeThresholds)

    def to_json(self) -> str:
        d = asdict(self)
        d["regime"] = self.regime.value
        return json.dumps(d, indent=2)


DEFAULT_TRANSIENT = 0.01  # seconds skipped before analysis


def _segment(wf: Waveform, skip_transient: float) -> np.ndarray:
    mask = wf.t >= skip_transient
    if mask.sum() < 16:
        raise ValueError("post-transient segment too short")
    return mask


def spectrum(
    wf: Waveform,
    osc: int,
    skip_transient: float = DEFAULT_TRANSIENT,
    window: Window = Window.HANN,
    channel: str = "v",
) -> Spectrum:
    """Single-sided amplitude spectrum of one voltage (or current) channel."""
    mask = _segment(wf, skip_transient)
    x = (wf.v if channel == "v" else wf.i)[mask, osc].astype(float)
    x = x - x.mean()
    n = len(x)
    dt = wf.t[1] - wf.t[0]
    if window is Window.HANN:
        w = np.hanning(n)
        x = x * w
        norm = w.sum()
    else:
        norm = n
    mag = np.abs(np.fft.rfft(x)) * 2.0 / norm
    freqs = np.fft.rfftfreq(n, dt)
    return Spectrum(freqs=freqs, magnitude=mag, df=freqs[1], window=window)


def peak_metrics(spec: Spectrum) -> PeakMetrics:
    """Fundamental peak and its width at 1% of the peak height.

    The width is that of the contiguous band around the tallest non-DC bin;
    disjoint secondary peaks are excluded by construction.
    """
    mag = spec.magnitude.copy()
    mag[0] = 0.0
    if not np.any(mag > 0.0):
        raise ValueError("spectrum has no nonzero content above DC")
    ipk = int(np.argmax(mag))
    peak = mag[ipk]
    thresh = 0.01 * peak
    lo = ipk
    while lo > 0 and mag[lo - 1] >= thresh:
        lo -= 1
    hi = ipk
    while hi < len(mag) - 1 and mag[hi + 1] >= thresh:
        hi += 1
    delta = max((hi - lo + 1) * spec.df, spec.df)
    f1 = spec.freqs[ipk]
    return PeakMetrics(f1=f1, delta_f1=delta, rel_fluct=delta / f1, peak_height=peak)


def _on_times(wf: Waveform, osc: int, skip_transient: float) -> np.ndarray:
    t = wf.event_times(osc, "on")
    return t[t >= skip_transient]


def phase_difference(
    wf: Waveform,
    osc_a: int,
    osc_b: int,
    skip_transient: float = DEFAULT_TRANSIENT,
) -> np.ndarray:
    """(t, delta_phi_deg) rows: event phase of osc_b relative to osc_a.

    For each ON event of osc_a at t_k with period T_k, the phase is
    360 * (t_b - t_k) / T_k where t_b is osc_b's first ON event >= t_k.
    """
    ta = _on_times(wf, osc_a, skip_transient)
    tb = wf.event_times(osc_b, "on")
    if len(ta) < 11 or len(tb) < 10:
        dead = osc_a if len(ta) < 11 else osc_b
        raise ValueError(f"oscillator {dead} has too few ON events (death regime?)")
    rows = []
    for k in range(len(ta) - 1):
        T = ta[k + 1] - ta[k]
        nxt = tb[np.searchsorted(tb, ta[k]):]
        if len(nxt) == 0:
            break
        rows.append((ta[k], (360.0 * (nxt[0] - ta[k]) / T) % 360.0))
    return np.array(rows)


def circular_mean_deg(phi_deg: np.ndarray) -> float:
    z = np.exp(1j * np.radians(phi_deg)).mean()
    return float(np.degrees(np.angle(z)) % 360.0)


def circular_std_deg(phi_deg: np.ndarray) -> float:
    r = abs(np.exp(1j * np.radians(phi_deg)).mean())
    r = min(max(r, 1e-300), 1.0)
    return float(np.degrees(math.sqrt(-2.0 * math.log(r))))


def circular_distance_deg(a, b):
    return np.abs((np.asarray(a) - np.asarray(b) + 180.0) % 360.0 - 180.0)


def spectral_flatness(spec: Spectrum, f_max: float) -> float:
    """Geometric over arithmetic mean of power in (0, f_max]."""
    mask = (spec.freqs > 0.0) & (spec.freqs <= f_max)
    p = spec.magnitude[mask] ** 2
    p = p[p > 0.0]
    if len(p) == 0:
        return 0.0
    return float(np.exp(np.mean(np.log(p))) / np.mean(p))


def count_phase_failures(
    dphi: np.ndarray, excursion_deg: float = 45.0
) -> tuple[int, list[int]]:
    """Episodes where delta-phi leaves its plateau by more than excursion_deg.

    The plateau is the circular mean of the series.  Returns the episode
    count and each episode's length in periods.
    """
    if len(dphi) == 0:
        return 0, []
    plateau = circular_mean_deg(dphi[:, 1])
    out = circular_distance_deg(dphi[:, 1], plateau) > excursion_deg
    episodes = []
    run = 0
    for flag in out:
        if flag:
            run += 1
        elif run:
            episodes.append(run)
            run = 0
    if run:
        episodes.append(run)
    return len(episodes), episodes


def _has_sideband(spec: Spectrum, pm: PeakMetrics, rel: float) -> bool:
    """Secondary peak >= rel * fundamental at a non-harmonic frequency."""
    mag = spec.magnitude
    f1 = pm.f1
    tol = max(3 * spec.df, 0.02 * f1)
    for i in range(1, len(mag) - 1):
        if mag[i] < rel * pm.peak_height:
            continue
        if mag[i] <= mag[i - 1] or mag[i] < mag[i + 1]:
            continue  # local maxima only
        f = spec.freqs[i]
        k = round(f / f1)
        if k >= 1 and abs(f - k * f1) <= tol:
            continue
        if f > tol:
            return True
    return False


def classify_regime(
    wf: Waveform,
    pair: tuple[int, int] = (0, 1),
    skip_transient: float = DEFAULT_TRANSIENT,
    thresholds: RegimeThresholds = RegimeThresholds(),
) -> SyncReport:
    a, b = pair
    t_end = wf.t[-1]
    window = t_end - skip_transient
    if window <= 0:
        raise ValueError("analysis window too short")
    trailing = t_end - thresholds.death_trailing_frac * window

    f1 = []
    dead = False
    for osc in (a, b):
        t_on = _on_times(wf, osc, skip_transient)
        if len(t_on) < 4 or t_on[-1] < trailing:
            dead = True
        f1.append(
            (len(t_on) - 1) / (t_on[-1] - t_on[0]) if len(t_on) >= 2 else 0.0
        )
    if dead:
        return SyncReport(
            f1_per_osc=f1, delta_phi_mean_deg=0.0, delta_phi_circstd_deg=0.0,
            regime=Regime.DEATH, phase_failures=0, thresholds=thresholds,
        )

    dphi = phase_difference(wf, a, b, skip_transient)
    mean_phi = circular_mean_deg(dphi[:, 1])
    std_phi = circular_std_deg(dphi[:, 1])
    n_fail, _ = count_phase_failures(dphi, thresholds.failure_excursion_deg)

    report = lambda reg: SyncReport(
        f1_per_osc=f1, delta_phi_mean_deg=mean_phi, delta_phi_circstd_deg=std_phi,
        regime=reg, phase_failures=n_fail, thresholds=thresholds,
    )

    if (
        abs(f1[0] - f1[1]) / max(f1[0], 1e-12) < thresholds.freq_match_rel
        and std_phi < thresholds.phase_circstd_deg
    ):
        return report(Regime.SYNCHRONIZED)

    specs = [spectrum(wf, osc, skip_transient) for osc in (a, b)]
    pms = [peak_metrics(s) for s in specs]
    for osc, s, pm in zip((a, b), specs, pms):
        flat = spectral_flatness(s, 5.0 * pm.f1)
        t_on = _on_times(wf, osc, skip_transient)
        periods = np.diff(t_on)
        cv = periods.std() / periods.mean() if len(periods) > 3 else 0.0
        if flat > thresholds.spectral_flatness or cv > thresholds.period_cv:
            return report(Regime.CHAOTIC)
    if any(_has_sideband(s, pm, thresholds.sideband_rel) for s, pm in zip(specs, pms)):
        return report(Regime.QUASI_PERIODIC)
    return report(Regime.UNCOUPLED)


def slew_rate_at_switch(
    wf: Waveform, osc: int, skip_transient: float = DEFAULT_TRANSIENT
) -> float:
    """Median dV/dt over the last 5% of period before each ON switching."""
    t_on = _on_times(wf, osc, skip_transient)
    if len(t_on) < 5:
        raise ValueError("need at least 5 ON events")
    rates = []
    periods = np.diff(t_on)
    for k in range(1, len(t_on) - 1):
        t1 = t_on[k]
        t0 = t1 - 0.05 * periods[k - 1]
        i0, i1 = np.searchsorted(wf.t, (t0, t1))
        i1 = min(i1, len(wf.t) - 1)
        if i1 <= i0:
            continue
        dv = wf.v[i1, osc] - wf.v[i0, osc]
        rates.append(dv / (wf.t[i1] - wf.t[i0]))
    if not rates:
        raise ValueError("could not sample pre-switch slew")
    return float(np.median(rates))


def phase_portrait(
    wf: Waveform,
    osc_a: int,
    osc_b: int,
    n_periods: int = 1300,
    skip_transient: float = DEFAULT_TRANSIENT,
) -> np.ndarray:
    """Decimated (v_a, v_b) pairs spanning n_periods of oscillator a."""
    t_on = _on_times(wf, osc_a, skip_transient)
    if len(t_on) < n_periods + 1:
        raise ValueError(
            f"waveform covers only {max(len(t_on) - 1, 0)} periods, need {n_periods}"
        )
    i0, i1 = np.searchsorted(wf.t, (t_on[0], t_on[n_periods]))
    return np.column_stack([wf.v[i0:i1, osc_a], wf.v[i0:i1, osc_b]])


def occupancy_fraction(portrait: np.ndarray, grid: int = 64) -> float:
    """Fraction of bounding-box cells visited (filled vs stable trajectory)."""
    va, vb = portrait[:, 0], portrait[:, 1]
    span_a = va.max() - va.min()
    span_b = vb.max() - vb.min()
    if span_a == 0.0 or span_b == 0.0:
        return 0.0
    ia = np.minimum((grid * (va - va.min()) / span_a).astype(int), grid - 1)
    ib = np.minimum((grid * (vb - vb.min()) / span_b).astype(int), grid - 1)
    return len(set(zip(ia.tolist(), ib.tolist()))) / (grid * grid)


def spectrum_to_csv(spec: Spectrum, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["freq_hz", "magnitude"])
        for f, m in zip(spec.freqs, spec.magnitude):
            w.writerow([repr(float(f)), repr(float(m))])


def portrait_to_csv(portrait: np.ndarray, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["v_a", "v_b"])
        for va, vb in portrait:
            w.writerow([repr(float(va)), repr(float(vb))])
