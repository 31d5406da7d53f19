"""Two-state hysteretic VO2 switch model with flicker-noise threshold jitter.

The switch is quasi-static: it is either an ohmic insulator branch (r_off)
or a metallic branch whose resistance depends nonlinearly on the control
voltage.  Sub-threshold 1/f^alpha noise is added to the sensed control
voltage, so it perturbs switching instants without entering the circuit ODE.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
from scipy.signal import lfilter


class SwitchPhase(Enum):
    OFF = 0
    ON = 1


@dataclass(frozen=True)
class NoiseParams:
    """Parameters of the sub-threshold flicker noise source.

    peak_amplitude = 0 disables noise entirely.
    """

    alpha: float = 1.0
    peak_amplitude: float = 1e-3
    band_lo: float = 1.0
    band_hi: float = 1000.0
    seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.band_lo < self.band_hi):
            raise ValueError("need 0 < band_lo < band_hi")
        if self.peak_amplitude < 0.0:
            raise ValueError("peak_amplitude must be >= 0")
        if not (0.0 < self.alpha < 2.0):
            raise ValueError("alpha must be in (0, 2)")

    def disabled(self) -> "NoiseParams":
        return NoiseParams(self.alpha, 0.0, self.band_lo, self.band_hi, self.seed)


def _metal_branch_roots(a: float, b: float, c: float) -> tuple[float, float]:
    """Roots of the metal-branch denominator a*v^2 + b*v + c.

    The denominator must be a downward parabola with two real roots; the
    branch formula is physical only between them.
    """
    if a >= 0.0:
        raise ValueError("metal-branch coefficient a must be negative")
    disc = b * b - 4.0 * a * c
    if disc <= 0.0:
        raise ValueError("metal-branch denominator has no real roots")
    sq = math.sqrt(disc)
    r1 = (-b + sq) / (2.0 * a)
    r2 = (-b - sq) / (2.0 * a)
    return (min(r1, r2), max(r1, r2))


@dataclass(frozen=True)
class SwitchParams:
    """Hysteresis thresholds, branch resistances and noise of one switch."""

    v_th: float = 1.4
    v_h: float = 0.58
    r_off: float = 1100.0
    a: float = -0.031
    b: float = 0.079
    c: float = -0.032
    r_on_floor: float = 40.0
    r_on_ceiling: Optional[float] = None
    noise: NoiseParams = field(default_factory=NoiseParams)

    def __post_init__(self):
        if self.r_on_ceiling is None:
            object.__setattr__(self, "r_on_ceiling", self.r_off)
        if not (0.0 < self.v_h < self.v_th):
            raise ValueError("need 0 < v_h < v_th")
        if not (self.r_off >= self.r_on_ceiling >= self.r_on_floor > 0.0):
            raise ValueError("need r_off >= r_on_ceiling >= r_on_floor > 0")
        lo, hi = _metal_branch_roots(self.a, self.b, self.c)
        if not (lo < self.v_h and self.v_th < hi):
            raise ValueError(
                f"[v_h, v_th] = [{self.v_h}, {self.v_th}] must lie inside the "
                f"positive-denominator interval ({lo:.4g}, {hi:.4g})"
            )
        object.__setattr__(self, "_root_lo", lo)
        object.__setattr__(self, "_root_hi", hi)

    @property
    def denominator_roots(self) -> tuple[float, float]:
        return (self._root_lo, self._root_hi)

    def with_fixed_r_on(self, r_on: float) -> "SwitchParams":
        """Copy with the metal branch pinned to a constant resistance."""
        return SwitchParams(
            v_th=self.v_th,
            v_h=self.v_h,
            r_off=self.r_off,
            a=self.a,
            b=self.b,
            c=self.c,
            r_on_floor=r_on,
            r_on_ceiling=r_on,
            noise=self.noise,
        )


@dataclass
class SwitchState:
    phase: SwitchPhase = SwitchPhase.OFF
    last_transition_time: float = 0.0


@dataclass(frozen=True)
class SwitchEvent:
    oscillator: int
    direction: str  # "on" or "off"
    t: float


def r_on(params: SwitchParams, v_c: float) -> float:
    """Metal-phase resistance v / (a v^2 + b v + c), clamped.

    Outside the positive-denominator interval the formula is unphysical;
    there the resistance diverges toward the nearer root, so the ceiling
    clamp applies.
    """
    if v_c <= 0.0:
        raise ValueError(f"v_c must be positive, got {v_c}")
    denom = (params.a * v_c + params.b) * v_c + params.c
    if denom <= 0.0:
        return params.r_on_ceiling
    return min(max(v_c / denom, params.r_on_floor), params.r_on_ceiling)


def conductance(params: SwitchParams, state: SwitchState, v_c: float) -> float:
    """Branch conductance for the current phase (r_i not included)."""
    if state.phase is SwitchPhase.OFF:
        return 1.0 / params.r_off
    return 1.0 / r_on(params, v_c)


def switch_update(
    params: SwitchParams,
    state: SwitchState,
    v_eff: float,
    t: float,
    oscillator: int = 0,
) -> tuple[SwitchState, Optional[SwitchEvent]]:
    """Threshold comparison with inclusive bounds (>= v_th, <= v_h).

    v_eff is the sensed control voltage including the noise sample.
    """
    if state.phase is SwitchPhase.OFF and v_eff >= params.v_th:
        return SwitchState(SwitchPhase.ON, t), SwitchEvent(oscillator, "on", t)
    if state.phase is SwitchPhase.ON and v_eff <= params.v_h:
        return SwitchState(SwitchPhase.OFF, t), SwitchEvent(oscillator, "off", t)
    return state, None


def threshold_powers(params: SwitchParams) -> tuple[float, float]:
    """Diagnostic switching powers (p_th, p_h) at the two thresholds."""
    p_th = params.v_th**2 / params.r_off
    p_h = params.v_h**2 / r_on(params, params.v_h)
    return p_th, p_h


# Quasi-static validity: measured switching transients stay under 1 us, so
# the model holds for periods much longer than that.
SWITCHING_TIME_BOUND = 1e-6
SOFT_WARN_HZ = 0.1 / SWITCHING_TIME_BOUND  # period < 100x bound
STRONG_WARN_HZ = 10 * SOFT_WARN_HZ  # period < 10x bound


def validity_check(f_expected: float) -> list[str]:
    """Warn (never block) when the oscillation approaches switching-time scales."""
    if f_expected <= 0.0:
        raise ValueError("f_expected must be positive")
    warnings = []
    if f_expected > STRONG_WARN_HZ:
        warnings.append(
            f"fundamental {f_expected:.3g} Hz is above {STRONG_WARN_HZ:.0f} Hz: "
            "period is within 10x of the switching-transient bound; the "
            "quasi-static switch model is outside its stated applicability"
        )
    elif f_expected > SOFT_WARN_HZ:
        warnings.append(
            f"fundamental {f_expected:.3g} Hz is above {SOFT_WARN_HZ:.0f} Hz: "
            "period is within 100x of the switching-transient bound; "
            "results may be affected by neglected transients"
        )
    return warnings


class FlickerNoise:
    """Streaming 1/f^alpha noise: octave-spaced one-pole lowpassed white sources.

    Each pole k sits at f_k = band_lo * 2^k (clipped to band_hi) and is fed
    an independent unit-variance white stream; weights f_k^(-alpha/2) shape
    the summed PSD to slope -alpha across the band.  The output is scaled so
    the pre-clamp standard deviation is peak_amplitude / 3, then hard-clamped
    (not rescaled) at +/- peak_amplitude.

    Samples are produced on a fixed internal grid at `fs` and held between
    ticks; the stream is bit-reproducible for a given (params, seed) and
    independent of how it is consumed.
    """

    def __init__(self, params: NoiseParams, seed: Optional[int] = None, fs: float = 1e5):
        self.params = params
        self.fs = float(fs)
        self.seed = params.seed if seed is None else seed
        self._rng = np.random.default_rng(self.seed)

        # guard octaves outside the band keep the in-band slope clean
        n_octaves = math.ceil(math.log2(params.band_hi / params.band_lo))
        f_poles = params.band_lo * 2.0 ** np.arange(-2, n_octaves + 4)
        f_poles = f_poles[f_poles < 0.45 * fs]
        self.f_poles = f_poles
        self._c = 1.0 - np.exp(-2.0 * np.pi * f_poles / self.fs)
        self._w = f_poles ** (-params.alpha / 2.0)
        # stationary variance of one-pole filter driven by white noise
        var = np.sum(self._w**2 * self._c / (2.0 - self._c))
        if params.peak_amplitude > 0.0 and var > 0.0:
            self._scale = (params.peak_amplitude / 3.0) / math.sqrt(var)
        else:
            self._scale = 0.0
        self._zi = np.zeros((len(f_poles), 1))
        self._buf = np.empty(0)

    def _extend(self, n_total: int) -> None:
        n_new = n_total - len(self._buf)
        if n_new <= 0:
            return
        if self._scale == 0.0:
            chunk = np.zeros(n_new)
        else:
            white = self._rng.standard_normal((n_new, len(self.f_poles)))
            chunk = np.zeros(n_new)
            for k in range(len(self.f_poles)):
                c = self._c[k]
                y, self._zi[k] = lfilter(
                    [c], [1.0, -(1.0 - c)], white[:, k], zi=self._zi[k]
                )
                chunk += self._w[k] * y
            chunk *= self._scale
            np.clip(
                chunk,
                -self.params.peak_amplitude,
                self.params.peak_amplitude,
                out=chunk,
            )
        self._buf = np.concatenate([self._buf, chunk])

    def block(self, n: int) -> np.ndarray:
        """First n samples of the stream on the internal grid."""
        self._extend(n)
        return self._buf[:n]

    def sample(self, t: float) -> float:
        """Noise voltage at time t (zero-order hold between internal ticks)."""
        if t < 0.0:
            raise ValueError("t must be >= 0")
        idx = int(t * self.fs)
        self._extend(idx + 1)
        return float(self._buf[idx])
