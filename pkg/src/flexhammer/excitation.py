"""Programmable stand-ins for the human operator.

Single-strike velocity profiles (one backward then one forward swing),
jittered strike ensembles, a velocity-tracking operator supplying the
handle force, and the logarithmic identification sweep.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class StrikeProfile:
    """Single-period sinusoidal strike of the input velocity.

    v(t) = -A sin(2 pi f (t - onset)) on [onset, onset + 1/f], zero
    elsewhere: one backward half-wave, reversal at onset + 1/(2 f), then
    one forward half-wave.
    """

    amplitude: float
    freq_hz: float
    onset: float = 0.0

    def __post_init__(self):
        if not self.amplitude > 0:
            raise ValueError(f"amplitude must be positive, got {self.amplitude}")
        if not self.freq_hz > 0:
            raise ValueError(f"frequency must be positive, got {self.freq_hz}")
        if self.onset < 0:
            raise ValueError(f"onset must be non-negative, got {self.onset}")


def strike_profile(p: StrikeProfile, dt: float, duration: float) -> np.ndarray:
    """Sample the strike on a fixed grid of step dt covering duration.

    Raises
    ------
    ValueError
        If the duration does not cover the full strike (onset + 1/f).
    """
    if duration < p.onset + 1.0 / p.freq_hz:
        raise ValueError(
            f"duration {duration} s too short: strike needs "
            f"{p.onset + 1.0 / p.freq_hz:.4g} s"
        )
    t = np.arange(int(round(duration / dt))) * dt
    v = np.where(
        (t >= p.onset) & (t <= p.onset + 1.0 / p.freq_hz),
        -p.amplitude * np.sin(2.0 * np.pi * p.freq_hz * (t - p.onset)),
        0.0,
    )
    return v


@dataclass(frozen=True)
class OperatorModel:
    """Simulated operator: velocity tracking gains plus timing variability.

    ``kp`` (N m s/rad) maps velocity error to force (damping-like),
    ``ki`` (N m/rad) integrates it (stiffness-like). ``jitter`` is the
    relative standard deviation of per-strike frequency scatter.
    """

    kp: float = 2.0
    ki: float = 60.0
    jitter: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kp < 0 or self.ki < 0:
            raise ValueError("tracking gains must be non-negative")
        if not 0.0 <= self.jitter <= 0.5:
            raise ValueError(f"jitter must lie in [0, 0.5], got {self.jitter}")


def ensemble(p: StrikeProfile, model: OperatorModel, count: int,
             dt: float, duration: float) -> list[np.ndarray]:
    """Sample ``count`` strikes with lognormal frequency jitter.

    Each strike's frequency is the nominal one times exp(e) with
    e ~ N(0, jitter), clamped to +-3 sigma. Identical seeds give
    byte-identical output.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    rng = np.random.default_rng(model.seed)
    draws = rng.standard_normal(count) * model.jitter
    if model.jitter > 0:
        draws = np.clip(draws, -3.0 * model.jitter, 3.0 * model.jitter)
    out = []
    for e in draws:
        q = StrikeProfile(p.amplitude, p.freq_hz * float(np.exp(e)), p.onset)
        out.append(strike_profile(q, dt, duration))
    return out


class TrackingOperator:
    """Stateful PI tracker producing the handle force from velocity error.

    Call once per control step in sample order; keeps the trapezoidal
    integral of the error internally. ``reset()`` rewinds the state.
    """

    def __init__(self, model: OperatorModel, v_desired: np.ndarray, dt: float):
        self.model = model
        self.v_desired = np.asarray(v_desired, dtype=float)
        self.dt = dt
        self.reset()

    def reset(self):
        self._integral = 0.0
        self._prev_err = 0.0
        self._prev_idx = -1

    def force(self, idx: int, v_measured: float) -> float:
        """Force for step ``idx`` given the measured handle velocity."""
        err = self.v_desired[idx] - v_measured
        if idx != self._prev_idx:
            if self._prev_idx >= 0:
                self._integral += self.dt * 0.5 * (err + self._prev_err)
            self._prev_err = err
            self._prev_idx = idx
        return self.model.kp * err + self.model.ki * self._integral


def tracking_force(model: OperatorModel, v_desired: np.ndarray, dt: float,
                   v_measured: np.ndarray) -> np.ndarray:
    """Batch form of the tracking law over aligned desired/measured series.

    f = kp (v_des - v_m) + ki * trapezoidal integral of the error.
    """
    v_desired = np.asarray(v_desired, dtype=float)
    v_measured = np.asarray(v_measured, dtype=float)
    if v_desired.shape != v_measured.shape:
        raise ValueError("desired and measured series must have equal length")
    err = v_desired - v_measured
    integral = np.concatenate(([0.0], np.cumsum(dt * 0.5 * (err[1:] + err[:-1]))))
    return model.kp * err + model.ki * integral


def sine_sweep(f0: float, f1: float, duration: float, dt: float) -> np.ndarray:
    """Unit-amplitude logarithmic sweep from f0 to f1 over the duration.

    Instantaneous frequency is f0 at t=0 and f1 at t=duration; at the
    midpoint it equals sqrt(f0 f1).
    """
    if not (0 < f0 < f1):
        raise ValueError(f"need 0 < f0 < f1, got f0={f0}, f1={f1}")
    if f1 >= 0.5 / dt:
        raise ValueError(f"f1={f1} Hz exceeds the Nyquist rate {0.5 / dt} Hz")
    if duration <= 0:
        raise ValueError("duration must be positive")
    t = np.arange(int(round(duration / dt))) * dt
    rate = np.log(f1 / f0)
    phase = 2.0 * np.pi * f0 * duration / rate * (np.exp(t / duration * rate) - 1.0)
    return np.sin(phase)
