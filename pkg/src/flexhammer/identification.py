"""Environment-impedance model, spectral frequency-response estimation,
and the resonance-prominence measure used on impedance Bode curves.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal

from .dynamics import HammerParams, simulate_hammer


@dataclass(frozen=True)
class ZeModel:
    """Free-air environment impedance of the flexible hammer.

        Ze(s) = K k (m s + b) / (m s^2 + b s + k)

    Defaults are the values identified for the nominal spring.
    """

    K: float = 0.5
    m: float = 2.59e-3
    k: float = 2.23
    b: float = 3e-3

    def __post_init__(self):
        if not (self.K > 0 and self.m > 0 and self.k > 0):
            raise ValueError("K, m, k must be positive")
        if self.b < 0:
            raise ValueError("b must be non-negative")

    def __call__(self, s: np.ndarray) -> np.ndarray:
        """Evaluate the impedance at Laplace points s (N m s/rad)."""
        s = np.asarray(s, dtype=complex)
        return self.K * self.k * (self.m * s + self.b) / (
            self.m * s**2 + self.b * s + self.k)


@dataclass
class ImpedanceCurve:
    """Impedance Bode data: magnitude in dB re 1 N m s/rad, phase in deg.

    Optionally carries a per-bin coherence channel from estimation.
    """

    freq_hz: np.ndarray
    mag_db: np.ndarray
    phase_deg: np.ndarray
    coherence: np.ndarray | None = None

    def __post_init__(self):
        self.freq_hz = np.asarray(self.freq_hz, dtype=float)
        self.mag_db = np.asarray(self.mag_db, dtype=float)
        self.phase_deg = np.asarray(self.phase_deg, dtype=float)
        if not (len(self.freq_hz) == len(self.mag_db) == len(self.phase_deg)):
            raise ValueError("curve arrays must have equal length")
        if self.coherence is not None:
            self.coherence = np.asarray(self.coherence, dtype=float)
            if len(self.coherence) != len(self.freq_hz):
                raise ValueError("coherence length must match the grid")
        if np.any(np.diff(self.freq_hz) <= 0):
            raise ValueError("frequency grid must be strictly increasing")

    def to_csv(self, path_or_buf) -> None:
        """Write columns freq_hz, mag_db, phase_deg[, coherence]."""
        names = ["freq_hz", "mag_db", "phase_deg"]
        cols = [self.freq_hz, self.mag_db, self.phase_deg]
        if self.coherence is not None:
            names.append("coherence")
            cols.append(self.coherence)
        rows = np.column_stack(cols)
        text = ",".join(names) + "\n" + "\n".join(
            ",".join(format(x, ".12g") for x in row) for row in rows) + "\n"
        if hasattr(path_or_buf, "write"):
            path_or_buf.write(text)
        else:
            with open(path_or_buf, "w") as fh:
                fh.write(text)

    @classmethod
    def from_complex(cls, freq_hz: np.ndarray, z: np.ndarray,
                     coherence: np.ndarray | None = None) -> "ImpedanceCurve":
        z = np.asarray(z, dtype=complex)
        return cls(freq_hz=np.asarray(freq_hz, dtype=float),
                   mag_db=20.0 * np.log10(np.abs(z)),
                   phase_deg=np.angle(z, deg=True),
                   coherence=coherence)


def ze_response(model: ZeModel, freq_hz: np.ndarray) -> ImpedanceCurve:
    """Evaluate the environment-impedance model on a frequency grid."""
    freq_hz = np.asarray(freq_hz, dtype=float)
    if freq_hz.size == 0:
        raise ValueError("frequency grid is empty")
    return ImpedanceCurve.from_complex(freq_hz, model(1j * 2.0 * np.pi * freq_hz))


def simulate_ze(model: ZeModel, velocity: np.ndarray, dt: float = 1e-3,
                substeps: int = 1) -> np.ndarray:
    """Time-domain reaction torque of the modeled environment.

    Drives the underlying mass-spring-damper with the velocity input and
    returns K k dx(t), the torque the environment exerts against the
    drive. Matches ze_response in steady state.
    """
    params = HammerParams(m=model.m, b=model.b, k=model.k)
    trace = simulate_hammer(params, velocity, dt=dt, substeps=substeps)
    return model.K * model.k * trace["dx"]


class LowCoherenceError(ValueError):
    """Estimation rejected: too many low-coherence bins in the band."""

    def __init__(self, freq_hz, coherence, threshold):
        self.freq_hz = np.asarray(freq_hz)
        self.coherence = np.asarray(coherence)
        bins = ", ".join(f"{f:.3g} Hz (coh {c:.2f})"
                         for f, c in zip(self.freq_hz[:8], self.coherence[:8]))
        more = "" if len(self.freq_hz) <= 8 else f", ... ({len(self.freq_hz)} total)"
        super().__init__(
            f"coherence below {threshold} over more than 20% of the band: "
            f"{bins}{more}")


def estimate_response(velocity: np.ndarray, torque: np.ndarray, dt: float,
                      band: tuple[float, float],
                      resolution: float = 0.25,
                      coherence_threshold: float = 0.6) -> ImpedanceCurve:
    """Empirical impedance Z = S_fv / S_vv from sampled velocity and torque.

    Welch-style estimate with a Hann window and 50 % overlap; the segment
    length is chosen as 1/(resolution * dt) samples, so the default
    0.25 Hz resolution uses 4 s segments at 1 kHz. Sharp resonances
    (bandwidth below the resolution) need a finer setting.

    Raises
    ------
    LowCoherenceError
        When more than 20 % of in-band bins fall below the coherence
        threshold, listing the offending bins.
    """
    velocity = np.asarray(velocity, dtype=float)
    torque = np.asarray(torque, dtype=float)
    if velocity.shape != torque.shape:
        raise ValueError("velocity and torque must have equal length")
    f_lo, f_hi = band
    if not 0 < f_lo < f_hi:
        raise ValueError(f"invalid band {band}")
    fs = 1.0 / dt
    nperseg = int(round(fs / resolution))
    if nperseg > len(velocity):
        raise ValueError(
            f"record too short: {len(velocity)} samples < one "
            f"{nperseg}-sample segment at resolution {resolution} Hz")
    noverlap = nperseg // 2
    freq, s_vv = signal.welch(velocity, fs=fs, window="hann",
                              nperseg=nperseg, noverlap=noverlap)
    _, s_vf = signal.csd(velocity, torque, fs=fs, window="hann",
                         nperseg=nperseg, noverlap=noverlap)
    _, coh = signal.coherence(velocity, torque, fs=fs, window="hann",
                              nperseg=nperseg, noverlap=noverlap)
    sel = (freq >= f_lo) & (freq <= f_hi)
    if not np.any(sel):
        raise ValueError(f"band {band} contains no spectral bins")
    z = s_vf[sel] / s_vv[sel]
    freq, coh = freq[sel], coh[sel]
    low = coh < coherence_threshold
    if np.count_nonzero(low) > 0.2 * len(coh):
        raise LowCoherenceError(freq[low], coh[low], coherence_threshold)
    return ImpedanceCurve.from_complex(freq, z, coherence=coh)


def resonance_prominence(curve: ImpedanceCurve,
                         band: tuple[float, float]) -> tuple[float, float]:
    """Peak frequency and its prominence over the points 1 Hz to each side.

    The peak is the in-band magnitude maximum; prominence is its dB excess
    over the larger of the magnitudes 1 Hz below and 1 Hz above, read off
    the curve with linear interpolation in (log f, dB).

    Returns
    -------
    (peak_hz, prominence_db)
    """
    f_lo, f_hi = band
    grid = curve.freq_hz
    if f_lo - 1.0 < grid[0] or f_hi + 1.0 > grid[-1]:
        raise ValueError(
            f"band {band} plus the 1 Hz margin exceeds the grid "
            f"[{grid[0]:.3g}, {grid[-1]:.3g}] Hz")
    sel = (grid >= f_lo) & (grid <= f_hi)
    if not np.any(sel):
        raise ValueError(f"band {band} contains no grid points")
    mag = np.where(sel, curve.mag_db, -np.inf)
    i = int(np.argmax(mag))
    peak_f, peak_db = grid[i], curve.mag_db[i]
    logf = np.log(grid)
    below = np.interp(np.log(peak_f - 1.0), logf, curve.mag_db)
    above = np.interp(np.log(peak_f + 1.0), logf, curve.mag_db)
    return float(peak_f), float(peak_db - max(below, above))
