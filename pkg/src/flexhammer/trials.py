"""Strike segmentation, per-strike dependent measures, and aggregation.

Each trial contributes the peak input velocity, the peak hammer velocity,
their ratio (the gain), and the excitation frequency extracted from the
input reversal timing. A condition is summarized by the medians over its
k highest-gain trials.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np


@dataclass(frozen=True)
class StrikeMetrics:
    """Dependent measures of one strike."""

    vhat_in: float      # peak input velocity, rad/s
    vhat: float         # peak hammer velocity, rad/s
    gain: float         # vhat / vhat_in
    freq_hz: float      # excitation frequency from the reversal timing

    def __post_init__(self):
        if not self.vhat_in > 0:
            raise ValueError("peak input velocity must be positive")
        if not self.gain > 0:
            raise ValueError("gain must be positive")
        if not self.freq_hz > 0:
            raise ValueError("excitation frequency must be positive")


@dataclass(frozen=True)
class ConditionSummary:
    """Medians over the selected best trials of one condition."""

    median_vhat: float
    median_gain: float
    median_freq_hz: float
    n_used: int
    n_discarded: int
    shortfall: bool     # fewer valid trials than requested

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


class UnextractableStrike(ValueError):
    """The segment does not yield valid dependent measures."""


def segment_strikes(v_in: np.ndarray, threshold_frac: float = 0.05
                    ) -> list[tuple[int, int]]:
    """Locate strike segments in a continuous input-velocity channel.

    A sample is active when |v_in| exceeds ``threshold_frac`` of the
    global |v_in| maximum. Active runs separated by gaps shorter than the
    shorter neighbouring run are merged (the brief pause at the motion
    reversal), and each merged run is kept only if it contains a
    min-then-max swing exceeding the threshold.

    Returns
    -------
    list of (start, stop)
        Half-open index ranges, ordered and non-overlapping. Empty when
        nothing exceeds the threshold.
    """
    v_in = np.asarray(v_in, dtype=float)
    if not np.all(np.isfinite(v_in)):
        raise ValueError("v_in contains non-finite samples")
    if len(v_in) == 0:
        return []
    peak = np.max(np.abs(v_in))
    if peak == 0.0:
        return []
    thr = threshold_frac * peak
    active = np.abs(v_in) > thr
    runs = _runs(active)
    if not runs:
        return []
    merged = [runs[0]]
    for start, stop in runs[1:]:
        p_start, p_stop = merged[-1]
        gap = start - p_stop
        if gap < min(p_stop - p_start, stop - start):
            merged[-1] = (p_start, stop)
        else:
            merged.append((start, stop))
    out = []
    for start, stop in merged:
        seg = v_in[start:stop]
        if seg.min() < -thr and seg.max() > thr and np.argmin(seg) < np.argmax(seg):
            out.append((start, stop))
    return out


def _runs(mask: np.ndarray) -> list[tuple[int, int]]:
    idx = np.flatnonzero(np.diff(np.concatenate(([False], mask, [False]))))
    return list(zip(idx[0::2], idx[1::2]))


def strike_metrics(v_in: np.ndarray, v_hammer: np.ndarray,
                   dt: float) -> StrikeMetrics:
    """Dependent measures of one aligned strike segment.

    The hammer peak is its maximum over the segment extended by half an
    excitation period (the driven peak may trail the input support); the
    input peak is taken before the hammer peak. The excitation frequency
    is 1/(2 (t_max - t_min)) from the input extrema.

    Raises
    ------
    UnextractableStrike
        When the reversal timing or the input peak is degenerate; such
        trials are discarded by the caller.
    """
    v_in = np.asarray(v_in, dtype=float)
    v_hammer = np.asarray(v_hammer, dtype=float)
    if len(v_in) < 3:
        raise UnextractableStrike("segment too short")
    i_min = int(np.argmin(v_in))
    i_max = int(np.argmax(v_in))
    half_period = (i_max - i_min) * dt
    if half_period <= 0:
        raise UnextractableStrike(
            "non-positive half-period: input maximum precedes the minimum")
    freq = 1.0 / (2.0 * half_period)
    # window for the hammer peak: segment plus half a period of tail
    tail = min(len(v_hammer), len(v_in) + int(round(0.5 / freq / dt)))
    i_peak = int(np.argmax(v_hammer[:tail]))
    vhat = float(v_hammer[i_peak])
    vhat_in = float(np.max(v_in[:max(i_peak, 1) + 1]))
    if vhat_in <= 0:
        raise UnextractableStrike("no positive input peak before the hammer peak")
    if vhat <= 0:
        raise UnextractableStrike("no positive hammer peak")
    return StrikeMetrics(vhat_in=vhat_in, vhat=vhat, gain=vhat / vhat_in,
                         freq_hz=freq)


def summarize_condition(metrics: list[StrikeMetrics], k: int = 10,
                        n_discarded: int = 0) -> ConditionSummary:
    """Median measures over the k highest-gain trials.

    Uses all trials (flagged as a shortfall) when fewer than k are valid.
    Ties in the gain ranking break toward the earlier trial.
    """
    if not metrics:
        raise ValueError("no valid trials to summarize")
    order = sorted(range(len(metrics)),
                   key=lambda i: (-metrics[i].gain, i))[:k]
    chosen = [metrics[i] for i in order]
    return ConditionSummary(
        median_vhat=float(np.median([m.vhat for m in chosen])),
        median_gain=float(np.median([m.gain for m in chosen])),
        median_freq_hz=float(np.median([m.freq_hz for m in chosen])),
        n_used=len(chosen),
        n_discarded=n_discarded,
        shortfall=len(metrics) < k,
    )


def metrics_to_csv(metrics: list[StrikeMetrics], path_or_buf) -> None:
    """One row per strike: trial_id, vhat_in, vhat, gain, freq_hz."""
    lines = ["trial_id,vhat_in,vhat,gain,freq_hz"]
    for i, m in enumerate(metrics):
        lines.append(",".join([str(i)] + [
            format(x, ".12g") for x in (m.vhat_in, m.vhat, m.gain, m.freq_hz)]))
    text = "\n".join(lines) + "\n"
    if hasattr(path_or_buf, "write"):
        path_or_buf.write(text)
    else:
        with open(path_or_buf, "w") as fh:
            fh.write(text)


def metrics_from_csv(path_or_buf) -> list[StrikeMetrics]:
    if hasattr(path_or_buf, "read"):
        text = path_or_buf.read()
    else:
        with open(path_or_buf) as fh:
            text = fh.read()
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if lines[0] != "trial_id,vhat_in,vhat,gain,freq_hz":
        raise ValueError("unexpected metrics CSV header")
    out = []
    for ln in lines[1:]:
        _, vhat_in, vhat, gain, freq = ln.split(",")
        out.append(StrikeMetrics(float(vhat_in), float(vhat),
                                 float(gain), float(freq)))
    return out
