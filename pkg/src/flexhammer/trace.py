"""Uniformly sampled multichannel time series and its CSV form."""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np


@dataclass
class Trace:
    """Fixed-step multichannel recording.

    Parameters
    ----------
    dt : float
        Sample step in seconds, > 0.
    channels : dict
        Maps channel name to a 1-D float array. All channels must have
        equal length.
    units : dict
        Maps channel name to a unit string (e.g. "rad/s"). Channels
        without an entry are exported with unit "-".
    """

    dt: float
    channels: dict[str, np.ndarray] = field(default_factory=dict)
    units: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        lengths = {name: len(v) for name, v in self.channels.items()}
        if len(set(lengths.values())) > 1:
            raise ValueError(f"channel lengths differ: {lengths}")
        self.channels = {k: np.asarray(v, dtype=float) for k, v in self.channels.items()}

    def __len__(self):
        if not self.channels:
            return 0
        return len(next(iter(self.channels.values())))

    def __contains__(self, name):
        return name in self.channels

    def __getitem__(self, name) -> np.ndarray:
        return self.channels[name]

    @property
    def time(self) -> np.ndarray:
        """Sample times in seconds, starting at 0."""
        return np.arange(len(self)) * self.dt

    def add(self, name: str, values: np.ndarray, unit: str = "-") -> "Trace":
        """Add a channel in place; name must be new, length must match."""
        values = np.asarray(values, dtype=float)
        if name in self.channels:
            raise ValueError(f"channel {name!r} already present")
        if self.channels and len(values) != len(self):
            raise ValueError(
                f"channel {name!r} has length {len(values)}, expected {len(self)}"
            )
        self.channels[name] = values
        self.units[name] = unit
        return self

    def to_csv(self, path_or_buf) -> None:
        """Write the trace as CSV: time_s first, then one column per channel.

        Header cells carry the unit in parentheses, e.g. ``v_out (rad/s)``.
        """
        names = list(self.channels)
        header = ",".join(
            ["time_s"] + [f"{n} ({self.units.get(n, '-')})" for n in names]
        )
        data = np.column_stack([self.time] + [self.channels[n] for n in names])
        if hasattr(path_or_buf, "write"):
            _write_csv(path_or_buf, header, data)
        else:
            with open(path_or_buf, "w") as fh:
                _write_csv(fh, header, data)

    @classmethod
    def from_csv(cls, path_or_buf) -> "Trace":
        """Read a trace written by :meth:`to_csv`."""
        if hasattr(path_or_buf, "read"):
            text = path_or_buf.read()
        else:
            with open(path_or_buf) as fh:
                text = fh.read()
        lines = [ln for ln in text.splitlines() if ln.strip()]
        cols = lines[0].split(",")
        if cols[0] != "time_s":
            raise ValueError("first CSV column must be time_s")
        data = np.loadtxt(io.StringIO("\n".join(lines[1:])), delimiter=",", ndmin=2)
        t = data[:, 0]
        if len(t) < 2:
            raise ValueError("need at least two samples to infer dt")
        dt = float(t[1] - t[0])
        channels, units = {}, {}
        for j, col in enumerate(cols[1:], start=1):
            name, unit = _split_header(col)
            channels[name] = data[:, j]
            units[name] = unit
        return cls(dt=dt, channels=channels, units=units)


def _split_header(cell: str) -> tuple[str, str]:
    cell = cell.strip()
    if cell.endswith(")") and "(" in cell:
        name, _, unit = cell.rpartition("(")
        return name.strip(), unit[:-1]
    return cell, "-"


def _write_csv(fh, header: str, data: np.ndarray) -> None:
    fh.write(header + "\n")
    for row in data:
        fh.write(",".join(format(x, ".12g") for x in row) + "\n")
