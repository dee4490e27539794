"""Four-channel bilateral teleoperation loop and its transmitted impedance.

The handle (master) and tool (slave) devices exchange velocity and force
over four channels with gains C_1..C_4 plus local controllers C_m, C_s:

    f_sc = C_1 v_m^d + C_3 f_h^d - C_s v_s        (tool command)
    f_mc = C_m v_m + C_4 v_s - C_2 f_e            (handle command)

where the d superscript marks signals carried over the communication
link. The handle accelerates under (f_h - f_mc), the tool under
(f_sc + f_e); f_e is the spring reaction torque of the hammer carried by
the tool. With the preset gain structure (C_m = -C_4, C_s = C_1,
C_2 = C_3 = 1) and matched devices the loop is transparent: the
transmitted impedance equals device-plus-environment impedance exactly.

The delay T_d is the round-trip time and sits entirely on one side of the
link (forward channels by default); only the round-trip total affects the
transmitted impedance.

Simulations run on a 1 kHz sample grid. The continuous closed loop
(devices, hammer, controller integrators) is discretized exactly per step
with a first-order hold on the external and delayed inputs, so sampled
results match the continuous-domain frequency analysis to interpolation
accuracy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import expm

from .dynamics import HammerParams
from .excitation import TrackingOperator
from .identification import ImpedanceCurve
from .trace import Trace


@dataclass(frozen=True)
class DeviceParams:
    """Inertia (kg m^2) and viscous damping (N m s/rad) of one device."""

    inertia: float = 2e-3
    damping: float = 0.01

    def __post_init__(self):
        if not self.inertia > 0:
            raise ValueError(f"device inertia must be positive, got {self.inertia}")
        if self.damping < 0:
            raise ValueError(f"device damping must be non-negative, got {self.damping}")

    def impedance(self, s: np.ndarray) -> np.ndarray:
        return self.inertia * np.asarray(s, dtype=complex) + self.damping


@dataclass(frozen=True)
class PiGain:
    """Proportional-plus-integral gain acting on a velocity signal.

    ``PiGain(0.8, 10.0)`` encodes 0.8 + 10/s: 0.8 N m s/rad of damping
    plus 10 N m/rad of stiffness on the integrated (position) signal.
    """

    p: float
    i: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.p) and math.isfinite(self.i)):
            raise ValueError("gain parts must be finite")

    @classmethod
    def coerce(cls, value) -> "PiGain":
        if isinstance(value, cls):
            return value
        return cls(p=float(value))

    def __call__(self, s: np.ndarray) -> np.ndarray:
        """Evaluate p + i/s on the Laplace grid."""
        return self.p + self.i / np.asarray(s, dtype=complex)


@dataclass(frozen=True)
class ControllerGains:
    """The six four-channel gains plus the round-trip delay.

    c2 and c3 are plain scalars (force channels); the others are PiGain
    pairs. ``delay`` must be an integer multiple of the loop step.
    ``delay_on`` selects which side of the link carries it ("forward":
    handle-to-tool channels, "feedback": tool-to-handle); the transmitted
    impedance depends only on the round-trip total.
    """

    c_m: PiGain
    c_s: PiGain
    c1: PiGain
    c2: float
    c3: float
    c4: PiGain
    delay: float = 0.0
    delay_on: str = "forward"

    def __post_init__(self):
        object.__setattr__(self, "c_m", PiGain.coerce(self.c_m))
        object.__setattr__(self, "c_s", PiGain.coerce(self.c_s))
        object.__setattr__(self, "c1", PiGain.coerce(self.c1))
        object.__setattr__(self, "c4", PiGain.coerce(self.c4))
        if self.delay < 0:
            raise ValueError(f"delay must be non-negative, got {self.delay}")
        if self.delay_on not in ("forward", "feedback"):
            raise ValueError(f"delay_on must be 'forward' or 'feedback', got {self.delay_on!r}")

    def delay_steps(self, dt: float) -> int:
        steps = self.delay / dt
        if abs(steps - round(steps)) > 1e-9:
            raise ValueError(
                f"delay {self.delay} s is not an integer multiple of the "
                f"loop step {dt} s")
        return int(round(steps))


def controller_preset(preset: int) -> ControllerGains:
    """Gain rows of the three tuned controllers.

    1: transparency-tuned, no delay. 2: same gains with a 40 ms
    round-trip delay. 3: force feedback disabled (C_m = C_2 = C_4 = 0).
    """
    w = PiGain(0.8, 10.0)
    if preset == 1:
        return ControllerGains(c_m=w, c_s=w, c1=w, c2=1.0, c3=1.0,
                               c4=PiGain(-0.8, -10.0))
    if preset == 2:
        return ControllerGains(c_m=w, c_s=w, c1=w, c2=1.0, c3=1.0,
                               c4=PiGain(-0.8, -10.0), delay=0.040)
    if preset == 3:
        zero = PiGain(0.0, 0.0)
        return ControllerGains(c_m=zero, c_s=w, c1=w, c2=0.0, c3=1.0, c4=zero)
    raise ValueError(f"unknown controller preset {preset!r}; use 1, 2 or 3")


#: Spring stiffness standing in for the rigid extension inside the loop;
#: puts its mode near 313 Hz, far above the band of interest.
RIGID_STIFFNESS = 1e4


class SimulationDiverged(RuntimeError):
    """The closed loop left the finite range; reports the first bad step."""

    def __init__(self, step: int, dt: float):
        self.step = step
        super().__init__(
            f"teleoperation loop diverged at step {step} (t = {step * dt:.3f} s)")


@lru_cache(maxsize=128)
def _loop_matrices(handle, tool, hammer, gains, dt, operator_gains, delay_steps):
    """Continuous A, B for the closed loop and their exact FOH discretization.

    State: [v_m, v_s, v_flx, dx, Sm, S4, S1, Ss, (Sop)].
    Inputs: [w] when undelayed, [w, d1, d2] with a delay line, where w is
    the external drive (f_h or desired velocity) and (d1, d2) are the two
    delayed link signals. Returns (Phi, G0, G1, n_states).
    """
    mm, bm = handle.inertia, handle.damping
    ms, bs = tool.inertia, tool.damping
    if hammer.rigid:
        mh, bh, kh = hammer.m, hammer.b, RIGID_STIFFNESS
    else:
        mh, bh, kh = hammer.m, hammer.b, hammer.k
    g = gains
    nx = 9 if operator_gains is not None else 8
    delayed = delay_steps > 0
    nu = 3 if delayed else 1
    A = np.zeros((nx, nx))
    B = np.zeros((nx, nu))
    iv_m, iv_s, iv_f, idx = 0, 1, 2, 3
    ism, is4, is1, iss = 4, 5, 6, 7

    # f_e = -kh*dx appears in the tool dynamics and the C_2 channel
    # handle: Mm dv_m = f_h - f_mc - Bm v_m
    def add_fmc(row, sign, vs_delayed):
        A[row, iv_m] += sign * g.c_m.p
        A[row, ism] += sign * g.c_m.i
        if vs_delayed:
            B[row, 1] += sign * g.c4.p
            A[row, is4] += sign * g.c4.i
            B[row, 2] += sign * (-g.c2)          # delayed f_e input
        else:
            A[row, iv_s] += sign * g.c4.p
            A[row, is4] += sign * g.c4.i
            A[row, idx] += sign * (-g.c2) * (-kh)

    def add_fsc(row, sign, vm_delayed):
        if vm_delayed:
            B[row, 1] += sign * g.c1.p
            B[row, 2] += sign * g.c3             # delayed f_h input
            A[row, is1] += sign * g.c1.i
        else:
            A[row, iv_m] += sign * g.c1.p
            A[row, is1] += sign * g.c1.i
            # undelayed f_h feedthrough handled below
        A[row, iv_s] += sign * (-g.c_s.p)
        A[row, iss] += sign * (-g.c_s.i)

    fwd_delay = delayed and g.delay_on == "forward"
    fbk_delay = delayed and g.delay_on == "feedback"

    def add_fh(row, coef):
        # external handle force: direct input or operator feedback law
        if operator_gains is None:
            B[row, 0] += coef
        else:
            kp, ki = operator_gains
            B[row, 0] += coef * kp               # w = desired velocity
            A[row, iv_m] += -coef * kp
            A[row, 8] += coef * ki

    # handle device
    add_fh(iv_m, 1.0 / mm)
    add_fmc(iv_m, -1.0 / mm, vs_delayed=fbk_delay)
    A[iv_m, iv_m] += -bm / mm
    # tool device
    add_fsc(iv_s, 1.0 / ms, vm_delayed=fwd_delay)
    if not fwd_delay:
        add_fh(iv_s, g.c3 / ms)
    A[iv_s, idx] += -kh / ms                     # + f_e
    A[iv_s, iv_s] += -bs / ms
    # hammer
    A[iv_f, iv_f] = -bh / mh
    A[iv_f, idx] = kh / mh
    A[idx, iv_s] = 1.0
    A[idx, iv_f] = -1.0
    # controller integrators
    A[ism, iv_m] = 1.0
    A[is4, iv_s] = 1.0 if not fbk_delay else 0.0
    if fbk_delay:
        B[is4, 1] = 1.0
    A[is1, iv_m] = 1.0 if not fwd_delay else 0.0
    if fwd_delay:
        B[is1, 1] = 1.0
    A[iss, iv_s] = 1.0
    # operator error integral
    if operator_gains is not None:
        B[8, 0] = 1.0
        A[8, iv_m] = -1.0

    # exact step map with first-order hold on the inputs
    big = np.zeros((nx + 2 * nu, nx + 2 * nu))
    big[:nx, :nx] = A
    big[:nx, nx:nx + nu] = B
    big[nx:nx + nu, nx + nu:] = np.eye(nu)
    eb = expm(big * dt)
    phi = eb[:nx, :nx]
    g0 = eb[:nx, nx:nx + nu]          # weight of u held at start value
    g1 = eb[:nx, nx + nu:]            # weight of the in-step ramp (u1-u0)/dt
    return phi, g0, g1 / dt, nx


def simulate_teleop(handle: DeviceParams, tool: DeviceParams,
                    hammer: HammerParams, gains: ControllerGains,
                    f_h, dt: float = 1e-3) -> Trace:
    """Run the teleoperation loop driven by the operator force.

    Parameters
    ----------
    f_h : array or TrackingOperator
        Operator handle torque per sample (open loop), or a
        TrackingOperator closing the loop on the measured handle
        velocity; its desired-velocity series sets the run length.
    dt : float
        Loop step; the delay must be an integer multiple of it.

    Returns
    -------
    Trace
        Channels v_m, v_s, v_flx (rad/s), dx (rad), f_h, f_e, f_mc, f_sc
        (N m), and v_m_fwd, the velocity signal entering the tool-side
        C_1 channel (the delay-line output under forward delay).

    Raises
    ------
    SimulationDiverged
        When the state leaves the finite range, naming the first step.
    """
    operator = None
    if isinstance(f_h, TrackingOperator):
        operator = f_h
        w = operator.v_desired
        op_gains = (operator.model.kp, operator.model.ki)
    else:
        w = np.asarray(f_h, dtype=float)
        op_gains = None
        bad = np.flatnonzero(~np.isfinite(w))
        if bad.size:
            raise ValueError(f"f_h contains a non-finite sample at index {bad[0]}")
    n = len(w)
    if n < 2:
        raise ValueError("need at least two samples")
    lag = gains.delay_steps(dt)
    phi, g0, g1, nx = _loop_matrices(handle, tool, hammer, gains, dt,
                                     op_gains, lag)

    states = np.zeros((n, nx))
    x = np.zeros(nx)
    kh = RIGID_STIFFNESS if hammer.rigid else hammer.k
    fh_hist = np.zeros(n)           # realized handle force per sample

    def fh_at(i, xi):
        if op_gains is None:
            return w[i]
        kp, ki = op_gains
        return kp * (w[i] - xi[0]) + ki * xi[8]

    def delayed_pair(i):
        # (d1, d2) at sample i given the recorded history; zero pre-history
        j = i - lag
        if j < 0:
            return 0.0, 0.0
        if gains.delay_on == "forward":
            return states[j, 0], fh_hist[j]
        return states[j, 1], -kh * states[j, 3]

    fh_hist[0] = fh_at(0, x)
    for i in range(n - 1):
        states[i] = x
        fh_hist[i] = fh_at(i, x)
        if lag > 0:
            d1a, d2a = delayed_pair(i)
            d1b, d2b = delayed_pair(i + 1)
            u0 = np.array([w[i], d1a, d2a])
            u1 = np.array([w[i + 1], d1b, d2b])
        else:
            u0 = np.array([w[i]])
            u1 = np.array([w[i + 1]])
        x = phi @ x + g0 @ u0 + g1 @ (u1 - u0)
        if not np.isfinite(x).all() or np.max(np.abs(x)) > 1e12:
            raise SimulationDiverged(i + 1, dt)
    states[n - 1] = x
    fh_hist[n - 1] = fh_at(n - 1, x)

    v_m, v_s, v_flx, dx = states[:, 0], states[:, 1], states[:, 2], states[:, 3]
    f_e = -kh * dx
    if lag > 0 and gains.delay_on == "forward":
        vm_fwd = np.concatenate([np.zeros(lag), v_m[:-lag]]) if lag < n else np.zeros(n)
        fh_fwd = np.concatenate([np.zeros(lag), fh_hist[:-lag]]) if lag < n else np.zeros(n)
    else:
        vm_fwd, fh_fwd = v_m, fh_hist
    if lag > 0 and gains.delay_on == "feedback":
        vs_in = np.concatenate([np.zeros(lag), v_s[:-lag]]) if lag < n else np.zeros(n)
        fe_in = np.concatenate([np.zeros(lag), f_e[:-lag]]) if lag < n else np.zeros(n)
    else:
        vs_in, fe_in = v_s, f_e
    g = gains
    f_sc = (g.c1.p * vm_fwd + g.c1.i * states[:, 6] + g.c3 * fh_fwd
            - g.c_s.p * v_s - g.c_s.i * states[:, 7])
    f_mc = (g.c_m.p * v_m + g.c_m.i * states[:, 4]
            + g.c4.p * vs_in + g.c4.i * states[:, 5] - g.c2 * fe_in)
    units = {"v_m": "rad/s", "v_s": "rad/s", "v_flx": "rad/s", "dx": "rad",
             "f_h": "N·m", "f_e": "N·m", "f_mc": "N·m", "f_sc": "N·m",
             "v_m_fwd": "rad/s"}
    return Trace(dt=dt, channels={
        "v_m": v_m, "v_s": v_s, "v_flx": v_flx, "dx": dx,
        "f_h": fh_hist, "f_e": f_e, "f_mc": f_mc, "f_sc": f_sc,
        "v_m_fwd": vm_fwd}, units=units)


def transmitted_impedance(gains: ControllerGains, handle: DeviceParams,
                          tool: DeviceParams, environment,
                          freq_hz: np.ndarray,
                          loop_rate_hz: float = 1000.0) -> ImpedanceCurve:
    """Impedance f_h / v_m felt at the handle through the closed loop.

    Solves the linear two-port per grid point with exp(-j w T_d) on the
    delayed link. ``environment`` is a ZeModel, an ImpedanceCurve
    (interpolated onto the grid), or any callable mapping Laplace points
    to complex impedance.

    Raises
    ------
    ValueError
        For grid points outside (0, Nyquist of the loop rate), or if the
        loop is singular at some frequency (named in the message).
    """
    freq_hz = np.asarray(freq_hz, dtype=float)
    if freq_hz.size == 0:
        raise ValueError("frequency grid is empty")
    nyq = loop_rate_hz / 2.0
    if np.any(freq_hz <= 0) or np.any(freq_hz >= nyq):
        raise ValueError(f"grid must lie inside (0, {nyq}) Hz")
    s = 1j * 2.0 * np.pi * freq_hz
    if isinstance(environment, ImpedanceCurve):
        ze = _interp_curve(environment, freq_hz)
    else:
        ze = np.asarray(environment(s), dtype=complex)
    zm = handle.impedance(s)
    zs = tool.impedance(s)
    g = gains
    cm, cs, c1, c4 = g.c_m(s), g.c_s(s), g.c1(s), g.c4(s)
    e = np.exp(-s * g.delay)
    zt = zs + cs + ze
    num = (zm + cm) * zt + e * c1 * (c4 + g.c2 * ze)
    den = zt - e * g.c3 * (c4 + g.c2 * ze)
    scale = np.abs(zt) + np.abs(c4) + g.c2 * np.abs(ze) + 1e-300
    bad = np.abs(den) < 1e-12 * scale
    if np.any(bad):
        raise ValueError(
            f"loop is singular at {freq_hz[bad][0]:.6g} Hz")
    return ImpedanceCurve.from_complex(freq_hz, num / den)


def _interp_curve(curve: ImpedanceCurve, freq_hz: np.ndarray) -> np.ndarray:
    if freq_hz[0] < curve.freq_hz[0] or freq_hz[-1] > curve.freq_hz[-1]:
        raise ValueError("requested grid exceeds the environment curve")
    logf = np.log(curve.freq_hz)
    mag = np.interp(np.log(freq_hz), logf, curve.mag_db)
    ph = np.interp(np.log(freq_hz), logf, np.unwrap(np.deg2rad(curve.phase_deg)))
    return 10.0 ** (mag / 20.0) * np.exp(1j * ph)


def preset_for_condition(condition: str) -> int:
    """Map a feedback-condition code to its controller preset.

    FF (force+vision) and NV (no vision) run controller 1, DL (delay)
    controller 2, NF (no force feedback) controller 3.
    """
    table = {"FF": 1, "NV": 1, "DL": 2, "NF": 3}
    try:
        return table[condition.upper()]
    except KeyError:
        raise ValueError(
            f"unknown feedback condition {condition!r}; expected one of "
            f"{sorted(table)}") from None
