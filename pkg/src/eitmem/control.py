"""Control-field schedules: mixing angle theta(t), its rate, and Omega(t).

The control strength is parametrized through cot(theta) = Omega/(g sqrt(N)).
All schedules keep cot(theta) strictly positive: the control field is reduced
to a small value, never switched fully off, so theta stays below pi/2 and the
polariton remains well defined at every instant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ConfigError
from .model import MediumParams

SCHEDULE_KINDS = ("constant", "tanh_profile", "tabulated")

# Tabulated schedules must be dense enough that piecewise-linear
# interpolation of theta is already accurate; checked at construction.
TABULATED_DENSITY_TOL = 1e-6  # rad


class ControlSample(NamedTuple):
    theta: float  # rad
    theta_dot: float  # rad/s
    omega: float  # rad/s


def theta_from_omega(omega: float, g: float, n_atoms: float) -> float:
    """Mixing angle arctan(g sqrt(N)/Omega), in (0, pi/2)."""
    if omega <= 0:
        raise ConfigError(
            f"omega must be positive (got {omega}); the control field is never "
            f"turned fully off"
        )
    return math.atan2(g * math.sqrt(n_atoms), omega)


def omega_from_theta(theta: float, g: float, n_atoms: float) -> float:
    """Inverse of theta_from_omega on (0, pi/2)."""
    if not 0.0 < theta < 0.5 * math.pi:
        raise ConfigError(f"theta must lie in (0, pi/2), got {theta}")
    return g * math.sqrt(n_atoms) / math.tan(theta)


def _sech2(y: float) -> float:
    """sech^2(y), overflow-safe for large |y|."""
    e = math.exp(-2.0 * abs(y))
    return 4.0 * e / (1.0 + e) ** 2


@dataclass(frozen=True)
class ControlSchedule:
    """One control-field time profile.

    kind 'constant' holds omega fixed. kind 'tanh_profile' is the smooth
    off/on switch

        cot(theta) = scale*(1 - 0.5*tanh(s*(t-t1)) + 0.5*tanh(s*(t-t2))) + floor

    with steepness s; the plateau before t1 and after t2 has cot(theta)
    approach scale + floor, the window between them has cot(theta) approach
    floor. kind 'tabulated' interpolates (time, theta) samples with a
    monotone cubic.
    """

    kind: str
    omega: float = 0.0  # rad/s, constant kind only
    scale: float = 5.0e-4  # cot(theta) plateau height, tanh kind
    floor: float = 1.0e-5  # cot(theta) minimum, must stay positive
    steepness: float = 1.0e5  # 1/s
    t1: float = 30.0e-6  # s, switch-off center
    t2: float = 125.0e-6  # s, switch-on center
    times: tuple[float, ...] = ()  # s, tabulated knots
    thetas: tuple[float, ...] = ()  # rad, tabulated values

    def __post_init__(self):
        if self.kind not in SCHEDULE_KINDS:
            raise ConfigError(f"unknown schedule kind {self.kind!r}, expected one of {SCHEDULE_KINDS}")
        if self.kind == "constant":
            if self.omega <= 0:
                raise ConfigError(
                    f"constant schedule needs omega > 0 (got {self.omega}); the "
                    f"control field is reduced to small values, never to zero"
                )
        elif self.kind == "tanh_profile":
            if self.scale <= 0:
                raise ConfigError(f"scale must be positive, got {self.scale}")
            if self.floor <= 0:
                raise ConfigError(
                    f"floor must be positive (got {self.floor}); a zero floor turns "
                    f"the control field fully off and theta reaches pi/2"
                )
            if self.steepness <= 0:
                raise ConfigError(f"steepness must be positive, got {self.steepness}")
            if not self.t2 > self.t1:
                raise ConfigError(f"t2 must exceed t1, got t1={self.t1}, t2={self.t2}")
        else:
            self._init_tabulated()

    def _init_tabulated(self):
        if len(self.times) != len(self.thetas):
            raise ConfigError("times and thetas must have equal length")
        if len(self.times) < 2:
            raise ConfigError("tabulated schedule needs at least 2 samples")
        t = np.asarray(self.times, dtype=float)
        th = np.asarray(self.thetas, dtype=float)
        if not np.all(np.diff(t) > 0):
            raise ConfigError("tabulated times must be strictly increasing")
        if np.any(th <= 0) or np.any(th >= 0.5 * math.pi):
            raise ConfigError("tabulated thetas must lie strictly inside (0, pi/2)")
        from scipy.interpolate import PchipInterpolator

        interp = PchipInterpolator(t, th, extrapolate=False)
        # Density check: a midpoint refinement must agree with straight
        # linear interpolation, otherwise the table undersamples theta(t).
        mid = 0.5 * (t[:-1] + t[1:])
        linear = 0.5 * (th[:-1] + th[1:])
        gap = np.max(np.abs(np.asarray(interp(mid)) - linear))
        if gap > TABULATED_DENSITY_TOL:
            raise ConfigError(
                f"tabulated schedule too sparse: midpoint interpolation differs "
                f"from linear by {gap:.3e} rad (limit {TABULATED_DENSITY_TOL:.1e}); "
                f"add samples where theta bends"
            )
        object.__setattr__(self, "_interp", interp)
        object.__setattr__(self, "_interp_dot", interp.derivative())

    def _cot_theta(self, t: float) -> tuple[float, float]:
        """tanh profile: (x, dx/dt) with x = cot(theta)."""
        s = self.steepness
        x = (
            self.scale
            * (1.0 - 0.5 * math.tanh(s * (t - self.t1)) + 0.5 * math.tanh(s * (t - self.t2)))
            + self.floor
        )
        xdot = self.scale * s * (-0.5 * _sech2(s * (t - self.t1)) + 0.5 * _sech2(s * (t - self.t2)))
        return x, xdot

    def eval(self, params: MediumParams, t: float) -> ControlSample:
        """Sample (theta, theta_dot, omega) at time t."""
        if self.kind == "constant":
            theta = theta_from_omega(self.omega, params.g, params.n_atoms)
            return ControlSample(theta, 0.0, self.omega)
        if self.kind == "tanh_profile":
            x, xdot = self._cot_theta(t)
            theta = math.atan(1.0 / x)  # x > 0 always, so theta in (0, pi/2)
            theta_dot = -xdot / (1.0 + x * x)
            return ControlSample(theta, theta_dot, params.g_root_n * x)
        # tabulated: hold the endpoint values outside the table
        tc = min(max(t, self.times[0]), self.times[-1])
        theta = float(self._interp(tc))
        theta_dot = float(self._interp_dot(tc)) if self.times[0] < t < self.times[-1] else 0.0
        return ControlSample(theta, theta_dot, omega_from_theta(theta, params.g, params.n_atoms))

    def breakpoints(self) -> tuple[float, ...]:
        """Times where the profile changes character; quadrature splits here."""
        if self.kind == "constant":
            return ()
        if self.kind == "tanh_profile":
            halfwidth = 5.0 / self.steepness
            pts = (
                self.t1 - halfwidth,
                self.t1,
                self.t1 + halfwidth,
                self.t2 - halfwidth,
                self.t2,
                self.t2 + halfwidth,
            )
            return tuple(sorted(set(pts)))
        return tuple(self.times)

    def turn_time(self) -> float:
        """Characteristic switching duration, s. Infinite for constant profiles."""
        if self.kind == "constant":
            return math.inf
        if self.kind == "tanh_profile":
            return 1.0 / self.steepness
        t = np.asarray(self.times)
        th = np.asarray(self.thetas)
        dense = np.linspace(t[0], t[-1], 20 * len(t))
        rate = np.max(np.abs(np.asarray(self._interp_dot(dense))))
        swing = float(np.max(th) - np.min(th))
        if rate == 0.0 or swing == 0.0:
            return math.inf
        return swing / float(rate)

    def sample_times(self) -> np.ndarray:
        """Representative times covering plateaus and switches, for pre-run scans."""
        if self.kind == "constant":
            return np.array([0.0])
        if self.kind == "tanh_profile":
            w = 8.0 / self.steepness
            pts = np.concatenate(
                [
                    np.linspace(self.t1 - w, self.t1 + w, 33),
                    np.linspace(self.t2 - w, self.t2 + w, 33),
                    np.array([0.0, 0.5 * (self.t1 + self.t2), self.t2 + 1.5 * w]),
                ]
            )
            return np.unique(pts[pts >= 0.0])
        t = np.asarray(self.times)
        return np.unique(np.concatenate([t, 0.5 * (t[:-1] + t[1:])]))


def eval_schedule(schedule: ControlSchedule, params: MediumParams, t: float) -> ControlSample:
    return schedule.eval(params, t)


def default_storage_schedule() -> ControlSchedule:
    """The shipped off/on switch: plateau cot(theta) 5.1e-4, window floor 1e-5."""
    return ControlSchedule(kind="tanh_profile")
