"""Brute-force integrator for the reduced three-field system.

This is the validation path: the probe envelope advects at c while the two
atomic coherences respond locally,

    (d/dt + c d/dz) E = i g N sigma_ba
    d sigma_ba / dt = -(i(delta+delta_p) + gamma_ba) sigma_ba + i g E + i Omega sigma_bc
    d sigma_bc / dt = -(i delta_p + gamma_bc) sigma_bc + i Omega* sigma_ba

No adiabatic elimination, no closed-form coefficients: this module must stay
independent of the spectral engine so the two can check each other. It only
shares the grid containers, the parameter record, and the control schedule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .control import ControlSchedule
from .errors import ConfigError, InvalidComparisonError, SimulationError
from .grids import FieldGrid, GridSpec
from .model import MediumParams

SCHEMES = ("splitting_spectral_advection", "explicit_upwind")
STIFF_HANDLERS = ("exact_exponential", "implicit")


@dataclass(frozen=True)
class OracleState:
    """All three fields at one instant."""

    e_field: FieldGrid
    sigma_ba: FieldGrid
    sigma_bc: FieldGrid
    t: float  # s

    def __post_init__(self):
        if not (self.e_field.grid == self.sigma_ba.grid == self.sigma_bc.grid):
            raise ConfigError("oracle fields must share one grid")


@dataclass(frozen=True)
class OracleConfig:
    dt: float  # s
    scheme: str = "splitting_spectral_advection"
    stiff_handling: str = "exact_exponential"
    c_scale: float = 1.0  # rescales the advection speed, must be <= 1
    snapshot_dt: float | None = None  # s, defaults to horizon/10

    def __post_init__(self):
        if self.dt <= 0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}, expected one of {SCHEMES}")
        if self.stiff_handling not in STIFF_HANDLERS:
            raise ConfigError(
                f"unknown stiff_handling {self.stiff_handling!r}, expected one of {STIFF_HANDLERS}"
            )
        if not 0.0 < self.c_scale <= 1.0:
            raise ConfigError(f"c_scale must lie in (0, 1], got {self.c_scale}")
        if self.snapshot_dt is not None and self.snapshot_dt <= 0:
            raise ConfigError(f"snapshot_dt must be positive, got {self.snapshot_dt}")


def _substeps(horizon: float, dt: float, snapshot_dt: float) -> tuple[int, int]:
    n_steps = int(round(horizon / dt))
    if n_steps < 1 or abs(n_steps * dt - horizon) > 1e-9 * horizon:
        raise ConfigError(f"dt {dt} must divide the horizon {horizon} evenly")
    per_snap = int(round(snapshot_dt / dt))
    if per_snap < 1 or abs(per_snap * dt - snapshot_dt) > 1e-9 * snapshot_dt:
        raise ConfigError(f"dt {dt} must divide snapshot_dt {snapshot_dt} evenly")
    if n_steps % per_snap != 0:
        raise ConfigError(
            f"snapshot_dt {snapshot_dt} must divide the horizon {horizon} evenly"
        )
    return n_steps, per_snap


def _coupling_matrix(params: MediumParams, omega: float) -> np.ndarray:
    d_ba = complex(params.gamma_ba, params.delta + params.delta_p)
    d_bc = complex(params.gamma_bc, params.delta_p)
    gn = params.g * params.n_atoms
    return np.array(
        [
            [0.0, 1j * gn, 0.0],
            [1j * params.g, -d_ba, 1j * omega],
            [0.0, 1j * np.conj(omega), -d_bc],
        ],
        dtype=complex,
    )


def integrate_reduced(
    params: MediumParams,
    grid: GridSpec,
    initial: OracleState,
    schedule: ControlSchedule,
    horizon: float,
    cfg: OracleConfig,
) -> list[OracleState]:
    """March the reduced system and return states at snapshot cadence.

    The default scheme treats the advection term by an exact spectral phase
    over each half step and the local atomic-coupling block by the exact
    matrix exponential of its generator frozen at the midpoint, composed as
    a symmetric (second order) splitting. The alternative explicit upwind
    scheme is first order and CFL limited; it exists as a cross-check.
    """
    if initial.e_field.grid != grid:
        raise ConfigError("initial state grid does not match the run grid")
    snapshot_dt = cfg.snapshot_dt if cfg.snapshot_dt is not None else horizon / 10.0
    n_steps, per_snap = _substeps(horizon, cfg.dt, snapshot_dt)
    if cfg.scheme == "splitting_spectral_advection":
        return _run_splitting(params, grid, initial, schedule, n_steps, per_snap, cfg)
    return _run_upwind(params, grid, initial, schedule, n_steps, per_snap, cfg)


def _run_splitting(params, grid, initial, schedule, n_steps, per_snap, cfg):
    n = grid.n_points
    dt = cfg.dt
    c_eff = params.c * cfg.c_scale
    k = 2.0 * np.pi * np.fft.fftfreq(n, d=grid.dz)
    half_phase = np.exp(-1j * k * c_eff * dt / 2.0)
    stack = np.vstack(
        [
            np.fft.fft(initial.e_field.values),
            np.fft.fft(initial.sigma_ba.values),
            np.fft.fft(initial.sigma_bc.values),
        ]
    )
    t0 = initial.t
    constant_omega = schedule.kind == "constant"
    propagator = None
    if constant_omega:
        omega = schedule.eval(params, t0).omega
        propagator = expm(_coupling_matrix(params, omega) * dt)

    states = [initial]
    for i in range(n_steps):
        t_mid = t0 + (i + 0.5) * dt
        if not constant_omega:
            omega = schedule.eval(params, t_mid).omega
            propagator = expm(_coupling_matrix(params, omega) * dt)
        stack[0] *= half_phase
        stack = propagator @ stack
        stack[0] *= half_phase
        if not np.all(np.isfinite(stack)):
            raise SimulationError(
                f"oracle produced non-finite values at step {i + 1} "
                f"(t = {t0 + (i + 1) * dt:.6e} s)"
            )
        if (i + 1) % per_snap == 0:
            states.append(
                OracleState(
                    e_field=FieldGrid(grid, np.fft.ifft(stack[0])),
                    sigma_ba=FieldGrid(grid, np.fft.ifft(stack[1])),
                    sigma_bc=FieldGrid(grid, np.fft.ifft(stack[2])),
                    t=t0 + (i + 1) * dt,
                )
            )
    return states


def _run_upwind(params, grid, initial, schedule, n_steps, per_snap, cfg):
    dt = cfg.dt
    dz = grid.dz
    c_eff = params.c * cfg.c_scale
    if c_eff * dt > dz * (1.0 + 1e-12):
        raise ConfigError(
            f"CFL violation: c*dt = {c_eff * dt:.3e} exceeds dz = {dz:.3e}; "
            f"shrink dt or use the splitting scheme"
        )
    gn = params.g * params.n_atoms
    d_ba = complex(params.gamma_ba, params.delta + params.delta_p)
    d_bc = complex(params.gamma_bc, params.delta_p)
    e = initial.e_field.values.copy()
    sba = initial.sigma_ba.values.copy()
    sbc = initial.sigma_bc.values.copy()
    t0 = initial.t
    eye = np.eye(2, dtype=complex)

    states = [initial]
    for i in range(n_steps):
        t_mid = t0 + (i + 0.5) * dt
        omega = schedule.eval(params, t_mid).omega
        a = np.array([[-d_ba, 1j * omega], [1j * np.conj(omega), -d_bc]], dtype=complex)
        e_new = e - (c_eff * dt / dz) * (e - np.roll(e, 1)) + dt * 1j * gn * sba
        if cfg.stiff_handling == "exact_exponential":
            u = expm(a * dt)
            drive = np.linalg.solve(a, (u - eye) @ np.array([1j * params.g, 0.0]))
            sba, sbc = (
                u[0, 0] * sba + u[0, 1] * sbc + drive[0] * e_new,
                u[1, 0] * sba + u[1, 1] * sbc + drive[1] * e_new,
            )
        else:
            inv = np.linalg.inv(eye - dt * a)
            rhs0 = sba + dt * 1j * params.g * e_new
            rhs1 = sbc
            sba, sbc = inv[0, 0] * rhs0 + inv[0, 1] * rhs1, inv[1, 0] * rhs0 + inv[1, 1] * rhs1
        e = e_new
        if not (np.all(np.isfinite(e)) and np.all(np.isfinite(sba)) and np.all(np.isfinite(sbc))):
            raise SimulationError(
                f"oracle produced non-finite values at step {i + 1} "
                f"(t = {t0 + (i + 1) * dt:.6e} s)"
            )
        if (i + 1) % per_snap == 0:
            states.append(
                OracleState(
                    e_field=FieldGrid(grid, e.copy()),
                    sigma_ba=FieldGrid(grid, sba.copy()),
                    sigma_bc=FieldGrid(grid, sbc.copy()),
                    t=t0 + (i + 1) * dt,
                )
            )
    return states


@dataclass(frozen=True)
class ComparisonReport:
    """Per-snapshot discrepancy between the oracle and the spectral engine."""

    observable: str
    times: tuple[float, ...]
    linf_rel: tuple[float, ...]
    l2_rel: tuple[float, ...]
    max_linf: float
    max_l2: float
    failed_checks: tuple[str, ...]
    ratios: dict
    attribution: str

    def to_dict(self) -> dict:
        return {
            "observable": self.observable,
            "times": list(self.times),
            "linf_rel": list(self.linf_rel),
            "l2_rel": list(self.l2_rel),
            "max_linf": self.max_linf,
            "max_l2": self.max_l2,
            "failed_checks": list(self.failed_checks),
            "ratios": dict(self.ratios),
            "attribution": self.attribution,
        }


def compare_to_adiabatic(
    oracle_run: list[OracleState], adiabatic_run, observable: str = "e_field"
) -> ComparisonReport:
    """Relative L-inf and L2 discrepancy per matched snapshot time.

    adiabatic_run is any object with .snapshots carrying t/e_field/sigma_bc
    and a .validity report; the validity ratios ride along so an
    out-of-tolerance comparison points at which assumption broke.
    """
    if observable not in ("e_field", "sigma_bc"):
        raise InvalidComparisonError(f"observable must be e_field or sigma_bc, got {observable!r}")
    snaps = list(adiabatic_run.snapshots)
    if not oracle_run or not snaps:
        raise InvalidComparisonError("nothing to compare: empty run")
    if oracle_run[0].e_field.grid != snaps[0].psi.grid:
        raise InvalidComparisonError("oracle and adiabatic runs use different grids")
    span = max(abs(s.t) for s in oracle_run) or 1.0
    tol = 1e-6 * span
    times = []
    linf = []
    l2 = []
    for ostate in oracle_run:
        partner = min(snaps, key=lambda s: abs(s.t - ostate.t))
        if abs(partner.t - ostate.t) > tol:
            continue
        o = getattr(ostate, observable).values
        a = getattr(partner, observable).values
        diff = o - a
        denom_inf = max(float(np.max(np.abs(o))), float(np.max(np.abs(a))), 1e-300)
        denom_l2 = max(float(np.linalg.norm(o)), float(np.linalg.norm(a)), 1e-300)
        times.append(ostate.t)
        linf.append(float(np.max(np.abs(diff))) / denom_inf)
        l2.append(float(np.linalg.norm(diff)) / denom_l2)
    if not times:
        raise InvalidComparisonError("no snapshot times matched between the two runs")
    validity = adiabatic_run.validity
    failed = tuple(validity.failed())
    ratios = {
        "high_density_ratio": validity.high_density_ratio,
        "adiabatic_length_ratio": validity.adiabatic_length_ratio,
        "adiabatic_time_ratio": validity.adiabatic_time_ratio,
        "adiabatic_parameter": validity.adiabatic_parameter,
        "low_intensity_ratio": validity.low_intensity_ratio,
    }
    if failed:
        attribution = "discrepancy attributable to failed checks: " + ", ".join(
            f"{name} ({ratios.get(name + '_ratio', ratios.get(name, float('nan'))):.3g})"
            for name in failed
        )
    else:
        attribution = "all adiabaticity checks passed; runs should agree"
    return ComparisonReport(
        observable=observable,
        times=tuple(times),
        linf_rel=tuple(linf),
        l2_rel=tuple(l2),
        max_linf=max(linf),
        max_l2=max(l2),
        failed_checks=failed,
        ratios=ratios,
        attribution=attribution,
    )


def write_oracle_csv(states: list[OracleState], path, cfg: OracleConfig, stride: int = 1):
    """Snapshot rows in the solver CSV layout, with a provenance header."""
    if stride < 1:
        raise ConfigError(f"stride must be at least 1, got {stride}")
    if not states:
        raise ConfigError("no states to write")
    z = states[0].e_field.grid.z_array()
    n = states[0].e_field.grid.n_points
    with open(path, "w", newline="") as fh:
        fh.write(
            f"# scheme={cfg.scheme} dt={_fmt(cfg.dt)} "
            f"stiff_handling={cfg.stiff_handling} c_scale={_fmt(cfg.c_scale)}\n"
        )
        fh.write(
            "t,z,re_e,im_e,abs_e,re_sigma_ba,im_sigma_ba,abs_sigma_ba,"
            "re_sigma_bc,im_sigma_bc,abs_sigma_bc\n"
        )
        for st in states:
            fields = (st.e_field.values, st.sigma_ba.values, st.sigma_bc.values)
            for j in range(0, n, stride):
                row = [_fmt(st.t), _fmt(z[j])]
                for vals in fields:
                    v = vals[j]
                    row.extend((_fmt(v.real), _fmt(v.imag), _fmt(abs(v))))
                fh.write(",".join(row) + "\n")


def _fmt(x: float) -> str:
    return format(float(x), ".17g")
