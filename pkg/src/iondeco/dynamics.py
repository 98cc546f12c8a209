"""Time-domain integration of the driven four-level system.

Three model variants:

* the full hybrid model: coherent microwave dynamics on 0-1 (Bloch
  variables u, v) coupled to optical pumping through levels 2 and 3 via
  rate equations,
* an adiabatic variant with the optical level eliminated (valid far
  below saturation; removes the stiffness gamma3 >> Omega),
* the effective two-level model with rates (gamma, Gamma), the
  longitudinal fixed point sitting at the *excited* state 1.

State vector order is [u, v, n0, n1, n2, n3] with u = 2 Re rho01,
v = 2 Im rho01 in the microwave rotating frame.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import RegimeViolation, StiffnessFailure
from .model import PhysicalParams, ScatteringRates, light_flux, lorentzian

_ADIABATIC_SATURATION_LIMIT = 0.1


@dataclass(frozen=True)
class SystemState:
    """Populations of levels 0..3 plus the 0-1 coherence components."""

    u: float = 0.0
    v: float = 0.0
    n0: float = 1.0
    n1: float = 0.0
    n2: float = 0.0
    n3: float = 0.0

    def as_vector(self) -> np.ndarray:
        return np.array([self.u, self.v, self.n0, self.n1, self.n2, self.n3])

    @classmethod
    def from_vector(cls, y) -> "SystemState":
        return cls(*(float(x) for x in y))

    @property
    def trace(self) -> float:
        return self.n0 + self.n1 + self.n2 + self.n3

    @property
    def p1(self) -> float:
        """Probability of the probed F=1 manifold (levels 1 and 2)."""
        return self.n1 + self.n2


@dataclass(frozen=True)
class IntegratorConfig:
    """Integration method and tolerances.

    method: "rk45" (adaptive, default), "radau" / "lsoda" (stiff),
    "rk4" (fixed step, requires dt).
    """

    method: str = "rk45"
    dt: float | None = None
    rtol: float = 1e-8
    atol: float = 1e-10

    def __post_init__(self):
        if self.method not in ("rk45", "rk4", "radau", "lsoda"):
            raise ValueError(f"unknown integrator method {self.method!r}")
        if self.method == "rk4" and not (self.dt and self.dt > 0):
            raise ValueError("rk4 requires dt > 0")
        if self.rtol <= 0 or self.atol <= 0:
            raise ValueError("tolerances must be positive")


@dataclass(frozen=True)
class TimeSeries:
    """Sampled solution: t of shape (n,), y of shape (n, 6)."""

    t: np.ndarray
    y: np.ndarray

    @property
    def p1(self) -> np.ndarray:
        return self.y[:, 3] + self.y[:, 4]

    @property
    def trace(self) -> np.ndarray:
        return self.y[:, 2:].sum(axis=1)

    def state(self, i: int) -> SystemState:
        return SystemState.from_vector(self.y[i])


def derivative(
    state: SystemState, params: PhysicalParams, rates: ScatteringRates
) -> SystemState:
    """Right-hand side of the four-level equations of motion.

    Microwave drive couples 0-1 only; light pumps 1 -> 3 at r1 and
    2 -> 3 at r2; level 3 decays to 1 and 2 with branching beta1:beta2.
    The 0-1 coherence decays at gamma_c = r1 + gamma_ph_extra, i.e. all
    scattering out of state 1 carries full dephasing weight.
    """
    dy = _rhs_full(0.0, state.as_vector(), params, rates)
    return SystemState.from_vector(dy)


def _rhs_full(t, y, params: PhysicalParams, rates: ScatteringRates):
    u, v, n0, n1, n2, n3 = y
    om = params.omega_mw
    dmw = params.delta_mw
    gc = rates.r1 + params.gamma_ph_extra
    g3 = params.gamma3
    return np.array(
        [
            -dmw * v - gc * u,
            dmw * u + om * (n0 - n1) - gc * v,
            -0.5 * om * v,
            0.5 * om * v - rates.r1 * n1 + params.beta1 * g3 * n3,
            -rates.r2 * n2 + params.beta2 * g3 * n3,
            rates.r1 * n1 + rates.r2 * n2 - g3 * n3,
        ]
    )


def _rhs_adiabatic(t, y, params: PhysicalParams, rates: ScatteringRates):
    # n3 eliminated: scattered flux r1*n1 + r2*n2 redistributes instantly.
    u, v, n0, n1, n2 = y
    om = params.omega_mw
    dmw = params.delta_mw
    gc = rates.r1 + params.gamma_ph_extra
    flux = rates.r1 * n1 + rates.r2 * n2
    return np.array(
        [
            -dmw * v - gc * u,
            dmw * u + om * (n0 - n1) - gc * v,
            -0.5 * om * v,
            0.5 * om * v - rates.r1 * n1 + params.beta1 * flux,
            -rates.r2 * n2 + params.beta2 * flux,
        ]
    )


def _rk4_fixed(rhs, y0, t_grid, dt, args):
    ys = np.empty((len(t_grid), len(y0)))
    y = np.asarray(y0, dtype=float)
    t = t_grid[0]
    ys[0] = y
    for i in range(1, len(t_grid)):
        target = t_grid[i]
        while t < target - 1e-15 * max(1.0, abs(target)):
            h = min(dt, target - t)
            k1 = rhs(t, y, *args)
            k2 = rhs(t + h / 2, y + h / 2 * k1, *args)
            k3 = rhs(t + h / 2, y + h / 2 * k2, *args)
            k4 = rhs(t + h, y + h * k3, *args)
            y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            t += h
        ys[i] = y
        t = target
    return ys


def _solve(rhs, y0, t_grid, config: IntegratorConfig, args):
    t_grid = np.asarray(t_grid, dtype=float)
    if config.method == "rk4":
        return _rk4_fixed(rhs, y0, t_grid, config.dt, args)
    method = {"rk45": "RK45", "radau": "Radau", "lsoda": "LSODA"}[config.method]
    sol = solve_ivp(
        rhs,
        (t_grid[0], t_grid[-1]),
        y0,
        method=method,
        t_eval=t_grid,
        rtol=config.rtol,
        atol=config.atol,
        args=args,
    )
    if not sol.success:
        raise StiffnessFailure(
            f"integration failed ({sol.message}); try method='radau' or the "
            "adiabatic variant"
        )
    return sol.y.T


def integrate(
    initial: SystemState,
    params: PhysicalParams,
    rates: ScatteringRates,
    config: IntegratorConfig,
    t_grid,
) -> TimeSeries:
    """Integrate the full four-level model on the given time grid."""
    t_grid = np.asarray(t_grid, dtype=float)
    ys = _solve(_rhs_full, initial.as_vector(), t_grid, config, (params, rates))
    return TimeSeries(t=t_grid, y=ys)


def integrate_adiabatic(
    initial: SystemState,
    params: PhysicalParams,
    rates: ScatteringRates,
    config: IntegratorConfig,
    t_grid,
) -> TimeSeries:
    """Integrate the reduced five-variable model (optical level eliminated).

    Raises RegimeViolation when any Zeeman component is driven beyond
    I(m)*L(m) = 0.1, where the elimination is unjustified.  The returned
    series carries the reconstructed quasi-static n3 in its last column.
    """
    for m in (-1, 0, +1):
        if light_flux(params, m) * lorentzian(params, m) > _ADIABATIC_SATURATION_LIMIT:
            raise RegimeViolation(
                f"I({m:+d})*L({m:+d}) > {_ADIABATIC_SATURATION_LIMIT}: adiabatic "
                "elimination of the optical level is unjustified"
            )
    t_grid = np.asarray(t_grid, dtype=float)
    y0 = initial.as_vector()[:5]
    ys5 = _solve(_rhs_adiabatic, y0, t_grid, config, (params, rates))
    n3 = (rates.r1 * ys5[:, 3] + rates.r2 * ys5[:, 4]) / params.gamma3
    return TimeSeries(t=t_grid, y=np.column_stack([ys5, n3]))


def _rhs_two_level(t, y, omega, delta, gamma, Gamma):
    # w = n1 - n0; longitudinal decay pulls w toward +1 (excited state).
    w, u, v = y
    return np.array(
        [
            omega * v - Gamma * (w - 1.0),
            -delta * v - gamma * u,
            delta * u - omega * w - gamma * v,
        ]
    )


def integrate_effective_two_level(
    initial: tuple[float, float, float],
    gamma_eff: float,
    Gamma_eff: float,
    omega_mw: float,
    config: IntegratorConfig,
    t_grid,
    delta_mw: float = 0.0,
) -> TimeSeries:
    """Effective two-level Bloch evolution with transverse rate gamma and
    longitudinal rate Gamma decaying into the excited state.

    initial is (w, u, v) with w = n1 - n0.  Returns a TimeSeries whose
    populations columns hold n0 = (1-w)/2, n1 = (1+w)/2, n2 = n3 = 0, so
    p1 has its usual meaning.  On resonance the stationary point is
    P1 = 1 - (1/2) I/(1+I) with I = Omega^2/(Gamma*gamma).
    """
    if not gamma_eff >= Gamma_eff / 2.0:
        raise ValueError("unphysical rates: gamma_eff must be >= Gamma_eff/2")
    t_grid = np.asarray(t_grid, dtype=float)
    ys = _solve(
        _rhs_two_level,
        np.asarray(initial, dtype=float),
        t_grid,
        config,
        (omega_mw, delta_mw, gamma_eff, Gamma_eff),
    )
    w, u, v = ys[:, 0], ys[:, 1], ys[:, 2]
    zero = np.zeros_like(w)
    y6 = np.column_stack([u, v, (1 - w) / 2, (1 + w) / 2, zero, zero])
    return TimeSeries(t=t_grid, y=y6)
