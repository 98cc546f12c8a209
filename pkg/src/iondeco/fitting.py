"""Recover nutation parameters from P1(tau) curves and map them back to
effective relaxation rates.

The fitted model is a damped cosine over a constant plateau,

    P1(tau) = p_inf + A * exp(-lambda*tau) * cos(Omega*tau + phi).

Fitting happens in a normalized time variable (tau / span), which makes
the estimator exactly equivariant under uniform time rescaling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares, minimize

from .errors import DegenerateRates, OscillationUnresolved, OutOfRange
from .model import EffectiveRates


@dataclass(frozen=True)
class NutationFit:
    omega_fit: float      # rad/s
    lambda_fit: float     # rad/s, envelope decay
    p_inf_fit: float      # plateau
    amplitude: float
    phase: float          # rad
    residual_rms: float
    converged: bool
    iterations: int


def _spectral_peak(t: np.ndarray, y: np.ndarray) -> float:
    """Dominant angular frequency of a (near) uniformly sampled signal,
    parabolic interpolation around the FFT peak."""
    dt = np.mean(np.diff(t))
    yf = np.abs(np.fft.rfft(y - y.mean()))
    if len(yf) < 3:
        raise OscillationUnresolved("too few samples for a spectral estimate")
    k = int(np.argmax(yf[1:]) + 1)
    # refine peak position by parabolic interpolation where neighbours exist
    if 1 <= k < len(yf) - 1:
        a, b, c = yf[k - 1], yf[k], yf[k + 1]
        denom = a - 2 * b + c
        if denom != 0:
            k = k + 0.5 * (a - c) / denom
    return 2 * math.pi * k / (len(y) * dt)


def fit_nutation(t, p1, sigma=None, max_iter: int = 200) -> NutationFit:
    """Weighted nonlinear least-squares fit of the damped-cosine model.

    t, p1: sampled curve (t need not start at zero but must be close to
    uniformly spaced for the spectral initializer).  sigma: pointwise
     1-sigma uncertainties; omitted means unit weights.

    Raises OscillationUnresolved when fewer than 8 samples are given, the
    span covers less than one oscillation period, or the curve is
    overdamped (initial lambda estimate above the frequency estimate).
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(p1, dtype=float)
    if t.ndim != 1 or t.shape != y.shape:
        raise ValueError("t and p1 must be 1-d arrays of equal length")
    if len(t) < 8:
        raise OscillationUnresolved("need at least 8 samples")
    span = t[-1] - t[0]
    if span <= 0:
        raise ValueError("time grid must be increasing")

    # work in normalized time so the estimate is scale-equivariant
    s = t / span
    w = None if sigma is None else 1.0 / np.asarray(sigma, dtype=float)

    # -- initialization
    tail = y[-max(len(y) // 5, 4):]
    p_inf0 = float(tail.mean())
    detr = y - p_inf0
    omega0 = _spectral_peak(s, detr)

    # envelope decay from log-linear regression on the analytic-signal modulus
    from scipy.signal import hilbert

    env = np.abs(hilbert(detr))
    core = slice(len(env) // 10, max(len(env) // 10 + 2, 9 * len(env) // 10))
    pos = env[core] > 1e-12 * max(env.max(), 1e-300)
    if pos.sum() >= 2:
        lam0 = max(0.0, -np.polyfit(s[core][pos], np.log(env[core][pos]), 1)[0])
    else:
        lam0 = 0.0
    if lam0 > omega0:
        raise OscillationUnresolved("overdamped curve: oscillation not resolved")

    # linear phase/amplitude estimate at fixed (omega0, lam0)
    e = np.exp(-lam0 * s)
    basis = np.column_stack([e * np.cos(omega0 * s), e * np.sin(omega0 * s)])
    (a, b), *_ = np.linalg.lstsq(basis, detr, rcond=None)
    amp0 = math.hypot(a, b)
    phi0 = math.atan2(-b, a)

    def residual(x):
        om, lam, pi_, amp, phi = x
        r = pi_ + amp * np.exp(-lam * s) * np.cos(om * s + phi) - y
        return r if w is None else r * w

    x0 = np.array([omega0, lam0, p_inf0, amp0, phi0])
    result = least_squares(
        residual,
        x0,
        bounds=([0, 0, -np.inf, -np.inf, -np.inf], np.inf),
        max_nfev=max_iter * len(x0),
    )
    if not result.success:
        # derivative-free fallback on the same objective
        result2 = minimize(
            lambda x: float(np.sum(residual(x) ** 2)),
            result.x,
            method="Nelder-Mead",
            options={"maxiter": 5000},
        )
        x = result2.x
        converged = bool(result2.success)
        iterations = int(result.nfev + result2.get("nit", 0))
    else:
        x = result.x
        converged = True
        iterations = int(result.nfev)

    om, lam, pi_, amp, phi = x
    # defined failure modes: never report a frequency the data cannot support
    if lam > om:
        raise OscillationUnresolved("overdamped fit (lambda > omega)")
    if om < 2 * math.pi:  # normalized span shorter than one fitted period
        raise OscillationUnresolved("curve spans less than one oscillation period")
    if amp < 0:  # canonicalize to positive amplitude
        amp = -amp
        phi += math.pi
    phi = math.atan2(math.sin(phi), math.cos(phi))
    rms = float(np.sqrt(np.mean((pi_ + amp * np.exp(-lam * s) * np.cos(om * s + phi) - y) ** 2)))
    return NutationFit(
        omega_fit=float(om / span),
        lambda_fit=float(lam / span),
        p_inf_fit=float(pi_),
        amplitude=float(amp),
        phase=float(phi),
        residual_rms=rms,
        converged=converged,
        iterations=iterations,
    )


def invert_saturation(p_inf: float) -> float:
    """Invert the plateau level to the scattering-rate ratio r2/r1.

    Only plateaus strictly above 1/2 are invertible; at or below, the
    energy channel is unidentifiable (pure-dephasing-dominated data).
    """
    if not p_inf > 0.5:
        raise OutOfRange(f"plateau {p_inf} <= 1/2: r2/r1 unidentifiable")
    if p_inf > 1.0:
        raise OutOfRange(f"plateau {p_inf} > 1")
    return 2.0 * (1.0 - p_inf) / (2.0 * p_inf - 1.0)


def effective_from_fit(fit: NutationFit, omega_mw: float) -> EffectiveRates:
    """Translate a nutation fit into effective two-level rates.

    gamma = lambda_fit; r2/r1 from the plateau; Gamma = Omega^2 / r2 with
    r1 = gamma and r2 = gamma * (r2/r1).
    """
    if fit.lambda_fit <= 0:
        raise DegenerateRates("undamped fit: no decoherence to quantify")
    ratio = invert_saturation(fit.p_inf_fit)
    gamma = fit.lambda_fit
    r2 = gamma * ratio
    Gamma = omega_mw**2 / r2 if r2 > 0 else None
    return EffectiveRates(gamma_eff=gamma, Gamma_eff=Gamma, p1_inf=fit.p_inf_fit)
