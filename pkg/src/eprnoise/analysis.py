"""Closed-form noise expressions, detection-loss fitting and CLF error signals.

Two normalisations appear side by side:

* ``v_pm_oracle`` / ``v_cond_oracle`` reference the combined variance to a
  single field's shot noise, so vacuum reads 2.
* ``methods_loss_oracle`` references it to the combined shot noise, so
  vacuum reads 1. With all loss lumped into ``l = 1 - eta_esc`` the two agree
  up to that factor of two.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from .errors import FitFailure, InvalidArgument, PoleError

DEFAULT_THRESHOLD_MW = 66.3
DEFAULT_OPO_HWHM = 2 * np.pi * 12.1e6  # rad/s


def _check_x(x):
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or np.any(x >= 1):
        raise InvalidArgument("pump parameter must satisfy 0 <= x < 1")
    return x


def _check_eta(eta):
    eta = np.asarray(eta, dtype=float)
    if np.any(eta <= 0) or np.any(eta > 1):
        raise InvalidArgument("escape efficiency must be in (0, 1]")
    return eta


def v_out_oracle(x, eta_esc, omega_over_gamma):
    """Single-field quadrature variance of the OPO output (either quadrature)."""
    x, eta = _check_x(x), _check_eta(eta_esc)
    w2 = np.asarray(omega_over_gamma, dtype=float) ** 2
    return 1 + 8 * x**2 * eta / (x**4 + 2 * x**2 * (w2 - 1) + (w2 + 1) ** 2)


def v_pm_oracle(x, eta_esc, omega_over_gamma):
    """Anti-squeezed and squeezed combined variances (vacuum = 2)."""
    x, eta = _check_x(x), _check_eta(eta_esc)
    w2 = np.asarray(omega_over_gamma, dtype=float) ** 2
    v_plus = 2 * (1 + 4 * x * eta / ((1 - x) ** 2 + w2))
    v_minus = 2 * (1 - 4 * x * eta / ((1 + x) ** 2 + w2))
    return v_plus, v_minus


def v_cond_oracle(x, eta_esc, omega_over_gamma, theta_b):
    v_plus, v_minus = v_pm_oracle(x, eta_esc, omega_over_gamma)
    return v_plus * np.cos(theta_b / 2) ** 2 + v_minus * np.sin(theta_b / 2) ** 2


def methods_loss_oracle(x, l, omega_over_gamma_opo):
    """Anti-squeezed / squeezed variance under total detection loss ``l`` (vacuum = 1)."""
    x = _check_x(x)
    l = np.asarray(l, dtype=float)
    if np.any(l < 0) or np.any(l > 1):
        raise InvalidArgument("loss must be in [0, 1]")
    w2 = np.asarray(omega_over_gamma_opo, dtype=float) ** 2
    v_plus = 1 + 4 * x * (1 - l) / ((1 - x) ** 2 + w2)
    v_minus = 1 - 4 * x * (1 - l) / ((1 + x) ** 2 + w2)
    return v_plus, v_minus


def pump_for_squeezing(v_minus: float, l: float) -> float:
    """Pump parameter giving squeezed variance ``v_minus`` at Omega -> 0 under loss ``l``.

    Solves (1 - v)(1 + x)^2 = 4 x (1 - l) for the root in [0, 1).
    """
    if not 0 < v_minus < 1:
        raise InvalidArgument("target squeezed variance must be in (0, 1)")
    if not 0 <= l < 1:
        raise InvalidArgument("loss must be in [0, 1)")
    a = 1 - v_minus
    b = 2 * a - 4 * (1 - l)
    roots = np.roots([a, b, a])
    roots = roots[np.isreal(roots)].real
    roots = roots[(roots >= 0) & (roots < 1)]
    if roots.size == 0:
        raise InvalidArgument(f"{v_minus} is not reachable below threshold with loss {l}")
    return float(roots.min())


# --- detection loss fit -----------------------------------------------------


@dataclass(frozen=True)
class LossRecord:
    pump_power_mw: float
    v_plus: float
    v_minus: float
    omega: float = 0.0

    def __post_init__(self):
        if not self.pump_power_mw >= 0:
            raise InvalidArgument("pump power must be >= 0")
        if not (self.v_plus >= 1 >= self.v_minus > 0):
            raise InvalidArgument(
                f"need v_plus >= 1 >= v_minus > 0, got v_plus={self.v_plus}, v_minus={self.v_minus}"
            )


@dataclass(frozen=True)
class LossFitInput:
    """Squeezing/anti-squeezing pairs at several pump powers.

    ``threshold_mw=None`` makes the OPO threshold a fit parameter.
    """

    records: tuple
    threshold_mw: float | None = DEFAULT_THRESHOLD_MW
    opo_hwhm: float = DEFAULT_OPO_HWHM

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        if self.threshold_mw is not None:
            for r in self.records:
                if r.pump_power_mw >= self.threshold_mw:
                    raise InvalidArgument(
                        f"pump power {r.pump_power_mw} mW is not below threshold {self.threshold_mw} mW"
                    )
        if not self.opo_hwhm > 0:
            raise InvalidArgument("OPO HWHM must be > 0")


@dataclass(frozen=True)
class LossFit:
    loss: float
    threshold_mw: float
    threshold_fitted: bool
    x: np.ndarray
    residual_db_rms: float
    nfev: int
    diagnostics: dict = field(default_factory=dict)


def fit_detection_loss(data: LossFitInput, max_nfev: int = 2000) -> LossFit:
    """Least-squares fit of the loss model in the dB domain with uniform weights.

    The pump parameter of each record is ``sqrt(P / P_th)``.
    """
    recs = data.records
    float_th = data.threshold_mw is None
    if len(recs) < (2 if float_th else 1):
        raise InvalidArgument(
            f"need at least {2 if float_th else 1} record(s) to fit, got {len(recs)}"
        )
    p = np.array([r.pump_power_mw for r in recs])
    w = np.array([r.omega for r in recs]) / data.opo_hwhm
    meas = np.concatenate(
        [10 * np.log10([r.v_plus for r in recs]), 10 * np.log10([r.v_minus for r in recs])]
    )

    def model(params):
        l = params[0]
        pth = params[1] if float_th else data.threshold_mw
        x = np.sqrt(p / pth)
        vp, vm = methods_loss_oracle(x, l, w)
        return np.concatenate([10 * np.log10(vp), 10 * np.log10(np.maximum(vm, 1e-300))])

    def resid(params):
        return model(params) - meas

    eps = 1e-9
    x0 = [0.5]
    lo, hi = [0.0], [1.0 - eps]
    if float_th:
        pmax = p.max()
        # keep x < 1 with a margin; start a bit above the highest power
        lo.append(pmax * (1 + 1e-6))
        hi.append(np.inf)
        x0.append(max(DEFAULT_THRESHOLD_MW, 1.5 * pmax))
    try:
        sol = least_squares(
            resid, x0, bounds=(lo, hi), method="trf", x_scale="jac",
            xtol=1e-14, ftol=1e-14, gtol=1e-14, max_nfev=max_nfev,
        )
    except (ValueError, FloatingPointError) as exc:
        raise FitFailure(f"loss fit raised: {exc}") from exc
    diag = {"status": sol.status, "message": sol.message, "nfev": sol.nfev, "x": sol.x.tolist()}
    if sol.status <= 0 or not np.all(np.isfinite(sol.x)):
        raise FitFailure(f"loss fit did not converge: {sol.message}", diag)
    pth = float(sol.x[1]) if float_th else float(data.threshold_mw)
    return LossFit(
        loss=float(sol.x[0]),
        threshold_mw=pth,
        threshold_fitted=float_th,
        x=np.sqrt(p / pth),
        residual_db_rms=float(np.sqrt(np.mean(sol.fun**2))),
        nfev=int(sol.nfev),
        diagnostics=diag,
    )


# --- coherent locking field -------------------------------------------------


@dataclass(frozen=True)
class ClfParams:
    """Phases in rad, rates in rad/s. ``amplitude_gain`` absorbs the field amplitudes."""

    theta_b: float = 0.0
    phi_c: float = 0.0
    phi_lo: float = 0.0
    x: float = 0.5
    gamma_clf: float = 2 * np.pi * 0.121e6
    gamma_in: float = DEFAULT_OPO_HWHM
    gamma_tot: float = DEFAULT_OPO_HWHM
    amplitude_gain: float = 1.0

    def __post_init__(self):
        for name in ("gamma_clf", "gamma_in", "gamma_tot"):
            if not getattr(self, name) > 0:
                raise InvalidArgument(f"{name} must be > 0")


def _pole_guard(x):
    x = np.asarray(x, dtype=float)
    if np.any(x == 1):
        raise PoleError("error-signal prefactor has a pole at x = 1")
    return x


def clf_reflection_error(p: ClfParams):
    """Demodulated CLF reflection signal; zero when theta_b = 2 phi_c."""
    x = _pole_guard(p.x)
    pref = p.amplitude_gain * x / (x**2 - 1) * p.gamma_clf / p.gamma_tot
    return pref * np.sin(np.asarray(p.theta_b) - 2 * np.asarray(p.phi_c))


def clf_transmission_error(p: ClfParams, locked: bool = False):
    """CLF / idler-LO beat-note error signal.

    With the reflection lock engaged (theta_b = 2 phi_c) the bracket collapses
    to (x - 1) sin(theta_b/2 - phi_lo), so the locked form keeps the same
    prefactor divided by (x + 1).
    """
    x = _pole_guard(p.x)
    pref = p.amplitude_gain * np.sqrt(p.gamma_clf * p.gamma_in) / p.gamma_tot
    theta_b, phi_lo = np.asarray(p.theta_b), np.asarray(p.phi_lo)
    if locked:
        return pref / (x + 1) * np.sin(theta_b / 2 - phi_lo)
    phi_c = np.asarray(p.phi_c)
    return pref / (x**2 - 1) * (x * np.sin(theta_b - phi_lo - phi_c) + np.sin(phi_lo - phi_c))
