"""Homodyne readout of the signal/idler pair and electronic recombination.

The combined photocurrent is

    y = g_s X_s(phi_s) - sign * g_i X_i(phi_i),   X(phi) = cos(phi) X1 + sin(phi) X2

and its spectrum is reported relative to the combined shot noise
``g_s**2 + g_i**2`` so that vacuum always reads 1.

"Readout angle" everywhere in this module means the idler LO phase ``phi_i``
with the signal LO phase held fixed, which is how the angle is scanned in the
experiment (a ramp on the idler LO). The default ``combiner_sign = -1`` adds
the two readouts; with the OPO pump phase at pi this is the squeezed
combination at readout angle 0 and the anti-squeezed one at pi.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateConditioning, InvalidArgument
from .spectral import FrequencyGrid, SpectralCovariance


@dataclass(frozen=True)
class ReadoutConfig:
    phi_s: float = 0.0
    phi_i: float = 0.0
    g_s: float = 1.0
    g_i: float = 1.0
    combiner_sign: int = -1

    def __post_init__(self):
        if self.combiner_sign not in (1, -1):
            raise InvalidArgument("combiner_sign must be +1 or -1")
        vals = (self.phi_s, self.phi_i, self.g_s, self.g_i)
        if not all(np.isfinite(v) for v in vals):
            raise InvalidArgument("readout phases and gains must be finite")
        if self.g_s == 0 and self.g_i == 0:
            raise InvalidArgument("at least one combiner gain must be nonzero")

    def projection(self) -> np.ndarray:
        return projection_vector(self.phi_s, self.phi_i, self.g_s, self.g_i, self.combiner_sign)


def projection_vector(phi_s, phi_i, g_s=1.0, g_i=1.0, combiner_sign=-1) -> np.ndarray:
    """Real readout vector(s) u; ``phi_i`` may be an array, giving shape (..., 4)."""
    phi_i = np.asarray(phi_i, dtype=float)
    k = -combiner_sign * g_i
    cs = np.broadcast_to(g_s * np.cos(phi_s), phi_i.shape)
    ss = np.broadcast_to(g_s * np.sin(phi_s), phi_i.shape)
    return np.stack([cs, ss, k * np.cos(phi_i), k * np.sin(phi_i)], axis=-1)


def _quadratic_form(s: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Re(u^T S u) for real u: s is (n, 4, 4), u is (m, 4) -> (n, m)."""
    return np.real(np.einsum("mj,njk,mk->nm", u, s, u))


def homodyne_variance(s: SpectralCovariance, cfg: ReadoutConfig) -> np.ndarray:
    """Normalised variance of the combined readout, one value per grid point."""
    u = cfg.projection()
    norm = cfg.g_s**2 + cfg.g_i**2
    if not norm > 0:
        raise InvalidArgument("zero-norm projection vector")
    return _quadratic_form(s.matrix, u[None, :])[:, 0] / norm


def to_db(variance):
    v = np.asarray(variance, dtype=float)
    if np.any(~(v > 0)):
        raise InvalidArgument("variance must be > 0 to convert to dB")
    out = 10 * np.log10(v)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class SpectrumResult:
    """Normalised variance on a (frequency, readout angle) grid."""

    grid: FrequencyGrid
    angles: np.ndarray
    variance: np.ndarray

    def __post_init__(self):
        angles = np.asarray(self.angles, dtype=float).ravel()
        var = np.asarray(self.variance, dtype=float)
        if var.shape != (self.grid.count, angles.size):
            raise InvalidArgument(f"variance shape {var.shape} does not match grid x angles")
        if np.any(~(var > 0)):
            raise InvalidArgument("variances must be strictly positive")
        for name, a in (("angles", angles), ("variance", var)):
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @property
    def variance_db(self) -> np.ndarray:
        return 10 * np.log10(self.variance)

    def argmin_angles(self) -> np.ndarray:
        """Coarse per-frequency minimising angle, restricted to the sweep samples."""
        return self.angles[np.argmin(self.variance, axis=1)]


def angle_sweep(
    s: SpectralCovariance,
    phi_s: float,
    angles,
    g_s: float = 1.0,
    g_i: float = 1.0,
    combiner_sign: int = -1,
) -> SpectrumResult:
    """Combined variance versus idler LO phase (the readout angle) at fixed ``phi_s``."""
    angles = np.asarray(angles, dtype=float).ravel()
    if angles.size == 0:
        raise InvalidArgument("angle list is empty")
    ReadoutConfig(phi_s, 0.0, g_s, g_i, combiner_sign)  # validation only
    u = projection_vector(phi_s, angles, g_s, g_i, combiner_sign)
    var = _quadratic_form(s.matrix, u) / (g_s**2 + g_i**2)
    return SpectrumResult(s.grid, angles, var)


_GOLD = (np.sqrt(5) - 1) / 2


def _golden_min(func, lo, hi, tol=1e-12, max_iter=200):
    """Vectorised golden-section search; ``func`` maps an array of points to values."""
    a, b = np.array(lo, dtype=float), np.array(hi, dtype=float)
    c = b - _GOLD * (b - a)
    d = a + _GOLD * (b - a)
    fc, fd = func(c), func(d)
    for _ in range(max_iter):
        if np.max(b - a) < tol:
            break
        left = fc < fd
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        new_c = b - _GOLD * (b - a)
        new_d = a + _GOLD * (b - a)
        c_next = np.where(left, new_c, d)
        d_next = np.where(left, c, new_d)
        # one fresh evaluation per point and iteration
        probe = np.where(left, c_next, d_next)
        fp = func(probe)
        fc, fd = np.where(left, fp, fd), np.where(left, fc, fp)
        c, d = c_next, d_next
    x = 0.5 * (a + b)
    return x, func(x)


def _scan_and_refine(func, period, n_scan=720):
    """Global minimum of a ``period``-periodic function of one angle, per row.

    ``func(phi)`` takes an (n, m) array of angles and returns (n, m) values.
    """
    grid = np.linspace(0.0, period, n_scan, endpoint=False)
    vals = func(grid[None, :])
    n = vals.shape[0]
    k = np.argmin(vals, axis=1)
    h = period / n_scan
    lo = grid[k] - h
    hi = grid[k] + h
    x, fx = _golden_min(lambda p: func(p[:, None])[:, 0], lo, hi)
    # keep the scan value if refinement somehow did worse
    best_scan = vals[np.arange(n), k]
    use_scan = best_scan < fx
    x = np.where(use_scan, grid[k], x)
    fx = np.where(use_scan, best_scan, fx)
    return np.mod(x, period), fx


def optimal_readout_angle(
    s: SpectralCovariance,
    phi_s: float = 0.0,
    g_s: float = 1.0,
    g_i: float = 1.0,
    combiner_sign: int = -1,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-frequency idler LO phase in [0, 2 pi) minimising the combined variance."""
    if g_s == 0 and g_i == 0:
        raise InvalidArgument("at least one combiner gain must be nonzero")
    m = s.matrix
    norm = g_s**2 + g_i**2
    k = -combiner_sign * g_i
    es = np.array([np.cos(phi_s), np.sin(phi_s)])
    a = np.real(es @ m[:, :2, :2] @ es)[:, None]
    cross = np.real(np.einsum("j,njk->nk", es, m[:, :2, 2:]))
    sii = np.real(m[:, 2:, 2:])

    def func(phi):
        cos, sin = np.cos(phi), np.sin(phi)
        q = (
            sii[:, 0, 0, None] * cos**2
            + (sii[:, 0, 1, None] + sii[:, 1, 0, None]) * cos * sin
            + sii[:, 1, 1, None] * sin**2
        )
        lin = cross[:, 0:1] * cos + cross[:, 1:2] * sin
        return (g_s**2 * a + k**2 * q + 2 * g_s * k * lin) / norm

    return _scan_and_refine(func, 2 * np.pi)


@dataclass(frozen=True, eq=False)
class WienerResult:
    """Per-frequency optimal idler filter.

    The filtered readout is ``X_s(phi_s) + gain * X_i(idler_angle)``.
    ``variance`` is referenced to the combined shot noise ``1 + |gain|**2``
    (the same reference as :func:`homodyne_variance`); ``signal_referenced``
    is the plain conditional variance ``S_aa - |S_ab|**2 / S_bb`` referenced
    to signal shot noise alone.
    """

    grid: FrequencyGrid
    gain: np.ndarray
    idler_angle: np.ndarray
    variance: np.ndarray
    signal_referenced: np.ndarray

    @property
    def variance_db(self) -> np.ndarray:
        return to_db(self.variance)


def _reduced_blocks(m: np.ndarray, phi_s: float, phi):
    es = np.array([np.cos(phi_s), np.sin(phi_s)])
    a = np.real(es @ m[:, :2, :2] @ es)
    c_row = np.einsum("j,njk->nk", es, m[:, :2, 2:])  # cross-covariance with X_i1, X_i2
    cos, sin = np.cos(phi), np.sin(phi)
    b = c_row[:, 0:1] * cos + c_row[:, 1:2] * sin
    sii = np.real(m[:, 2:, 2:])
    c = (
        sii[:, 0, 0, None] * cos**2
        + (sii[:, 0, 1, None] + sii[:, 1, 0, None]) * cos * sin
        + sii[:, 1, 1, None] * sin**2
    )
    return a[:, None], b, c


def _lambda_min(a, b, c):
    return 0.5 * (a + c) - np.sqrt(0.25 * (a - c) ** 2 + np.abs(b) ** 2)


def wiener_conditional(s: SpectralCovariance, phi_s: float = 0.0) -> WienerResult:
    """Optimal per-frequency combination of the idler readout with the signal readout.

    Minimises the normalised combined variance over the idler LO phase and a
    complex idler gain; for a given idler phase the minimum is the smaller
    eigenvalue of the 2x2 (signal, idler) covariance block.
    """
    m = s.matrix
    sii = np.real(m[:, 2:, 2:])
    if np.any(np.trace(sii, axis1=-2, axis2=-1) <= 1e-300) or np.any(
        np.linalg.eigvalsh(sii) <= 0
    ):
        raise DegenerateConditioning("idler auto-spectrum vanishes on the grid")

    def func(phi):
        phi = np.broadcast_to(phi, (m.shape[0], phi.shape[-1]))
        return _lambda_min(*_reduced_blocks(m, phi_s, phi))

    angle, var = _scan_and_refine(func, np.pi)
    a, b, c = (q[:, 0] for q in _reduced_blocks(m, phi_s, angle[:, None]))
    lam = _lambda_min(a, b, c)
    # eigenvector w = (b, lam - a); combination coefficients are conj(w)
    scale = np.maximum(a, c)
    tiny = np.abs(b) <= 1e-12 * scale
    with np.errstate(divide="ignore", invalid="ignore"):
        gain = np.conj((lam - a) / b)
    # uncorrelated fields: keep the signal alone unless the idler is strictly quieter
    gain = np.where(tiny, np.where(a <= c + 1e-12 * scale, 0.0, np.inf), gain)

    return WienerResult(
        grid=s.grid,
        gain=gain,
        idler_angle=angle,
        variance=var,
        signal_referenced=_signal_referenced(m, phi_s),
    )


def _signal_referenced(m: np.ndarray, phi_s: float) -> np.ndarray:
    """S_aa - max_phi |S_ab(phi)|^2 / S_bb(phi), via a 2x2 generalised eigenproblem."""
    es = np.array([np.cos(phi_s), np.sin(phi_s)])
    a = np.real(es @ m[:, :2, :2] @ es)
    c = np.einsum("j,njk->nk", es, m[:, :2, 2:])
    p = np.real(c[:, :, None] * np.conj(c[:, None, :]))
    q = np.real(m[:, 2:, 2:])
    ev = np.linalg.eigvals(np.linalg.solve(q, p))
    return a - np.max(np.real(ev), axis=-1)
