"""Quadrature transfer matrices of the optical elements and cascade composition.

Elements follow one pattern: a ladder-operator linear system
``(i Omega I - gamma M) a = sum sqrt(2 gamma_k) A_k`` solved per frequency,
then the input-output relation, then a change to the quadrature basis.

Detuning sign: a positive normalised detuning means the field sits above the
cavity resonance (``+i Delta`` on the annihilation-operator diagonal). Only
relative signs between signal and idler matter for any observable here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AboveThreshold, InconsistentState, InvalidArgument, NumericalSingularity
from .spectral import (
    FrequencyGrid,
    NoisePortSet,
    QuadratureTransfer,
    ladder_to_quadrature,
    ladder_to_quadrature_field,
)


@dataclass(frozen=True)
class OpoParams:
    """Non-degenerate OPO held on resonance for signal and idler.

    x        normalised pump amplitude, 0 <= x < 1 (threshold at 1)
    theta_b  pump phase [rad]
    gamma_in input-coupler decay rate [rad/s]
    gamma_l  intracavity loss decay rate [rad/s]
    """

    x: float
    theta_b: float = np.pi
    gamma_in: float = 2 * np.pi * 12.1e6
    gamma_l: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.x) or self.x < 0:
            raise InvalidArgument(f"pump parameter must be >= 0, got {self.x}")
        if self.x >= 1:
            raise AboveThreshold(f"pump parameter x={self.x} is at or above threshold (x < 1)")
        if not self.gamma_in > 0:
            raise InvalidArgument("gamma_in must be > 0")
        if not self.gamma_l >= 0:
            raise InvalidArgument("gamma_l must be >= 0")
        if not np.isfinite(self.theta_b):
            raise InvalidArgument("theta_b must be finite")

    @classmethod
    def from_hwhm(cls, x, hwhm, escape_efficiency=1.0, theta_b=np.pi) -> "OpoParams":
        """Build from total decay rate ``hwhm`` [rad/s] and escape efficiency."""
        if not 0 < escape_efficiency <= 1:
            raise InvalidArgument("escape efficiency must be in (0, 1]")
        g_in = escape_efficiency * hwhm
        return cls(x=x, theta_b=theta_b, gamma_in=g_in, gamma_l=hwhm - g_in)

    @property
    def gamma_tot(self) -> float:
        return self.gamma_in + self.gamma_l

    @property
    def eta_esc(self) -> float:
        return self.gamma_in / self.gamma_tot


@dataclass(frozen=True)
class CavityParams:
    """Detuned test cavity seen in reflection.

    gamma_tc   total HWHM decay rate [rad/s]
    eta_tc     input-coupling ratio gamma_tc_in / gamma_tc, in (0, 1]
    delta_sig  signal detuning in units of gamma_tc
    delta_idl  idler detuning in units of gamma_tc
    """

    gamma_tc: float
    eta_tc: float = 1.0
    delta_sig: float = 0.0
    delta_idl: float = 0.0

    def __post_init__(self):
        if not self.gamma_tc > 0:
            raise InvalidArgument("gamma_tc must be > 0")
        if not 0 < self.eta_tc <= 1:
            raise InvalidArgument(f"eta_tc must be in (0, 1], got {self.eta_tc}")
        if not (np.isfinite(self.delta_sig) and np.isfinite(self.delta_idl)):
            raise InvalidArgument("detunings must be finite")


@dataclass(frozen=True)
class LossChannel:
    """Per-path power efficiencies (beamsplitter loss model)."""

    eta_sig: float = 1.0
    eta_idl: float = 1.0

    def __post_init__(self):
        for name in ("eta_sig", "eta_idl"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise InvalidArgument(f"{name} must be in [0, 1], got {v}")


def opo_coupling_matrix(x: float, theta_b: float) -> np.ndarray:
    """Drift matrix of the OPO in the (a_s, a_s^dag, a_i, a_i^dag) basis."""
    e = x * np.exp(1j * theta_b)
    ec = x * np.exp(-1j * theta_b)
    return np.array(
        [
            [-1, 0, 0, e],
            [0, -1, ec, 0],
            [0, e, -1, 0],
            [ec, 0, 0, -1],
        ],
        dtype=complex,
    )


def _resolvent(omega: np.ndarray, gamma: float, m: np.ndarray) -> np.ndarray:
    """(i Omega I - gamma M)^-1 for every grid point."""
    n = m.shape[-1]
    a = 1j * omega[:, None, None] * np.eye(n) - gamma * m
    det = np.abs(np.linalg.det(a))
    scale = np.max(np.abs(a), axis=(-2, -1)) ** n
    if np.any(det <= 1e-14 * scale):
        raise NumericalSingularity("(i Omega I - gamma M) is singular on the grid")
    return np.linalg.inv(a)


def opo_transfers(p: OpoParams, grid: FrequencyGrid) -> tuple[np.ndarray, np.ndarray]:
    """Raw (n, 4, 4) quadrature transfers for the input-coupler and loss vacua."""
    r = _resolvent(grid.omega, p.gamma_tot, opo_coupling_matrix(p.x, p.theta_b))
    t_in = ladder_to_quadrature(2 * p.gamma_in * r - np.eye(4))
    t_l = ladder_to_quadrature(2 * np.sqrt(p.gamma_l * p.gamma_in) * r)
    return t_in, t_l


def opo_ports(p: OpoParams, grid: FrequencyGrid) -> NoisePortSet:
    """Output noise ports of the OPO: ``opo.input`` and, if gamma_l > 0, ``opo.loss``."""
    t_in, t_l = opo_transfers(p, grid)
    items = [("opo.input", t_in)]
    if p.gamma_l > 0:
        items.append(("opo.loss", t_l))
    return NoisePortSet.from_transfers(grid, items)


def cavity_blocks(omega_norm, delta, eta_tc) -> tuple[np.ndarray, np.ndarray]:
    """2x2 reflection and loss blocks of a detuned cavity for one field.

    ``omega_norm`` is Omega / gamma_tc (array), ``delta`` the detuning in
    units of gamma_tc.
    """
    w = np.asarray(omega_norm, dtype=float)
    m_tc = np.diag([-1 + 1j * delta, -1 - 1j * delta])
    a = 1j * w[:, None, None] * np.eye(2) - m_tc
    r = np.linalg.inv(a)
    refl = ladder_to_quadrature_field(2 * eta_tc * r - np.eye(2))
    loss = ladder_to_quadrature_field(2 * np.sqrt(eta_tc * (1 - eta_tc)) * r)
    return refl, loss


def cavity_ports(p: CavityParams, grid: FrequencyGrid) -> tuple[QuadratureTransfer, NoisePortSet]:
    """Block-diagonal reflection transfer and the ``cavity.loss`` port (if lossy)."""
    w = grid.omega / p.gamma_tc
    rs, ls = cavity_blocks(w, p.delta_sig, p.eta_tc)
    ri, li = cavity_blocks(w, p.delta_idl, p.eta_tc)
    transfer = QuadratureTransfer.block_diagonal(grid, rs, ri)
    if p.eta_tc < 1:
        new = NoisePortSet(grid, (("cavity.loss", QuadratureTransfer.block_diagonal(grid, ls, li)),))
    else:
        new = NoisePortSet(grid)
    return transfer, new


def loss_ports(ch: LossChannel, grid: FrequencyGrid, name: str = "path.loss"):
    """Beamsplitter loss on each path; one vacuum port per lossy field."""
    ts, ti = np.sqrt(ch.eta_sig), np.sqrt(ch.eta_idl)
    transfer = QuadratureTransfer.constant(grid, np.diag([ts, ts, ti, ti]))
    items = []
    if ch.eta_sig < 1:
        c = np.sqrt(1 - ch.eta_sig)
        items.append((f"{name}.signal", QuadratureTransfer.constant(grid, np.diag([c, c, 0, 0]))))
    if ch.eta_idl < 1:
        c = np.sqrt(1 - ch.eta_idl)
        items.append((f"{name}.idler", QuadratureTransfer.constant(grid, np.diag([0, 0, c, c]))))
    return transfer, NoisePortSet(grid, tuple(items))


def rotation(phi) -> np.ndarray:
    """Quadrature rotation by ``phi`` (array-friendly), shape (..., 2, 2)."""
    phi = np.asarray(phi, dtype=float)
    c, s = np.cos(phi), np.sin(phi)
    return np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], -2)


def phase_shift(phi_sig: float, phi_idl: float, grid: FrequencyGrid) -> QuadratureTransfer:
    """Frequency-independent propagation phase on each field."""
    n = grid.count
    rs = np.broadcast_to(rotation(phi_sig), (n, 2, 2))
    ri = np.broadcast_to(rotation(phi_idl), (n, 2, 2))
    return QuadratureTransfer.block_diagonal(grid, rs, ri)


def _unique_label(label: str, taken: set) -> str:
    if label not in taken:
        return label
    k = 2
    while f"{label}#{k}" in taken:
        k += 1
    return f"{label}#{k}"


def compose(
    upstream: NoisePortSet,
    element_transfer: QuadratureTransfer,
    new_ports: NoisePortSet | None = None,
) -> NoisePortSet:
    """Send every upstream port through ``element_transfer`` and append ``new_ports``.

    Labels of appended ports that collide with existing ones get a ``#k`` suffix.
    """
    grid = upstream.grid
    if element_transfer.grid != grid:
        raise InconsistentState("element transfer is on a different grid than the upstream ports")
    out = [(lbl, element_transfer @ t) for lbl, t in upstream]
    taken = {lbl for lbl, _ in out}
    if new_ports is not None:
        if new_ports.grid != grid:
            raise InconsistentState("new ports are on a different grid than the upstream ports")
        for lbl, t in new_ports:
            lbl = _unique_label(lbl, taken)
            taken.add(lbl)
            out.append((lbl, t))
    return NoisePortSet(grid, tuple(out))


def cascade(upstream: NoisePortSet, *stages) -> NoisePortSet:
    """Apply ``(transfer, new_ports)`` stages in propagation order."""
    ports = upstream
    for transfer, new in stages:
        ports = compose(ports, transfer, new)
    return ports
