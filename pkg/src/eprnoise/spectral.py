"""Frequency grids, quadrature transfer matrices and noise-port bookkeeping.

Every matrix in the package acts on the quadrature vector

    (X_s1, X_s2, X_i1, X_i2)

i.e. amplitude and phase quadratures of the signal field followed by those of
the idler field. Each noise port is an independent vacuum input whose four
quadratures have unit spectral variance, so the output spectral covariance is
simply ``sum_k T_k T_k^dagger`` and shot noise equals 1 per field.

Following the sideband algebra used for the OPO and cavity models, ``a(Omega)``
and ``a^dagger(Omega)`` are treated as independent variables evaluated at the
same analysis frequency. Transfer matrices are therefore complex in general.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .errors import InconsistentState, InvalidArgument

NQ = 4

# Ladder-operator -> quadrature change of basis for a single field:
# X1 = a + a^dagger, X2 = -i (a - a^dagger).
GAMMA_FIELD = np.array([[1.0, 1.0], [-1.0j, 1.0j]])
GAMMA_FIELD_INV = np.linalg.inv(GAMMA_FIELD)
GAMMA = np.kron(np.eye(2), GAMMA_FIELD)
GAMMA_INV = np.linalg.inv(GAMMA)

HERMITIAN_ATOL = 1e-12
PSD_ATOL = 1e-10


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class FrequencyGrid:
    """Strictly increasing, positive analysis frequencies in rad/s."""

    omega: np.ndarray
    scale: str = "linear"

    def __post_init__(self):
        omega = np.asarray(self.omega, dtype=float).ravel()
        if omega.size < 2:
            raise InvalidArgument("a frequency grid needs at least 2 points")
        if not np.all(np.isfinite(omega)) or np.any(omega <= 0):
            raise InvalidArgument("grid frequencies must be finite and > 0")
        if np.any(np.diff(omega) <= 0):
            raise InvalidArgument("grid frequencies must be strictly increasing")
        if self.scale not in ("linear", "log"):
            raise InvalidArgument(f"unknown grid scale {self.scale!r}")
        object.__setattr__(self, "omega", _frozen(omega))

    @property
    def count(self) -> int:
        return self.omega.size

    @property
    def freq_hz(self) -> np.ndarray:
        return self.omega / (2 * np.pi)

    def __len__(self):
        return self.count

    def __eq__(self, other):
        if not isinstance(other, FrequencyGrid):
            return NotImplemented
        return self.omega.shape == other.omega.shape and bool(
            np.array_equal(self.omega, other.omega)
        )

    def __hash__(self):
        return hash(self.omega.tobytes())


def make_grid(f_min: float, f_max: float, n: int, scale: str = "log") -> FrequencyGrid:
    """Grid of ``n`` frequencies between ``f_min`` and ``f_max`` (Hz), stored as rad/s."""
    if not (np.isfinite(f_min) and np.isfinite(f_max)):
        raise InvalidArgument("grid bounds must be finite")
    if f_min <= 0 or f_max <= f_min:
        raise InvalidArgument(f"need 0 < f_min < f_max, got f_min={f_min}, f_max={f_max}")
    if int(n) != n or n < 2:
        raise InvalidArgument(f"need an integer point count >= 2, got {n}")
    n = int(n)
    if scale == "log":
        f = np.logspace(np.log10(f_min), np.log10(f_max), n)
        # logspace round-trips the endpoints only approximately
        f[0], f[-1] = f_min, f_max
    elif scale == "linear":
        f = np.linspace(f_min, f_max, n)
    else:
        raise InvalidArgument(f"scale must be 'linear' or 'log', got {scale!r}")
    return FrequencyGrid(2 * np.pi * f, scale)


def _check_matrices(grid: FrequencyGrid, matrix) -> np.ndarray:
    m = np.asarray(matrix, dtype=complex)
    if m.shape != (grid.count, NQ, NQ):
        raise InconsistentState(
            f"expected transfer of shape {(grid.count, NQ, NQ)}, got {m.shape}"
        )
    if not np.all(np.isfinite(m)):
        raise InvalidArgument("transfer matrix contains NaN or Inf")
    return _frozen(m)


@dataclass(frozen=True, eq=False)
class QuadratureTransfer:
    """One 4x4 complex matrix per grid point, shape ``(n, 4, 4)``."""

    grid: FrequencyGrid
    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "matrix", _check_matrices(self.grid, self.matrix))

    @classmethod
    def identity(cls, grid: FrequencyGrid) -> "QuadratureTransfer":
        return cls(grid, np.broadcast_to(np.eye(NQ, dtype=complex), (grid.count, NQ, NQ)))

    @classmethod
    def constant(cls, grid: FrequencyGrid, m) -> "QuadratureTransfer":
        m = np.asarray(m, dtype=complex)
        return cls(grid, np.broadcast_to(m, (grid.count, NQ, NQ)))

    @classmethod
    def block_diagonal(cls, grid: FrequencyGrid, sig, idl) -> "QuadratureTransfer":
        """Assemble from per-frequency 2x2 signal and idler blocks."""
        out = np.zeros((grid.count, NQ, NQ), dtype=complex)
        out[:, :2, :2] = sig
        out[:, 2:, 2:] = idl
        return cls(grid, out)

    def __matmul__(self, other: "QuadratureTransfer") -> "QuadratureTransfer":
        if self.grid != other.grid:
            raise InconsistentState("cannot multiply transfers on different grids")
        return QuadratureTransfer(self.grid, self.matrix @ other.matrix)


@dataclass(frozen=True, eq=False)
class NoisePortSet:
    """Ordered collection of labelled vacuum inputs sharing one grid."""

    grid: FrequencyGrid
    ports: tuple = field(default_factory=tuple)

    def __post_init__(self):
        ports = tuple(self.ports)
        labels = [lbl for lbl, _ in ports]
        if len(set(labels)) != len(labels):
            raise InconsistentState(f"duplicate port labels in {labels}")
        for lbl, t in ports:
            if not isinstance(t, QuadratureTransfer):
                raise InvalidArgument(f"port {lbl!r} is not a QuadratureTransfer")
            if t.grid != self.grid:
                raise InconsistentState(f"port {lbl!r} lives on a different grid")
        object.__setattr__(self, "ports", ports)

    @classmethod
    def from_transfers(cls, grid: FrequencyGrid, items) -> "NoisePortSet":
        return cls(grid, tuple((lbl, QuadratureTransfer(grid, m)) for lbl, m in items))

    @classmethod
    def vacuum(cls, grid: FrequencyGrid, label: str = "vacuum") -> "NoisePortSet":
        return cls(grid, ((label, QuadratureTransfer.identity(grid)),))

    @property
    def labels(self) -> list[str]:
        return [lbl for lbl, _ in self.ports]

    def __len__(self):
        return len(self.ports)

    def __iter__(self) -> Iterator[tuple[str, QuadratureTransfer]]:
        return iter(self.ports)

    def __getitem__(self, label: str) -> QuadratureTransfer:
        for lbl, t in self.ports:
            if lbl == label:
                return t
        raise KeyError(label)


@dataclass(frozen=True, eq=False)
class SpectralCovariance:
    """Hermitian PSD 4x4 quadrature spectrum per grid point, shot noise = 1."""

    grid: FrequencyGrid
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (self.grid.count, NQ, NQ):
            raise InconsistentState(f"covariance shape {m.shape} does not match grid")
        object.__setattr__(self, "matrix", _frozen(m))

    def check(self, herm_atol: float = HERMITIAN_ATOL, psd_atol: float = PSD_ATOL):
        """Raise ``InconsistentState`` if not Hermitian / PSD within tolerance."""
        m = self.matrix
        scale = max(1.0, float(np.max(np.abs(m))))
        if np.max(np.abs(m - np.conj(np.swapaxes(m, -1, -2)))) > herm_atol * scale:
            raise InconsistentState("spectral covariance is not Hermitian")
        herm = 0.5 * (m + np.conj(np.swapaxes(m, -1, -2)))
        if np.min(np.linalg.eigvalsh(herm)) < -psd_atol * scale:
            raise InconsistentState("spectral covariance is not positive semidefinite")
        return self

    def diag(self) -> np.ndarray:
        return np.real(np.diagonal(self.matrix, axis1=-2, axis2=-1))


def covariance_from_ports(ports: NoisePortSet) -> SpectralCovariance:
    if len(ports) == 0:
        raise InvalidArgument("need at least one noise port")
    grid = ports.grid
    s = np.zeros((grid.count, NQ, NQ), dtype=complex)
    for lbl, t in ports:
        if t.grid != grid:
            raise InconsistentState(f"port {lbl!r} lives on a different grid")
        s += t.matrix @ np.conj(np.swapaxes(t.matrix, -1, -2))
    return SpectralCovariance(grid, s)


def ladder_to_quadrature(m: np.ndarray) -> np.ndarray:
    """Map (..., 4, 4) operators in the (a_s, a_s^dag, a_i, a_i^dag) basis to quadratures."""
    return GAMMA @ m @ GAMMA_INV


def ladder_to_quadrature_field(m: np.ndarray) -> np.ndarray:
    """Single-field (..., 2, 2) version of :func:`ladder_to_quadrature`."""
    return GAMMA_FIELD @ m @ GAMMA_FIELD_INV
