"""Assemble the OPO -> test cavity -> detection-loss chain from a config."""

from __future__ import annotations

from .config import ExperimentConfig
from .elements import cascade, cavity_ports, loss_ports, opo_ports
from .spectral import FrequencyGrid, NoisePortSet, SpectralCovariance, covariance_from_ports


def build_ports(cfg: ExperimentConfig, grid: FrequencyGrid | None = None) -> NoisePortSet:
    grid = cfg.grid.to_grid() if grid is None else grid
    stages = []
    if cfg.cavity.enabled:
        stages.append(cavity_ports(cfg.cavity.to_params(), grid))
    stages.append(loss_ports(cfg.losses.to_params(), grid))
    return cascade(opo_ports(cfg.opo.to_params(), grid), *stages)


def build_covariance(cfg: ExperimentConfig, grid: FrequencyGrid | None = None) -> SpectralCovariance:
    return covariance_from_ports(build_ports(cfg, grid))
