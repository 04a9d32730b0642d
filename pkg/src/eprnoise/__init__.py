"""Frequency-domain quantum-noise model of EPR-entangled squeezing.

Signal and idler fields from a non-degenerate OPO are propagated through a
detuned test cavity and detection losses as 4x4 quadrature transfer matrices;
homodyne readouts of both fields are then recombined with fixed or optimal
(Wiener) gains.
"""

__version__ = "0.1.0"

from .analysis import (
    ClfParams,
    LossFit,
    LossFitInput,
    LossRecord,
    clf_reflection_error,
    clf_transmission_error,
    fit_detection_loss,
    methods_loss_oracle,
    pump_for_squeezing,
    v_cond_oracle,
    v_out_oracle,
    v_pm_oracle,
)
from .elements import (
    CavityParams,
    LossChannel,
    OpoParams,
    cascade,
    cavity_ports,
    compose,
    loss_ports,
    opo_ports,
    phase_shift,
)
from .readout import (
    ReadoutConfig,
    SpectrumResult,
    angle_sweep,
    homodyne_variance,
    optimal_readout_angle,
    to_db,
    wiener_conditional,
)
from .spectral import (
    FrequencyGrid,
    NoisePortSet,
    QuadratureTransfer,
    SpectralCovariance,
    covariance_from_ports,
    make_grid,
)
