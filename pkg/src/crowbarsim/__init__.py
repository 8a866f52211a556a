"""DC fault-current and fuse-wire modelling toolkit for crowbar protection design.

The package covers the fault path of a high-voltage 12-pulse diode-rectifier
supply feeding a microwave-tube style load:

* ``core``          electrical parameter types and referred-impedance arithmetic
* ``fusewire``      pre-arc thermal model of the fuse wire used as tube surrogate
* ``fault_model``   closed-form dc fault-current model (capacitor discharge plus
                    second-order follow-on current with correction factor)
* ``rectifier_sim`` brute-force switched-circuit transient simulator, the oracle
                    the analytic model is calibrated against
* ``calibration``   correction-factor solving, sweeping and polynomial fitting
* ``cli``           command-line front end emitting CSV/JSON reports and figures
"""

from crowbarsim.core import (
    ConfigError,
    DcLinkParams,
    EquivalentImpedance,
    SourceParams,
    SystemConfig,
    Topology,
    TransformerParams,
    base_fault_current,
    decay_rate,
    referred_equivalents,
    referred_load_resistance,
    x_r_system,
)
from crowbarsim.fault_model import FaultModel, ModelShape, build_model, correction_factor
from crowbarsim.fusewire import FuseWireGeometry, FuseWireMaterial, design_fuse, simulate_fuse
from crowbarsim.rectifier_sim import SimConfig, SimTrace, simulate, worst_case_fault_angle

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DcLinkParams",
    "EquivalentImpedance",
    "FaultModel",
    "FuseWireGeometry",
    "FuseWireMaterial",
    "ModelShape",
    "SimConfig",
    "SimTrace",
    "SourceParams",
    "SystemConfig",
    "Topology",
    "TransformerParams",
    "base_fault_current",
    "build_model",
    "correction_factor",
    "decay_rate",
    "design_fuse",
    "referred_equivalents",
    "referred_load_resistance",
    "simulate",
    "simulate_fuse",
    "worst_case_fault_angle",
    "x_r_system",
]
