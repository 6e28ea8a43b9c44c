"""Classical emulator for hybrid variational quantum dynamics with noisy
circuits, active error mitigation and Trotter baselines."""

__version__ = "0.1.0"

from .paulis import PauliString
from .gates import GateInstance
from .states import DensityOperator, PureState, apply_gate, expectation, trace_distance
from .channels import NoiseChannel, NoiseModel, apply_channel
