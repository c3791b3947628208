"""Custom exception types for clearer error handling."""

class ControlPlaneError(Exception):
    """Base exception for the simulator."""

class ConfigurationError(ControlPlaneError, ValueError):
    """Raised when a construction parameter or run option is invalid."""

class QubitRangeError(ControlPlaneError, IndexError):
    """Raised when qubit coordinates or a linear index fall outside the grid."""

class UnknownQubitError(ControlPlaneError, LookupError):
    """Raised when a qubit is not part of a graph."""

class UnknownEdgeError(ControlPlaneError, LookupError):
    """Raised when an edge to contract does not exist."""

class CapacityError(ControlPlaneError):
    """Raised when a request exceeds what a grid or solver can hold."""

class QuantizationError(ControlPlaneError, ValueError):
    """Raised when a weight cannot be represented in eighths within [-1, +1]."""

class IncompleteConfigError(ControlPlaneError):
    """Raised when a spin configuration leaves nodes unassigned."""

class ParameterError(ControlPlaneError, ValueError):
    """Raised when an operation parameter is outside its domain."""

class TopologyError(ControlPlaneError):
    """Raised when problem weights reference edges the graph does not have."""

class DegenerateDesignError(ControlPlaneError):
    """Raised when a DAC design has a zero fine-stage weight."""

class DacStateError(ControlPlaneError):
    """Raised when a DAC state exceeds the capacity of its design."""

class TargetRangeError(ControlPlaneError, ValueError):
    """Raised when a target flux is beyond the reachable span of a design."""

class MarginError(ControlPlaneError):
    """Raised when bias levels do not satisfy the margining criteria."""

class ResetConditionError(ControlPlaneError):
    """Raised when reset bias levels cannot drive the reset protocol."""

class ResetUnreliableError(ControlPlaneError):
    """Raised when junction asymmetry prevents a reliable reset to zero."""

class CompileError(ControlPlaneError):
    """Raised when programming targets cannot be compiled."""

class SlotLookupError(ControlPlaneError, LookupError):
    """Raised when a DAC slot or address is not part of the fabric."""

class DataValidationError(ControlPlaneError):
    """Raised when expected data is missing or malformed."""

class ArtifactReadError(ControlPlaneError):
    """Raised when an input file cannot be read."""
