"""Shared exception types."""


class SimulationLimitError(RuntimeError):
    """Raised when a run would exceed its time horizon or leak amplitude
    off the stored grid (the causal-cone sizing guarantee is violated)."""
