"""Open-system simulator for error-corrected number-selective phase gates on
a cavity-encoded logical qubit with a multilevel transmon ancilla."""

__version__ = "0.1.0"
