"""Port-based teleportation toolkit.

Two computation paths for the same physics: exact analytic figures of merit
(success probabilities, fidelities, conversions, resource-state overlaps,
superdense-coding capacity) and a brute-force operator-level simulator that
rebuilds states and measurements at small (N, d) to verify the analytic path.
"""

__version__ = "0.1.0"
