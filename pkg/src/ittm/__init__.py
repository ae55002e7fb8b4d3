"""Desk-scale transfinite Turing machine toolkit.

Exact execution through ordinal stages under a configurable budget, oracle
machines and halting-set jumps, approximation streams, the iterated-jump
injury matrix, and the transfinite priority construction.
"""

__version__ = "0.1.0"
