"""Storage-efficient atomic register emulations over crash-prone servers.

The package bundles erasure coding over GF(2^8), client and server state
machines for several register algorithms, a seeded asynchronous
simulator, an atomicity checker, and storage/communication cost metrics.
"""

from .core import ModelViolation, SystemParams, Tag, compute_k, reduce_nodes

__version__ = "0.1.0"

__all__ = ["ModelViolation", "SystemParams", "Tag", "compute_k", "reduce_nodes", "__version__"]
