"""Numerical laboratory for spectral multipliers of sectorial operators.

Submodules are imported on demand so that ``mlab`` itself stays cheap to
import (the CLI reads its thread settings before numpy loads).
"""

__version__ = "0.1.0"

__all__ = ["funcspec", "partitions", "transforms", "norms", "operators", "poisson",
           "experiments", "__version__"]
