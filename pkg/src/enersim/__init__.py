"""Simulation workbench for energy-systems mathematics.

Engines:

* :mod:`enersim.syndata` -- binned conditional-probability synthetic tabular data
* :mod:`enersim.mfg` -- 1-D mean-field game for thermostatic cooling (upwind FV + Picard)
* :mod:`enersim.morph_mc` -- Kawasaki Monte Carlo for a three-species lattice mixture
* :mod:`enersim.morph_pde` -- nonlocal two-field continuum model on a periodic grid
"""

__version__ = "0.1.0"

from enersim.errors import (
    ConsistencyError,
    DegenerateFeatureError,
    DimensionError,
    EnersimError,
    InputError,
    NumericalError,
    RangeError,
    StabilityError,
)

__all__ = [
    "__version__",
    "ConsistencyError",
    "DegenerateFeatureError",
    "DimensionError",
    "EnersimError",
    "InputError",
    "NumericalError",
    "RangeError",
    "StabilityError",
]
