"""Optomechanical bistability and coupling sensing in two waveguide-coupled cavities."""

__version__ = "0.1.0"

from .params import PhysicalParams, ReducedParams, paper_params  # noqa: E402

__all__ = ["PhysicalParams", "ReducedParams", "paper_params", "__version__"]
