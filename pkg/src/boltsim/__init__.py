"""boltsim: deterministic bolt-tightening simulator and control stack."""

from boltsim._speedup import backend_name

__version__ = "0.1.0"

__all__ = ["backend_name", "__version__"]
