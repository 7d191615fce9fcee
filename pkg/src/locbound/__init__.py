"""Cramér-Rao bounds for source localisation in Poisson sensor networks."""

__version__ = "0.1.0"

from .bounds import (BoundResult, crb_lb, evaluate_bounds, narrowband_bound,  # noqa: E402
                     sandwich_check, wideband_bound, z_of_s)
from .crb import AvgCrbEstimate, FisherInfo, avg_crb, crb_realization, fim  # noqa: E402
from .geometry import SensorField, SourceLocation, polar_of, sample_ppp  # noqa: E402
from .model import ChannelParams, KernelMode, Pulse, effective_bandwidth, g_kernel  # noqa: E402
from .numerics import QuadratureSpec  # noqa: E402

__all__ = [
    "__version__", "BoundResult", "crb_lb", "evaluate_bounds", "narrowband_bound",
    "sandwich_check", "wideband_bound", "z_of_s", "AvgCrbEstimate", "FisherInfo",
    "avg_crb", "crb_realization", "fim", "SensorField", "SourceLocation", "polar_of",
    "sample_ppp", "ChannelParams", "KernelMode", "Pulse", "effective_bandwidth",
    "g_kernel", "QuadratureSpec",
]
