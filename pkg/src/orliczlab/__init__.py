"""Desk-scale laboratory for Orlicz norms, concentration profiles and
the exponential Klein-Gordon equation in two dimensions."""

from .fields import Field2D, LogRadialField
from .orlicz import (OrliczParams, calibrate_kappa, grad_l2_norm_sq,
                     h1_norm_sq, l2_norm_sq, lq_norm, luxemburg_norm, phi_p,
                     tm_functional)

__all__ = [
    "Field2D", "LogRadialField", "OrliczParams", "phi_p", "luxemburg_norm",
    "tm_functional", "grad_l2_norm_sq", "l2_norm_sq", "lq_norm",
    "h1_norm_sq", "calibrate_kappa",
]

__version__ = "0.1.0"
