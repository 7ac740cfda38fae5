"""Numerical wavelet and coorbit machinery for semidirect products R^d x H."""

from .fourier import FreqGrid
from .group import DilationGroup, GroupSample, dual_action, haar_samples
from .sets import Annulus, Box, FrequencySet, Image, Union
from .window import Window, build_bump_window, calderon_integral, normalize_calderon

__version__ = "0.1.0"

__all__ = [
    "Annulus",
    "Box",
    "DilationGroup",
    "FreqGrid",
    "FrequencySet",
    "GroupSample",
    "Image",
    "Union",
    "Window",
    "build_bump_window",
    "calderon_integral",
    "dual_action",
    "haar_samples",
    "normalize_calderon",
]
