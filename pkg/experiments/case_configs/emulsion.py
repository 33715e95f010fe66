# -*- coding: utf-8 -*-
from .default_config import DefaultConfig


class Config(DefaultConfig):
    """
    Droplets of fluid 1 around a rigid pore in a periodic cell, driven by gravity.

    The full resolution is mesh = 32.
    """
    case = 'emulsion'
    mesh = 16
    degree = 2
    periodic = 'xy'
    mu1 = 40.
    mu2 = 4.
    gamma = 2.4e5
