# -*- coding: utf-8 -*-
from .default_config import DefaultConfig


class Config(DefaultConfig):
    """
    Microchannel with eight circular obstacles, inflow (0, -1) on top and a traction free outlet.
    """
    case = 'microchannel'
    mesh = 32
    degree = None
    adapt_tolerance = 1e-2
    emit = ('report', 'plots')
