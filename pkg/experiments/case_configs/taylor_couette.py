# -*- coding: utf-8 -*-
from .default_config import DefaultConfig


class Config(DefaultConfig):
    """
    Coaxial Taylor-Couette flow between circles of radius 1/6 (at rest) and 1/3 (unit angular velocity).
    """
    case = 'taylor_couette'
    mesh = 16
    degree = 2
