# -*- coding: utf-8 -*-
from .default_config import DefaultConfig


class Config(DefaultConfig):
    """
    Circular bubble of radius 1/3 at equilibrium, mu = (10, 1), gamma = 1.
    """
    case = 'bubble'
    mesh = 8
    degree = 1
    mu1 = 10.
    mu2 = 1.
    gamma = 1.
