# -*- coding: utf-8 -*-
from .default_config import DefaultConfig


class Config(DefaultConfig):
    """
    Polynomial Stokes solution on the fitted unit square, all sides Dirichlet.
    """
    case = 'manufactured'
    mesh = 4
    degree = 2
