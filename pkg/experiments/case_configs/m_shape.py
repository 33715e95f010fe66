# -*- coding: utf-8 -*-
from .default_config import DefaultConfig


class Config(DefaultConfig):
    """
    M-shaped domain whose notch leaves a face cut of epsilon / 0.25.

    Used to compare the conditioning of Lagrange and Legendre face bases.
    """
    case = 'm_shape'
    mesh = 4
    degree = 2
    m_shape_epsilon = 0.15
