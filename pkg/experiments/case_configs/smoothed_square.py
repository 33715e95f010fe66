# -*- coding: utf-8 -*-
from .default_config import DefaultConfig


class Config(DefaultConfig):
    """
    Square (0.1, 0.9)^2 with rounded corners; the four corner cells are badly cut.
    """
    case = 'smoothed_square'
    mesh = 4
    degree = 4
