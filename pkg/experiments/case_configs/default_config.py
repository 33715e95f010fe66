# -*- coding: utf-8 -*-
import copy
import inspect
import warnings
from os import makedirs
from os.path import join
from shutil import copy as copy_file
from typing import Dict, Any

from easydict import EasyDict

from unfitted_hdg.utils import ConfigError


class DefaultConfig(object):
    """
    Options shared by all cases. None means: use the case default.
    """
    # the verbosity level
    verbosity = 1

    # -- Case
    # One of the names in unfitted_hdg.cases.CASES.
    case = None
    # Number of elements per direction of the background grid.
    mesh = 8
    # Optional geometry file replacing the curves of the case.
    geometry_file = None
    # None, 'x', 'y' or 'xy'. Only for cases with a periodic cell.
    periodic = None
    # Sides of the unit square with traction data instead of velocity data (manufactured case only).
    neumann_sides = ()
    # Height of the notch tip above y = 0.75 (M-shape only).
    m_shape_epsilon = 0.1

    # -- Discretization
    # Uniform polynomial degree; None when adapting.
    degree = 1
    # 'legendre' or 'lagrange' basis for the hybrid velocity.
    face_basis = 'legendre'
    # Minimum number of samples per curve when locating crossings.
    n_samples = 100
    # Cells with a smaller fluid area ratio are extended.
    alpha_min = 0.3
    extension = True

    # -- Physics
    mu1 = None
    mu2 = None
    gamma = None
    # tau = c_tau max(mu) / ell on the skeleton, eta / h on immersed Dirichlet curves.
    c_tau = None
    ell = None
    eta = None

    # -- Degree adaptivity
    # Target error of the postprocessed velocity; None for a single solve.
    adapt_tolerance = None
    k_initial = 1
    k_min = 1
    k_max = 6
    max_adapt_iterations = 10

    # -- Output
    out_dir = 'unfitted_hdg_results'
    # Sub directory of out_dir, None to write into out_dir.
    save_dir = None
    # Any of 'report', 'fields', 'plots'.
    emit = ('report',)
    # Velocity on immersed Dirichlet curves in the mass flux report: 'element' measures the
    # cut-cell mass defect, 'data' the compatibility balance.
    flux_variant = 'element'
    compute_condition_numbers = True

    def create_savedirs(self) -> str:
        """Create the output directory, copy the config file into it and return its path."""
        res_path = self.out_dir if self.save_dir is None else join(self.out_dir, self.save_dir)
        makedirs(res_path, exist_ok=True)
        self.save_path = res_path

        source = inspect.getsourcefile(type(self))
        if source is not None and type(self) is not DefaultConfig:
            try:
                copy_file(source, res_path)
            except OSError as e:
                warnings.warn(f'Could not copy the config file: {e}')
        return res_path

    def add_sacred_config(self, config: Dict[str, Any]) -> None:
        """Overrides declared options with the pairs of the given dict.

        :raises ConfigError: if a key is not a declared option
        """
        declared = {key for key in dir(self) if not key.startswith('_') and not callable(getattr(self, key))}
        for key, value in config.items():
            if key.startswith('_'):
                # This ignores things like doc strings.
                continue

            if key not in declared:
                raise ConfigError(f'Unknown option \'{key}\' with value \'{value}\'')

            setattr(self, key, value)

    def updated(self, **overrides) -> 'DefaultConfig':
        """A copy of this config with some options replaced."""
        conf = copy.copy(self)
        conf.add_sacred_config(overrides)
        return conf

    def as_dict(self) -> EasyDict:
        """All options with their resolved values."""
        return EasyDict({key: getattr(self, key) for key in dir(self)
                         if not key.startswith('_') and not callable(getattr(self, key))})
