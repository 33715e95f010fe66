# -*- coding: utf-8 -*-
"""Loading, merging and checking of case configurations."""
import ast
from importlib import import_module
from importlib.util import module_from_spec, spec_from_file_location
from os.path import abspath, basename, exists, splitext
from typing import Any, Dict, Tuple

from experiments.case_configs.default_config import DefaultConfig
from .bases import FACE_BASIS_KINDS, K_MAX, K_MIN
from .cases import CASES, PERIODIC_AXES, PERIODIC_CASES
from .postprocess_adapt import FLUX_VARIANTS
from .utils import ConfigError

EMIT_KINDS = ('report', 'fields', 'plots')


def load_config(conf_name: str) -> DefaultConfig:
    """Config of a named case, or of a python file defining a `Config` class."""
    if conf_name in CASES:
        configuration = import_module(f'experiments.case_configs.{conf_name}')
    elif exists(abspath(conf_name)) and conf_name.endswith('.py'):
        module_name = splitext(basename(conf_name))[0]
        spec = spec_from_file_location(module_name, abspath(conf_name))
        configuration = module_from_spec(spec)
        spec.loader.exec_module(configuration)
    else:
        raise ConfigError(f'Unknown case or config file {conf_name}, expected one of {CASES}')

    if not hasattr(configuration, 'Config'):
        raise ConfigError(f'{conf_name} does not define a Config class')
    return configuration.Config()


def parse_config_text(text: str) -> Dict[str, Any]:
    """Options of `key = value` lines, values being python literals or bare strings.

    >>> parse_config_text("mesh = 16  # elements\\nface_basis = lagrange\\nemit = ('report',)")
    {'mesh': 16, 'face_basis': 'lagrange', 'emit': ('report',)}
    """
    options = {}
    for line_number, line in enumerate(text.splitlines(), 1):
        line = line.split('#', 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition('=')
        key, value = key.strip(), value.strip()
        if not sep or not key.isidentifier() or not value:
            raise ConfigError(f'Malformed config line {line_number}: {line!r}')
        try:
            options[key] = ast.literal_eval(value)
        except (ValueError, SyntaxError):
            options[key] = value
    return options


def read_config_file(path: str) -> Dict[str, Any]:
    if not exists(path):
        raise ConfigError(f'Config file {path} does not exist')
    with open(path) as f:
        return parse_config_text(f.read())


def check_config_conflicts(conf: DefaultConfig) -> Tuple[bool, str]:
    """ Check if there are conflicting options in the Config

    Parameters
    ----------
    conf: Config
        The config file

    Returns
    -------
    has_conflict: Bool
        True, if there is a conflict in the config
    conflict_str: String
        The error message

    """
    if conf.case not in CASES:
        return True, f"Unknown case {conf.case}"
    if not isinstance(conf.mesh, int) or conf.mesh < 1:
        return True, f"mesh must be a positive number of elements, got {conf.mesh}"
    if conf.degree is not None and conf.adapt_tolerance is not None:
        return True, "Give either a degree or an adapt tolerance, not both"
    if conf.degree is None and conf.adapt_tolerance is None:
        return True, "Neither a degree nor an adapt tolerance is given"
    if conf.degree is not None and not K_MIN <= conf.degree <= K_MAX:
        return True, f"degree must lie in [{K_MIN}, {K_MAX}], got {conf.degree}"
    if conf.adapt_tolerance is not None:
        if conf.adapt_tolerance <= 0:
            return True, f"adapt_tolerance must be positive, got {conf.adapt_tolerance}"
        if conf.mesh < 2:
            return True, "Degree adaptivity needs an element size below one"
        if not K_MIN <= conf.k_min <= conf.k_initial <= conf.k_max <= K_MAX:
            return True, f"Need {K_MIN} <= k_min <= k_initial <= k_max <= {K_MAX}"
    if conf.face_basis not in FACE_BASIS_KINDS:
        return True, f"Unknown face basis {conf.face_basis}"
    if not 0 < conf.alpha_min < 1:
        return True, f"alpha_min must lie in (0, 1), got {conf.alpha_min}"
    if conf.periodic is not None:
        if conf.periodic not in PERIODIC_AXES:
            return True, f"Unknown value for periodic, {conf.periodic}"
        if conf.case not in PERIODIC_CASES:
            return True, f"Case {conf.case} does not support periodic boundaries"
    if conf.neumann_sides and conf.case != 'manufactured':
        return True, "Neumann sides are only available for the manufactured case"
    if conf.case == 'm_shape' and conf.mesh % 4:
        return True, "The M-shape needs a multiple of 4 elements per direction"
    unknown = set(conf.emit) - set(EMIT_KINDS)
    if unknown:
        return True, f"Unknown output kinds {sorted(unknown)}"
    if conf.flux_variant not in FLUX_VARIANTS:
        return True, f"Unknown flux variant {conf.flux_variant}"

    return False, ""


def resolved_config(conf_name: str, overrides: Dict[str, Any] = None) -> DefaultConfig:
    """Load a config, apply overrides and raise a ConfigError on conflicts."""
    conf = load_config(conf_name)
    conf.add_sacred_config(exclusive_order(overrides or {}))
    conflict, conflict_str = check_config_conflicts(conf)
    if conflict:
        raise ConfigError("There are conflicting settings: {}".format(conflict_str))
    return conf


def exclusive_order(options: Dict[str, Any]) -> Dict[str, Any]:
    """Setting one of degree and adapt_tolerance clears the other.

    >>> exclusive_order({'adapt_tolerance': 1e-2})
    {'adapt_tolerance': 0.01, 'degree': None}
    """
    options = dict(options)
    if options.get('degree') is not None and 'adapt_tolerance' not in options:
        options['adapt_tolerance'] = None
    if options.get('adapt_tolerance') is not None and 'degree' not in options:
        options['degree'] = None
    return options
