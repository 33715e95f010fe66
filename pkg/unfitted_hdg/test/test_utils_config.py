# -*- coding: utf-8 -*-
import pytest

from experiments.case_configs.default_config import DefaultConfig
from ..cases import CASES
from ..utils import ConfigError
from ..utils_config import load_config, parse_config_text, read_config_file, check_config_conflicts, \
    resolved_config, exclusive_order


@pytest.mark.parametrize('case', CASES)
def test__load_config__every_case__conflict_free(case):
    conf = load_config(case)
    assert conf.case == case
    assert check_config_conflicts(conf) == (False, "")


def test__load_config__unknown_name__raises():
    with pytest.raises(ConfigError):
        load_config('lid_driven_cavity')


def test__load_config__python_file__uses_its_config(tmp_path):
    path = tmp_path / 'my_case.py'
    path.write_text("from experiments.case_configs.default_config import DefaultConfig\n\n\n"
                    "class Config(DefaultConfig):\n    case = 'bubble'\n    mesh = 4\n")
    conf = load_config(str(path))
    assert (conf.case, conf.mesh) == ('bubble', 4)


def test__add_sacred_config__undeclared_key__raises():
    conf = load_config('bubble')
    with pytest.raises(ConfigError):
        conf.add_sacred_config({'reynolds': 100})
    conf.add_sacred_config({'__doc__': 'ignored', 'mesh': 16})
    assert conf.mesh == 16


def test__updated__copy__original_unchanged():
    conf = load_config('bubble')
    other = conf.updated(mesh=32)
    assert other.mesh == 32 and conf.mesh == 8


def test__as_dict__resolved_values__attribute_access():
    d = load_config('emulsion').as_dict()
    assert d.mu1 == 40. and d.periodic == 'xy'
    assert 'add_sacred_config' not in d


def test__parse_config_text__literals_strings_and_comments():
    options = parse_config_text("# header\nmesh = 8\nadapt_tolerance = 1e-2 # eps\nface_basis = lagrange\n\n"
                                "neumann_sides = ('right', 'top')\nextension = False\n")
    assert options == {'mesh': 8, 'adapt_tolerance': 1e-2, 'face_basis': 'lagrange',
                       'neumann_sides': ('right', 'top'), 'extension': False}


@pytest.mark.parametrize('text', ['mesh 8', '= 3', 'mesh =', '2x = 1'])
def test__parse_config_text__malformed_line__raises(text):
    with pytest.raises(ConfigError, match='line 1'):
        parse_config_text(text)


def test__read_config_file__missing_file__raises(tmp_path):
    with pytest.raises(ConfigError):
        read_config_file(str(tmp_path / 'missing.cfg'))


@pytest.mark.parametrize('overrides, message', [
    ({'degree': 2, 'adapt_tolerance': 1e-2}, 'not both'),
    ({'degree': None}, 'Neither'),
    ({'degree': 11}, 'degree must lie'),
    ({'degree': None, 'adapt_tolerance': -1.}, 'positive'),
    ({'degree': None, 'adapt_tolerance': 1e-2, 'mesh': 1}, 'below one'),
    ({'degree': None, 'adapt_tolerance': 1e-2, 'k_min': 5, 'k_max': 3}, 'k_min'),
    ({'face_basis': 'chebyshev'}, 'face basis'),
    ({'alpha_min': 1.}, 'alpha_min'),
    ({'periodic': 'z'}, 'periodic'),
    ({'emit': ('report', 'movie')}, 'output kinds'),
    ({'flux_variant': 'hybrid'}, 'flux variant'),
    ({'mesh': 0}, 'positive number'),
    ({'neumann_sides': ('top',)}, 'Neumann'),
])
def test__check_config_conflicts__bad_bubble_settings__reported(overrides, message):
    conf = load_config('bubble').updated(**overrides)
    conflict, conflict_str = check_config_conflicts(conf)
    assert conflict
    assert message in conflict_str


def test__check_config_conflicts__periodic_on_taylor_couette__reported():
    conflict, conflict_str = check_config_conflicts(load_config('taylor_couette').updated(periodic='x'))
    assert conflict and 'periodic' in conflict_str


def test__check_config_conflicts__m_shape_mesh_not_multiple_of_four__reported():
    conflict, _ = check_config_conflicts(load_config('m_shape').updated(mesh=6))
    assert conflict


def test__check_config_conflicts__unknown_case__reported():
    conflict, _ = check_config_conflicts(DefaultConfig())
    assert conflict


def test__exclusive_order__degree__clears_tolerance():
    assert exclusive_order({'degree': 3}) == {'degree': 3, 'adapt_tolerance': None}
    assert exclusive_order({'degree': 3, 'adapt_tolerance': 1e-2}) == {'degree': 3, 'adapt_tolerance': 1e-2}


def test__resolved_config__adapt_override__replaces_case_degree():
    conf = resolved_config('bubble', {'adapt_tolerance': 1e-3})
    assert conf.degree is None and conf.adapt_tolerance == 1e-3


def test__resolved_config__conflict__raises():
    with pytest.raises(ConfigError, match='conflicting'):
        resolved_config('bubble', {'alpha_min': 0.})
