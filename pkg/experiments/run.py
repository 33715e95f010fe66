#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""Sacred entry point: `python -m experiments.run with case=taylor_couette study=convergence`."""
from typing import Any, Dict

from experiments import sacred_helper
from unfitted_hdg.case_runner import conditioning_sweep, convergence_study, run_case, write_convergence
from unfitted_hdg.utils import ConfigError
from unfitted_hdg.utils_config import resolved_config
from unfitted_hdg.utils_sacred import SolverMetrics
from unfitted_hdg.visualization import utils_visualization

ex = sacred_helper.get_experiment()


def case_overrides(config: Dict[str, Any]) -> Dict[str, Any]:
    """Case options of a Sacred config; study keys and unset (None) options are left out."""
    return {key: value for key, value in config.items()
            if key not in sacred_helper.STUDY_KEYS and key != 'case' and value is not None}


def run_study(_run, metrics: SolverMetrics):
    config = _run.config
    conf = resolved_config(config['case'], case_overrides(config))
    study = config['study']
    if study == 'case':
        run_case(conf, metrics)
    elif study == 'convergence':
        rows = convergence_study(conf, config['meshes'], config['degrees'], metrics)
        write_convergence(rows, metrics, dict(conf.as_dict()))
        if 'plots' in conf.emit:
            for quantity in ('error_u', 'error_p', 'error_u_star'):
                fig = utils_visualization.plot_convergence(rows, quantity)
                metrics.save_figure(fig, f'convergence_{quantity}')
                utils_visualization.close(fig)
    elif study == 'conditioning':
        rows = conditioning_sweep(conf, config['sweep_parameter'], config['sweep_values'], config['face_bases'],
                                  config['degrees'], metrics)
        metrics.save_table(rows, 'conditioning.csv', dict(conf.as_dict()))
    else:
        raise ConfigError(f'Unknown study {study}')


@ex.automain
def main(_run, out_dir):
    metrics = SolverMetrics(_run, out_dir)
    run_study(_run, metrics)
    metrics.flush()
