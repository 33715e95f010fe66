# -*- coding: utf-8 -*-
import numpy as np
import pytest

from ..utils_sacred import SolverMetrics


class TestSolverMetrics:
    @staticmethod
    def _create_run(mocker):
        _run = mocker.Mock()
        _run.info = dict()
        _run._id = 7
        return _run

    def test__log_scalars__adds_metrics_to_queue(self, mocker):
        _run = self._create_run(mocker)
        metrics = SolverMetrics(_run)

        metrics.log_scalars({'error_u': 0.0, 'kappa_glob': 100.0}, 4)
        metrics.log_scalars({'error_u': 10.0}, 4)
        metrics.log_scalars({'error_u': 10.0}, 8)
        metrics.log_scalars({'error_u': 20.0}, 8)

        metrics.flush()

        expected_metrics = {
            'error_u': {4: [0.0, 10.0], 8: [10.0, 20.0]},
            'kappa_glob': {4: [100.0]}
        }
        assert _run.info['all_metrics'] == expected_metrics

    def test__flush__uploads_means_to_sacred(self, mocker):
        _run = self._create_run(mocker)
        metrics = SolverMetrics(_run)

        metrics.log_scalar('error_u', 0.0, 4)
        metrics.log_scalar('error_u', 10.0, 4)
        metrics.log_scalar('error_u', 10.0, 8)
        metrics.log_scalar('error_u', 20.0, 8)
        metrics.log_scalar('kappa_glob', 100.0, 4)

        metrics.flush()

        calls = _run.log_scalar.call_args_list
        assert len(calls) == 3
        assert calls[0][0] == ('error_u', 5.0, 4)
        assert calls[1][0] == ('error_u', 15.0, 8)
        assert calls[2][0] == ('kappa_glob', 100.0, 4)

    def test__log_non_scalar__name_already_scalar__raises(self, mocker):
        metrics = SolverMetrics(self._create_run(mocker))
        metrics.log_scalar('degrees', 1., 0)
        with pytest.raises(ValueError):
            metrics.log_non_scalar('degrees', [1, 2], 0)

    def test__flush__clears_buffer(self, mocker):
        _run = self._create_run(mocker)
        metrics = SolverMetrics(_run)

        metrics.log_scalar('error_u', 0.0, 1)
        metrics.log_non_scalar('degrees', [1, 2], 1)
        metrics.flush()
        metrics.log_scalar('error_p', 0.0, 1)
        metrics.flush()

        assert 'error_u' not in _run.info['all_metrics']
        assert 'degrees' not in _run.info['all_metrics']

    def test__flush__without_run__keeps_nothing_and_does_not_crash(self, tmp_path):
        metrics = SolverMetrics(out_dir=str(tmp_path))
        metrics.log_scalar('error_u', 2.0, 1)
        metrics.log_scalar('error_u', 4.0, 1)
        assert metrics.means() == {'error_u': {1: 3.0}}
        metrics.flush()
        assert metrics.means() == {}

    def test__save_table__config_header_and_rows(self, mocker, tmp_path):
        _run = self._create_run(mocker)
        metrics = SolverMetrics(_run, str(tmp_path))

        path = metrics.save_table([{'mesh': 4, 'error_u': 0.5}, {'mesh': 8, 'error_u': 0.125}], 'table.csv',
                                  {'case': 'bubble', 'degree': 1})

        lines = open(path).read().splitlines()
        assert path.endswith('7_table.csv')
        assert lines[:2] == ["# case = 'bubble'", "# degree = 1"]
        assert lines[2] == 'mesh,error_u'
        assert lines[3:] == ['4,0.5', '8,0.125']
        _run.add_artifact.assert_called_once_with(path)

    def test__save_array__without_run__file_in_out_dir(self, tmp_path):
        metrics = SolverMetrics(out_dir=str(tmp_path / 'nested'))
        path = metrics.save_array(np.arange(3), 'degrees')
        assert np.array_equal(np.load(path), np.arange(3))

    def test__save_figure__png_artifact(self, mocker, tmp_path, check_has_matplotlib):
        import matplotlib.pyplot as plt

        _run = self._create_run(mocker)
        metrics = SolverMetrics(_run, str(tmp_path))
        fig, ax = plt.subplots()
        ax.plot([0, 1], [1, 0])
        path = metrics.save_figure(fig, 'line')
        plt.close(fig)
        assert path.endswith('7_line.png')
        _run.add_artifact.assert_called_once_with(path)
