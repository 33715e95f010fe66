# -*- coding: utf-8 -*-
import os
from collections import defaultdict
from typing import Dict, List, Any, Optional, Sequence

import numpy as np
import pandas as pd
from matplotlib.figure import Figure
from numpy import ndarray
from sacred.run import Run


class SolverMetrics:
    """Collects metrics over a series of solves and writes the artifacts of a run.

    Scalars logged at the same counter are averaged on upload to Sacred. Without a Sacred run the metrics are kept
    in memory and the artifacts are written to out_dir only.
    """

    def __init__(self, _run: Optional[Run] = None, out_dir: str = 'unfitted_hdg_results'):
        self._run = _run
        self.out_dir = out_dir
        # Values are a [key][counter] = list of values
        self._aggregated_metrics = defaultdict(lambda: defaultdict(lambda: []))
        self._non_aggregated_metrics = defaultdict(lambda: defaultdict(lambda: []))

    def log_scalar(self, metric_name, value, counter):
        """Add metric_name=value at t=counter to the logs. Does not send logs to Sacred, call flush() for this."""
        if metric_name in self._non_aggregated_metrics:
            raise ValueError(f'{metric_name} already logged as a non-scalar metric')

        self._aggregated_metrics[metric_name][counter].append(float(value))

    def log_scalars(self, metrics: Dict[str, float], counter):
        for k, v in metrics.items():
            self.log_scalar(k, v, counter)

    def log_non_scalar(self, metric_name, value, counter):
        """Logs metric_name=value at t=counter. As 'value' is non-scalar, it will not be averaged."""
        if metric_name in self._aggregated_metrics:
            raise ValueError(f'{metric_name} already logged as a scalar metric')

        self._non_aggregated_metrics[metric_name][counter].append(value)

    def log_non_scalars(self, metrics: Dict[str, Any], counter):
        for k, v in metrics.items():
            self.log_non_scalar(k, v, counter)

    def means(self) -> Dict[str, Dict[int, float]]:
        return dict(self._compute_means(self._aggregated_metrics))

    def flush(self):
        """Uploads the metrics in the buffer, and their means, to Sacred. Then clears the buffer."""
        if self._run is not None:
            self._upload_metric_means()
            self._run.info['all_metrics'] = {**self._default_dict_to_dict(self._aggregated_metrics),
                                             **self._default_dict_to_dict(self._non_aggregated_metrics)}
            print('Uploaded metrics to Sacred')
        self._aggregated_metrics.clear()
        self._non_aggregated_metrics.clear()

    def _upload_metric_means(self) -> None:
        for metric_name, by_counter in self._compute_means(self._aggregated_metrics).items():
            for t, value in by_counter.items():
                self._run.log_scalar(metric_name, value, t)

    @staticmethod
    def _compute_means(metrics: Dict[str, Dict[int, List[float]]]) -> Dict[str, Dict[int, float]]:
        mean_metrics = defaultdict(lambda: {})
        for metric_name, by_counter in metrics.items():
            for t, values in by_counter.items():
                mean_metrics[metric_name][t] = sum(values) / len(values)
        return mean_metrics

    @staticmethod
    def _default_dict_to_dict(d):
        if isinstance(d, defaultdict):
            return {k: SolverMetrics._default_dict_to_dict(v) for k, v in d.items()}
        else:
            return d

    def _file_name(self, name: str) -> str:
        if self._run is not None and self._run._id is not None:
            return f'{self._run._id}_{name}'
        return name

    def _add_artifact(self, file_path: str) -> None:
        if self._run is not None:
            self._run.add_artifact(file_path)

    def save_figure(self, figure: Figure, name: str) -> str:
        """Saves the given figure as png, and adds it as an artifact to sacred."""
        file_path = os.path.join(self._get_artifacts_dir(), f'{self._file_name(name)}.png')
        figure.savefig(file_path)
        self._add_artifact(file_path)
        return file_path

    def save_array(self, array: ndarray, name: str) -> str:
        file_path = os.path.join(self._get_artifacts_dir(), self._file_name(name))
        np.save(file_path, array)
        self._add_artifact(f'{file_path}.npy')
        return f'{file_path}.npy'

    def save_table(self, rows: Sequence[Dict[str, Any]], name: str, config: Dict[str, Any] = None) -> str:
        """Writes rows as a csv table, preceded by one '# key = value' line per config entry."""
        file_path = os.path.join(self._get_artifacts_dir(), self._file_name(name))
        with open(file_path, 'w') as f:
            for key, value in sorted((config or {}).items()):
                f.write(f'# {key} = {value!r}\n')
            pd.DataFrame(list(rows)).to_csv(f, index=False)
        self._add_artifact(file_path)
        return file_path

    def save_text(self, text: str, name: str) -> str:
        file_path = os.path.join(self._get_artifacts_dir(), self._file_name(name))
        with open(file_path, 'w') as f:
            f.write(text)
        self._add_artifact(file_path)
        return file_path

    def _get_artifacts_dir(self) -> str:
        os.makedirs(self.out_dir, exist_ok=True)
        return self.out_dir
