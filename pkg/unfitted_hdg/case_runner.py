# -*- coding: utf-8 -*-
"""Run benchmark cases end to end and write their reports.

A run goes through classification, quadrature, the Stokes solve (or the
degree adaptivity loop), postprocessing and the error, flux and conditioning
summaries. Sweeps over meshes, degrees or case parameters are built on top
of single runs and return flat rows that the report writers turn into tables.
"""
import io
import time
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from experiments.case_configs.default_config import DefaultConfig
from .cases import Case, create_case
from .cut_classification import VOID, CutTopology, classify
from .hdg_solver import Solution, solve_stokes
from .nefem_quadrature import CutQuadrature
from .postprocess_adapt import (error_norms, estimate_error, flux_report, postprocess_velocity, pressure_jump,
                                run_adaptivity)
from .utils import ConfigError, UnfittedHdgError, least_squares_slope
from .utils_config import check_config_conflicts
from .utils_sacred import SolverMetrics

ERROR_QUANTITIES = ('error_u', 'error_p', 'error_L', 'error_u_star')
RATE_FLOOR = 1e-11


class CaseResult:
    """Everything a single run produced.

    Attributes
    ----------
    conf: DefaultConfig
    case: Case
    topology: CutTopology
    solution: Solution
    errors: Dict[str, float]
        L2 errors 'error_u', 'error_p', 'error_L', 'error_u_star' when the case has a reference.
    estimates: np.ndarray[float]
        Element error estimates E_e of the postprocessed velocity.
    flux: FluxReport
    condition: Dict[str, float]
        'kappa_loc_max' and 'kappa_glob', empty when not computed.
    pressure_jumps: Dict[int, float]
        Interface cell -> mean pressure jump.
    adapt_state: AdaptState or None
    adapt_trace: List[Dict]
    files: List[str]
        Written report files.
    """

    def __init__(self, conf: DefaultConfig, case: Case, topology: CutTopology, solution: Solution):
        self.conf = conf
        self.case = case
        self.topology = topology
        self.solution = solution
        self.errors = {}
        self.estimates = np.zeros(topology.n_elements)
        self.flux = None
        self.condition = {}
        self.pressure_jumps = {}
        self.adapt_state = None
        self.adapt_trace = []
        self.files = []

    @property
    def h(self) -> float:
        return float(self.topology.mesh.element_size)

    def summary_row(self) -> Dict[str, Any]:
        """One flat row describing the run, used by the solver report and the sweeps."""
        active = self.topology.active_elements()
        degrees = self.solution.degrees[active]
        row = {'case': self.case.name, 'mesh': self.conf.mesh, 'h': self.h,
               'degree': int(degrees[0]) if np.all(degrees == degrees[0]) else 'adaptive',
               'k_min': int(np.min(degrees)), 'k_max': int(np.max(degrees)),
               'face_basis': self.conf.face_basis, 'n_active': len(active),
               'n_extended': len(self.topology.extension), 'smallest_beta': smallest_face_ratio(self.topology),
               'residual': self.solution.system.residual,
               'max_estimate': float(np.max(self.estimates[active])) if active else 0.}
        row.update({f'n_dofs_{key}': value for key, value in self.solution.n_dofs.items()})
        row.update(self.errors)
        row.update(self.condition)
        if self.flux is not None:
            row['flux_global'] = self.flux.global_sum
            row['flux_max_cut'] = self.flux.max_abs(('cut', 'extended'))
            row['flux_max_uncut'] = self.flux.max_abs(('uncut',))
        if self.pressure_jumps:
            row['pressure_jump_mean'] = float(np.mean(list(self.pressure_jumps.values())))
        if self.adapt_state is not None:
            row['adapt_iterations'] = 1 + max((r['iteration'] for r in self.adapt_trace), default=0)
            row['adapt_converged'] = bool(self.adapt_state.converged)
        row.update({f'time_{key}': value for key, value in self.solution.timings.items()})
        return row


def smallest_face_ratio(topology: CutTopology) -> float:
    """Smallest fluid fraction beta over the partially cut faces, 1 if no face is partially cut."""
    betas = [topology.beta(f, label) for f, portions in topology.face_portions.items()
             for label in {lab for _, _, lab in portions if lab != VOID}]
    betas = [b for b in betas if 0. < b < 1. - 1e-12]
    return float(min(betas, default=1.))


def prepare_case(conf: DefaultConfig) -> Tuple[Case, CutTopology, CutQuadrature, Optional[float]]:
    """Build the case, classify its mesh and set up the cut quadrature."""
    case = create_case(conf)
    start = time.perf_counter()
    topology = classify(case.curves, case.mesh, case.pairing, conf.n_samples, conf.alpha_min, conf.extension,
                        verbosity=conf.verbosity)
    quadrature = CutQuadrature(topology)
    if conf.verbosity > 0:
        counts = {}
        for e in range(topology.n_elements):
            counts[topology.classification(e)] = counts.get(topology.classification(e), 0) + 1
        print(f'Classified {case.name} on {conf.mesh}x{conf.mesh} in {time.perf_counter() - start:.2f}s: {counts}, '
              f'{len(topology.extension)} extensions')
    return case, topology, quadrature, case.resolve_mean_pressure(topology, quadrature)


def _summarize(result: CaseResult) -> CaseResult:
    conf, solution, topology = result.conf, result.solution, result.topology
    postprocessed = postprocess_velocity(solution)
    result.estimates = estimate_error(solution, postprocessed)
    reference = result.case.reference
    if reference is not None:
        errors = error_norms(solution, reference.u, reference.p, reference.L, postprocessed)
        result.errors = {f'error_{key}': value for key, value in errors.items()}
    result.flux = flux_report(solution, conf.flux_variant)
    if conf.compute_condition_numbers:
        result.condition = {'kappa_loc_max': float(max(solution.local_condition_numbers())),
                            'kappa_glob': solution.global_condition_number()}
    for e in topology.active_elements():
        if topology.classification(e) == 'interface':
            result.pressure_jumps[e] = pressure_jump(solution, e)
    return result


def _run_case(conf: DefaultConfig) -> CaseResult:
    case, topology, quadrature, mean_pressure = prepare_case(conf)
    if conf.adapt_tolerance is None:
        solution = solve_stokes(topology, conf.degree, case.params, case.bc, conf.face_basis, mean_pressure,
                                quadrature, conf.verbosity)
        state, trace = None, []
    else:
        solution, state, trace = run_adaptivity(topology, case.params, case.bc, conf.adapt_tolerance,
                                                conf.k_initial, conf.k_min, conf.k_max, conf.max_adapt_iterations,
                                                conf.face_basis, mean_pressure, conf.verbosity)
    result = CaseResult(conf, case, topology, solution)
    result.adapt_state, result.adapt_trace = state, trace
    return _summarize(result)


def run_case(conf: DefaultConfig, metrics: Optional[SolverMetrics] = None) -> CaseResult:
    """Solve one case and write the reports selected by conf.emit.

    Parameters
    ----------
    conf: DefaultConfig
        A resolved case config.
    metrics: SolverMetrics, optional
        Receives the summary scalars and the report files. A metrics object writing to conf.out_dir is created
        when none is given.

    Returns
    -------
    result: CaseResult
    """
    conflict, conflict_str = check_config_conflicts(conf)
    if conflict:
        raise ConfigError("There are conflicting settings: {}".format(conflict_str))
    try:
        result = _run_case(conf)
    except UnfittedHdgError as e:
        e.case = conf.case
        raise

    row = result.summary_row()
    if metrics is None and conf.emit:
        metrics = SolverMetrics(out_dir=conf.create_savedirs())
    if metrics is not None:
        metrics.log_scalars({k: v for k, v in row.items() if isinstance(v, (int, float)) and not isinstance(v, bool)},
                            conf.mesh)
        result.files = write_reports(result, metrics)
    if conf.verbosity > 0:
        summary = ', '.join(f'{k} = {row[k]:.3e}' for k in (*ERROR_QUANTITIES, 'kappa_glob') if k in row)
        print(f'Finished {conf.case}: {summary}')
    return result


def _field_samples(result: CaseResult) -> np.ndarray:
    """Rows (x, y, u, v, p, region) at quadrature points of every fluid region."""
    solution, topology = result.solution, result.topology
    blocks = []
    for e in topology.active_elements():
        for label in topology.labels(e):
            field = solution.field(e, label)
            rule = solution.quadrature.element_rule(e, label, field.degree + 1)
            if len(rule) == 0:
                continue
            _, u, p = field.evaluate(topology.mesh, rule.points)
            blocks.append(np.column_stack([rule.points, u, p, np.full(len(rule), label)]))
    return np.vstack(blocks) if blocks else np.zeros((0, 6))


def write_reports(result: CaseResult, metrics: SolverMetrics) -> List[str]:
    """Write the files selected by conf.emit through metrics and return their paths."""
    conf = result.conf
    config = dict(conf.as_dict())
    files = []
    if 'report' in conf.emit:
        files.append(metrics.save_table([result.summary_row()], 'solver_report.csv', config))
        files.append(metrics.save_table(result.flux.to_csv_rows(), 'flux_report.csv', config))
        files.append(metrics.save_table(result.topology.to_csv_rows(), 'classification.csv', config))
        if result.adapt_trace:
            files.append(metrics.save_table(result.adapt_trace, 'adapt_trace.csv', config))
    if 'fields' in conf.emit:
        buffer = io.StringIO()
        np.savetxt(buffer, _field_samples(result), fmt=['%.10e'] * 5 + ['%d'], header='x y u v p region')
        files.append(metrics.save_text(buffer.getvalue(), 'fields.txt'))
    if 'plots' in conf.emit:
        from .visualization import utils_visualization as vis

        samples = _field_samples(result)
        figures = {'degrees': vis.plot_degree_map(result.topology, result.solution.degrees, f'{conf.case} degrees'),
                   'pressure': vis.plot_field(samples[:, :2], samples[:, 4], result.topology.curves, 'p'),
                   'speed': vis.plot_field(samples[:, :2], np.hypot(samples[:, 2], samples[:, 3]),
                                           result.topology.curves, '|u|')}
        for name, fig in figures.items():
            files.append(metrics.save_figure(fig, name))
            vis.close(fig)
    return files


def convergence_study(conf: DefaultConfig, meshes: Sequence[int], degrees: Sequence[int],
                      metrics: Optional[SolverMetrics] = None) -> List[Dict[str, Any]]:
    """Summary rows of uniform-degree runs over all meshes and degrees."""
    rows = []
    for k in degrees:
        for n in meshes:
            run_conf = conf.updated(mesh=n, degree=k, adapt_tolerance=None, emit=())
            result = run_case(run_conf)
            row = result.summary_row()
            rows.append(row)
            if metrics is not None:
                metrics.log_scalars({f'{q}_k{k}': row[q] for q in ERROR_QUANTITIES if q in row}, n)
    return rows


def conditioning_sweep(conf: DefaultConfig, parameter: str, values: Sequence[Any],
                       face_bases: Sequence[str] = ('legendre', 'lagrange'), degrees: Sequence[int] = (1, 2, 3, 4),
                       metrics: Optional[SolverMetrics] = None) -> List[Dict[str, Any]]:
    """Condition numbers for every value of a config option, face basis and degree.

    The mesh is classified once per value; the solves for all bases and degrees reuse it.

    Returns
    -------
    rows: List[Dict]
        Keys parameter, 'beta', 'face_basis', 'degree', 'kappa_glob', 'kappa_loc_max'.
    """
    rows = []
    for index, value in enumerate(values):
        run_conf = conf.updated(**{parameter: value, 'adapt_tolerance': None, 'emit': ()})
        case, topology, quadrature, mean_pressure = prepare_case(run_conf)
        beta = smallest_face_ratio(topology)
        for basis in face_bases:
            for k in degrees:
                solution = solve_stokes(topology, k, case.params, case.bc, basis, mean_pressure, quadrature,
                                        conf.verbosity)
                row = {parameter: value, 'beta': beta, 'face_basis': basis, 'degree': k,
                       'kappa_glob': solution.global_condition_number(),
                       'kappa_loc_max': float(max(solution.local_condition_numbers()))}
                rows.append(row)
                if metrics is not None:
                    metrics.log_scalars({f'kappa_glob_{basis}_k{k}': row['kappa_glob'],
                                         f'kappa_loc_max_{basis}_k{k}': row['kappa_loc_max']}, index)
    return rows


def convergence_report(rows: Sequence[Dict[str, Any]], quantities: Sequence[str] = ERROR_QUANTITIES,
                       floor: float = RATE_FLOOR) -> List[Dict[str, Any]]:
    """Least-squares convergence rates of every quantity and degree.

    The rate is the slope of log(error) against log(h); it is reported as 'floor' when all errors of the series
    are below floor.

    >>> rows = [{'h': h, 'degree': 1, 'error_u': 3. * h ** 2} for h in (0.5, 0.25, 0.125)]
    >>> report = convergence_report(rows, ('error_u',))
    >>> round(report[0]['rate'], 10)
    2.0
    """
    report = []
    for k in sorted({row['degree'] for row in rows}):
        series = sorted((row for row in rows if row['degree'] == k), key=lambda row: -row['h'])
        if len({row['h'] for row in series}) < 2:
            raise ConfigError(f'Convergence rates need at least two mesh levels, degree {k} has {len(series)}')
        for q in quantities:
            values = [(row['h'], row[q]) for row in series if q in row]
            if len(values) < 2:
                continue
            h, errors = zip(*values)
            if all(error < floor for error in errors):
                rate = 'floor'
            else:
                rate = least_squares_slope(h, np.maximum(errors, np.finfo(float).tiny))[0]
            report.append({'degree': k, 'quantity': q, 'rate': rate, 'n_levels': len(values),
                           'finest_error': float(errors[-1])})
    return report


def convergence_plot_data(rows: Sequence[Dict[str, Any]], quantities: Sequence[str] = ERROR_QUANTITIES) -> str:
    """Gnuplot data blocks, one per degree, with columns h and the given quantities."""
    blocks = []
    for k in sorted({row['degree'] for row in rows}):
        series = sorted((row for row in rows if row['degree'] == k), key=lambda row: -row['h'])
        lines = [f'# degree {k}', '# h ' + ' '.join(quantities)]
        for row in series:
            lines.append(' '.join(f'{value:.10e}' for value in
                                  [row['h']] + [row.get(q, float('nan')) for q in quantities]))
        blocks.append('\n'.join(lines))
    return '\n\n\n'.join(blocks) + '\n'


def write_convergence(rows: Sequence[Dict[str, Any]], metrics: SolverMetrics, config: Dict[str, Any] = None,
                      quantities: Sequence[str] = ERROR_QUANTITIES) -> List[str]:
    """Write the error table, the rates table and the plot data of a convergence study."""
    quantities = [q for q in quantities if any(q in row for row in rows)]
    return [metrics.save_table(rows, 'convergence_errors.csv', config),
            metrics.save_table(convergence_report(rows, quantities), 'convergence.csv', config),
            metrics.save_text(convergence_plot_data(rows, quantities), 'convergence.dat')]
