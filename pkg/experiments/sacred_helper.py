"""Sets up Sacred, and contains the default parameters."""
import sacred
from sacred.observers import FileStorageObserver

ex = sacred.Experiment('unfitted_hdg')
ex.observers.append(FileStorageObserver('unfitted_hdg_results'))

# Sacred options that configure the study rather than a single solve.
STUDY_KEYS = ('seed', 'study', 'meshes', 'degrees', 'sweep_parameter', 'sweep_values', 'face_bases')


@ex.config
def base_config():
    # -- Study
    # One of 'case' (a single solve), 'convergence' (meshes x degrees) or 'conditioning' (a parameter sweep).
    study = 'case'
    # The benchmark case, see unfitted_hdg.cases.CASES.
    case = 'bubble'

    # -- Convergence study
    meshes = [4, 8, 16]
    degrees = [1, 2, 3]

    # -- Conditioning study
    # Name of the case option that is swept, e.g. 'm_shape_epsilon' or 'extension'.
    sweep_parameter = 'm_shape_epsilon'
    # The tip heights 0.005 .. 0.15 of the M-shape give beta = 2%, 20%, 40% and 60% on the 4x4 mesh.
    sweep_values = [0.005, 0.05, 0.1, 0.15]
    face_bases = ['legendre', 'lagrange']

    # -- Case options, None keeps the value of the case config
    mesh = None
    degree = None
    adapt_tolerance = None
    face_basis = None
    alpha_min = None
    extension = None
    periodic = None
    verbosity = None

    # -- Output
    # Any of 'report', 'fields', 'plots'.
    emit = ['report']
    out_dir = 'unfitted_hdg_results/reports'


@ex.named_config
def desk_config():
    """Small meshes that run on a laptop in minutes."""
    meshes = [4, 8, 16]
    degrees = [1, 2, 3]


@ex.named_config
def full_config():
    """The full sweeps, including the fine meshes."""
    meshes = [2, 4, 8, 16, 32]
    degrees = [1, 2, 3, 4]
    emit = ['report', 'plots']


def get_experiment():
    """Returns the Sacred experiment object."""
    return ex
