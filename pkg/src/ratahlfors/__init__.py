"""Rational maps with connected sublevel sets: goodness, capacity, Ahlfors tests,
Koebe uniformization and positive-residue families."""
from .errors import RatAhlforsError
from .ratmap import RationalMap, critical_points, critical_radius, is_n_good, three_pole_example
from .levelset import BoundaryCurve, component_count_oracle, trace_all, trace_boundary, winding_number
from .capacity import CapacityProblem, capacity_of_disks, h2, is_ahlfors, solve_ahlfors
from .koebe import CircleDomainSignature, exterior_riemann_map, kappa_chart, koebe_uniformize, project_P
from .moduli import ModuliPoint, act_permutation, evaluate_A, validate
from .families import epsilon_threshold, positive_path, q_epsilon, sample_path

__version__ = "0.1.0"
