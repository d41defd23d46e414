"""Zero paths of antisymmetric sphere labellings and equal-value diameters."""
from ._kernels import backend
from .dyson_solver import (DiameterQuadruple, InvariantCurve, SolverConfig, angle_to_chord,
                           chord_to_angle, dyson, find_equal_pair, invariant_curve, livesay,
                           odd_part, solve)
from .errors import *  # noqa: F401,F403
from .field_expr import evaluate, field_from_text, parse
from .labelling import (BarycentricPoint, Labelling, ScalarField, eval_simplicial,
                        find_seed_triangle, label_by_sign, mixed_edges, validate_labelling)
from .sphere_mesh import (SymmetricTriangulation, ValidationReport, base_octahedron,
                          build_refined, mesh_diameter, rotate_mesh, subdivide_once, validate)
from .zero_paths import (TraceResult, ZeroPath, ZeroSegment, antipodal_shift_index,
                         is_invariant, trace_all, zero_segment)

__version__ = "0.1.0"
