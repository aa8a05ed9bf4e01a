"""Exact jets, type decisions and tangent vector fields for germs
``Re z1 + P(z2) + (Im z1) Q(z2, Im z1) = 0`` in C^2."""

from .expr import parse, to_source, wirtinger
from .germ import Germ, GermInvalid, JetGerm, load_germ_file, make_germ
from .jet import AtLeast, Jet, jet_of_expr
from .numbers import QQi
from .tangency import VectorField, classify_rotations, residual_jet, residual_numeric, solve_tangent_fields
from .typeanalysis import dangelo_probe, infinite_type_check, shear_normalize

__all__ = [
    "AtLeast", "Germ", "GermInvalid", "Jet", "JetGerm", "QQi", "VectorField", "classify_rotations",
    "dangelo_probe", "infinite_type_check", "jet_of_expr", "load_germ_file", "make_germ", "parse",
    "residual_jet", "residual_numeric", "shear_normalize", "solve_tangent_fields", "to_source", "wirtinger",
]
__version__ = "0.1.0"
