"""Certificate-producing algorithms for approximate subgroups of unitary groups."""

from .errors import ApproxGroupError, CapExceeded, InvalidSpec
from .families import FamilySpec, build, generators, parse_family
from .linalg import Dense, Monomial, hs_distance
from .sets import (EXACT, MatrixSet, certify_approximate, power_set, product_set, tolerant,
                   verify_control)

__version__ = "0.1.0"

__all__ = [
    "ApproxGroupError", "CapExceeded", "InvalidSpec", "FamilySpec", "build", "generators",
    "parse_family", "Dense", "Monomial", "hs_distance", "EXACT", "MatrixSet",
    "certify_approximate", "power_set", "product_set", "tolerant", "verify_control",
]
