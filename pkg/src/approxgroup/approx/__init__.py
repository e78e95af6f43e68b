"""Structure of approximate subgroups of U_n: centralizers, block subgroups, tori."""

from .blocks import BlockSubgroup, TorusDescriptor, diagonal_torus, root_torus
from .finders import (CosetCase, central_coset_or_centralizer, find_centralizer_exhaustive,
                      find_centralizer_referee, find_centralizer_solymosi)
from .lemmas import intersect_with_subgroup, lift_fiber_bound
from .pipeline import (DecompositionReport, diagonalizable_control, inductive_step,
                       normalizer_quotient_bound)

__all__ = [
    "BlockSubgroup", "TorusDescriptor", "diagonal_torus", "root_torus", "CosetCase",
    "central_coset_or_centralizer", "find_centralizer_exhaustive", "find_centralizer_referee",
    "find_centralizer_solymosi", "intersect_with_subgroup", "lift_fiber_bound",
    "DecompositionReport", "diagonalizable_control", "inductive_step", "normalizer_quotient_bound",
]
