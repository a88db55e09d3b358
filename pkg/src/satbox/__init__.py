"""satbox: Stokes eigenbasis of a 3D box under free-slip (Lions) walls,
exact mode-interaction certificates, and steered Galerkin dynamics."""

from .basis import DomainSpec, EigenMode, TrigVectorField, eigenmodes, enumerate_frequencies
from .interact import FieldExpansion, InteractionTerm, advection_sym, bilinear_sym, project
from .saturation import saturate, seed_set

__all__ = [
    "DomainSpec",
    "EigenMode",
    "TrigVectorField",
    "FieldExpansion",
    "InteractionTerm",
    "advection_sym",
    "bilinear_sym",
    "eigenmodes",
    "enumerate_frequencies",
    "project",
    "saturate",
    "seed_set",
]
