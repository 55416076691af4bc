"""Exact computation of contracting geodesics and coarse excursions in right-angled Artin groups."""

from .group import (
    DefiningGraph,
    Element,
    GroupModel,
    Letter,
    RAAG,
    free_abelian,
    free_group,
    invert,
    length,
    load_group,
    multiply,
    normalize,
    parse_group_text,
    z2_free_z,
)

__version__ = "0.1.0"
