"""Cartographic maps, semi-toric polygons, group actions, DH function."""

from .carto import CartographicMap, cartographic_map, extract_polygon
from .dh import DHFunction, duistermaat_heckman
from .group import (
    CutSpec,
    DecoratedPolygon,
    check_polygon,
    edge_normals,
    epsilon_action,
    primitive_direction,
    v_action,
    v_compose,
)

__all__ = [
    "CartographicMap",
    "CutSpec",
    "DHFunction",
    "DecoratedPolygon",
    "cartographic_map",
    "check_polygon",
    "duistermaat_heckman",
    "edge_normals",
    "epsilon_action",
    "extract_polygon",
    "primitive_direction",
    "v_action",
    "v_compose",
]
