"""Spherical-earth geometry and a grid spatial index.

All distances are great-circle distances on a sphere of radius
6,371,000 m, which is plenty for walking-scale geometry (a few km at
most).  Bearings are forward azimuths in degrees, north = 0, east = 90.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

EARTH_RADIUS_M = 6_371_000.0

#: Meters per degree of latitude on the reference sphere.
METERS_PER_DEG_LAT = EARTH_RADIUS_M * math.pi / 180.0


class DegenerateSegment(ValueError):
    """Bearing requested for a segment with no defined direction."""


def normalize_lon(lon: float) -> float:
    """Fold a longitude into [-180, 180)."""
    folded = (lon + 180.0) % 360.0 - 180.0
    # % can return 360.0 for inputs just below a wrap point
    return -180.0 if folded == 180.0 else folded


@dataclass(frozen=True)
class GeoPoint:
    """A WGS84 position in decimal degrees.

    Latitude must lie in [-90, +90]; longitude is normalized to
    [-180, +180) on construction.
    """

    lat: float
    lon: float

    def __post_init__(self) -> None:
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude {self.lat} outside [-90, 90]")
        object.__setattr__(self, "lon", normalize_lon(self.lon))


def haversine_distance(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance between two points in meters."""
    phi1 = math.radians(a.lat)
    phi2 = math.radians(b.lat)
    dphi = math.radians(b.lat - a.lat)
    dlam = math.radians(b.lon - a.lon)
    h = math.sin(dphi / 2.0) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_M * math.atan2(math.sqrt(h), math.sqrt(1.0 - h))


def initial_bearing(a: GeoPoint, b: GeoPoint) -> float:
    """Forward azimuth at ``a`` toward ``b`` in degrees [0, 360).

    Raises:
        DegenerateSegment: if the points coincide (or are antipodal), so
            no direction is defined.
    """
    if (a.lat, a.lon) == (b.lat, b.lon):
        raise DegenerateSegment("identical points have no bearing")
    phi1 = math.radians(a.lat)
    phi2 = math.radians(b.lat)
    dlam = math.radians(b.lon - a.lon)
    x = math.sin(dlam) * math.cos(phi2)
    y = math.cos(phi1) * math.sin(phi2) - math.sin(phi1) * math.cos(phi2) * math.cos(dlam)
    if math.hypot(x, y) < 1e-15:
        raise DegenerateSegment("antipodal points have no unique bearing")
    return (math.degrees(math.atan2(x, y)) + 360.0) % 360.0


def angular_difference(a: float, b: float) -> float:
    """Minimal absolute difference between two angles, folded to [0, 180]."""
    d = abs(a - b) % 360.0
    return 360.0 - d if d > 180.0 else d


def in_sector(heading: float, target_bearing: float, half_angle: float) -> bool:
    """True iff ``target_bearing`` lies within ``half_angle`` degrees of
    ``heading`` either side (boundary inclusive).

    ``half_angle`` must lie in (0, 180].  The default notification sector
    of 100 degrees total corresponds to ``half_angle=50``.
    """
    if not 0.0 < half_angle <= 180.0:
        raise ValueError(f"half_angle {half_angle} outside (0, 180]")
    return angular_difference(heading, target_bearing) <= half_angle


class GridIndex:
    """Fixed-cell grid over (lat, lon) supporting exact radius queries.

    Each id is stored in exactly one cell, keyed by floor division of its
    coordinates by ``cell_size`` degrees.  Radius queries scan every cell
    that can intersect the query disk and distance-check the members, so
    results match a linear scan exactly.

    Thread safety: many concurrent readers are fine; callers must
    serialize mutations (single-writer contract).
    """

    def __init__(self, cell_size: float = 0.001):
        if cell_size <= 0:
            raise ValueError("cell_size must be positive")
        self.cell_size = cell_size
        self._lon_cells = round(360.0 / cell_size)
        self._cells: dict[tuple[int, int], set[str]] = {}
        self._points: dict[str, GeoPoint] = {}

    def __len__(self) -> int:
        return len(self._points)

    def __contains__(self, item_id: str) -> bool:
        return item_id in self._points

    def _cell_of(self, point: GeoPoint) -> tuple[int, int]:
        row = math.floor(point.lat / self.cell_size)
        col = math.floor(point.lon / self.cell_size) % self._lon_cells
        return row, col

    def insert(self, item_id: str, point: GeoPoint) -> None:
        if item_id in self._points:
            raise ValueError(f"id {item_id!r} already indexed")
        self._points[item_id] = point
        self._cells.setdefault(self._cell_of(point), set()).add(item_id)

    def point_of(self, item_id: str) -> GeoPoint:
        return self._points[item_id]

    def query_radius(self, center: GeoPoint, radius: float) -> set[str]:
        """Ids of all stored points within ``radius`` meters of ``center``
        (boundary inclusive)."""
        if radius <= 0:
            raise ValueError("radius must be positive")
        if not self._points:
            return set()

        # Latitude band of the query disk, padded one cell for safety.
        lat_span_deg = math.degrees(radius / EARTH_RADIUS_M)
        row_lo = math.floor((center.lat - lat_span_deg) / self.cell_size) - 1
        row_hi = math.floor((center.lat + lat_span_deg) / self.cell_size) + 1

        # Longitude span of the disk, evaluated at the latitude in the band
        # closest to a pole (the disk is widest there).  Near the poles the
        # disk can wrap the full ring.
        max_abs_lat = max(abs(center.lat - lat_span_deg), abs(center.lat + lat_span_deg))
        ang = min(radius / EARTH_RADIUS_M, math.pi)
        if max_abs_lat >= 90.0 - 1e-9:
            lon_span_deg = 180.0
        else:
            sin_ratio = math.sin(ang) / math.cos(math.radians(max_abs_lat))
            lon_span_deg = 180.0 if sin_ratio >= 1.0 else math.degrees(math.asin(sin_ratio))

        full_ring = lon_span_deg >= 180.0
        if full_ring:
            col_lo, col_hi = 0, self._lon_cells - 1
        else:
            col_lo = math.floor((center.lon - lon_span_deg) / self.cell_size) - 1
            col_hi = math.floor((center.lon + lon_span_deg) / self.cell_size) + 1
            if col_hi - col_lo + 1 >= self._lon_cells:
                full_ring = True
                col_lo, col_hi = 0, self._lon_cells - 1

        hits: set[str] = set()
        n_candidate_cells = (row_hi - row_lo + 1) * (col_hi - col_lo + 1)
        if n_candidate_cells > len(self._cells):
            # Sparse index, fat query: scan occupied cells instead.
            for (row, col), ids in self._cells.items():
                if row_lo <= row <= row_hi and self._col_in_span(col, col_lo, col_hi, full_ring):
                    self._check_members(ids, center, radius, hits)
        else:
            for row in range(row_lo, row_hi + 1):
                for col in range(col_lo, col_hi + 1):
                    ids = self._cells.get((row, col % self._lon_cells))
                    if ids:
                        self._check_members(ids, center, radius, hits)
        return hits

    def _col_in_span(self, col: int, col_lo: int, col_hi: int, full_ring: bool) -> bool:
        if full_ring:
            return True
        a = col_lo % self._lon_cells
        b = col_hi % self._lon_cells
        if a <= b:
            return a <= col <= b
        return col >= a or col <= b

    def _check_members(self, ids: set[str], center: GeoPoint, radius: float, hits: set[str]) -> None:
        for item_id in ids:
            if haversine_distance(self._points[item_id], center) <= radius:
                hits.add(item_id)
