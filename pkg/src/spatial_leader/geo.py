"""Great-circle distance, pairwise spatial scores and kernel density grids."""
from __future__ import annotations

import io
import math
from collections.abc import Iterable
from dataclasses import dataclass

import numpy as np

EARTH_RADIUS_KM = 6371.0088
DEFAULT_BANDWIDTH_KM = 100.0
# below this distance the log term is clamped to 0
DISTANCE_FLOOR_KM = 1.0


@dataclass(frozen=True)
class GeoPoint:
    lat: float
    lon: float

    def __post_init__(self):
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude {self.lat} outside [-90, 90]")
        if not -180.0 <= self.lon <= 180.0:
            raise ValueError(f"longitude {self.lon} outside [-180, 180]")


def haversine_km(p, q) -> float:
    """Great-circle distance in km between two objects with ``lat``/``lon``."""
    phi1 = math.radians(p.lat)
    phi2 = math.radians(q.lat)
    dphi = phi2 - phi1
    dlmb = math.radians(q.lon - p.lon)
    a = math.sin(dphi / 2) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlmb / 2) ** 2
    return 2 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(a)))


def haversine_km_array(lat, lon, lat0: float, lon0: float) -> np.ndarray:
    """Vectorised distance from ``(lat0, lon0)`` to every ``(lat, lon)``."""
    phi = np.radians(lat)
    phi0 = math.radians(lat0)
    dphi = phi - phi0
    dlmb = np.radians(np.asarray(lon) - lon0)
    a = np.sin(dphi / 2) ** 2 + math.cos(phi0) * np.cos(phi) * np.sin(dlmb / 2) ** 2
    return 2 * EARTH_RADIUS_KM * np.arcsin(np.minimum(1.0, np.sqrt(a)))


def spatial_score_pair(distance_km: float, cross_border: bool, lam: float) -> float:
    """log10 of the (1 km floored) distance plus ``lam`` for cross-border pairs."""
    score = math.log10(max(distance_km, DISTANCE_FLOOR_KM))
    if cross_border:
        score += lam
    return score


@dataclass
class DensityGrid:
    lat_min: float
    lat_max: float
    lon_min: float
    lon_max: float
    bandwidth_km: float
    values: np.ndarray  # shape (rows, cols); row 0 is the northernmost

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]

    def cell_centers(self) -> tuple[np.ndarray, np.ndarray]:
        return _cell_centers(self.lat_min, self.lat_max, self.lon_min, self.lon_max, self.rows, self.cols)

    def to_csv(self) -> str:
        buf = io.StringIO()
        header = [self.lat_min, self.lat_max, self.lon_min, self.lon_max, self.rows, self.cols, self.bandwidth_km]
        buf.write(",".join(_fmt(v) for v in header) + "\n")
        for row in self.values:
            buf.write(",".join(_fmt(v) for v in row) + "\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> DensityGrid:
        lines = [ln for ln in text.splitlines() if ln.strip()]
        lat_min, lat_max, lon_min, lon_max, rows, cols, bw = (float(v) for v in lines[0].split(","))
        values = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]], dtype=float)
        if values.shape != (int(rows), int(cols)):
            raise ValueError(f"grid body has shape {values.shape}, header says {(int(rows), int(cols))}")
        return cls(lat_min, lat_max, lon_min, lon_max, bw, values)


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.12g}"


def _cell_centers(lat_min, lat_max, lon_min, lon_max, rows, cols):
    dlat = (lat_max - lat_min) / rows
    dlon = (lon_max - lon_min) / cols
    lats = lat_max - (np.arange(rows) + 0.5) * dlat
    lons = lon_min + (np.arange(cols) + 0.5) * dlon
    return lats, lons


def kde_grid(
    points: Iterable[tuple[object, float]],
    bandwidth_km: float = DEFAULT_BANDWIDTH_KM,
    bounds: tuple[float, float, float, float] = (-90.0, 90.0, -180.0, 180.0),
    shape: tuple[int, int] = (90, 180),
) -> DensityGrid:
    """Weighted Gaussian kernel sum over a lat/lon grid.

    Each cell holds ``sum_i w_i * exp(-d_i**2 / (2 * bandwidth_km**2))`` with
    ``d_i`` the haversine distance from point ``i`` to the cell centre.
    Points are accumulated in input order so the output is reproducible.

    Parameters
    ----------
    points : iterable of (point, weight)
        ``point`` needs ``lat`` and ``lon`` attributes; weights must be >= 0.
    bounds : (lat_min, lat_max, lon_min, lon_max)
    shape : (rows, cols)
    """
    if not bandwidth_km > 0:
        raise ValueError(f"bandwidth must be positive, got {bandwidth_km}")
    lat_min, lat_max, lon_min, lon_max = bounds
    rows, cols = shape
    if rows < 1 or cols < 1:
        raise ValueError("grid needs at least one row and one column")
    if not (lat_min < lat_max and lon_min < lon_max):
        raise ValueError(f"degenerate grid bounds {bounds}")
    lats, lons = _cell_centers(lat_min, lat_max, lon_min, lon_max, rows, cols)
    lat_g, lon_g = np.meshgrid(lats, lons, indexing="ij")
    grid = np.zeros((rows, cols))
    two_h2 = 2.0 * bandwidth_km**2
    for point, weight in points:
        if weight < 0:
            raise ValueError(f"negative kernel weight {weight}")
        if weight == 0:
            continue
        d = haversine_km_array(lat_g, lon_g, point.lat, point.lon)
        grid += weight * np.exp(-(d**2) / two_h2)
    return DensityGrid(lat_min, lat_max, lon_min, lon_max, float(bandwidth_km), grid)
