"""Closed-form 2-D trilateration from three fixed access points.

Distances to three access points at known XY positions pin down a device
position.  Subtracting the three circle equations pairwise linearizes the
problem into two line equations ``a*x + b*y = e`` and ``c*x + d*y = f``;
the position is the normal-equation solution of that 2x2 system, written
out in closed form.  Collinear (or nearly collinear) access point layouts
make the system underdetermined and are reported as degenerate via the
Gram determinant, which for this 2x2 case equals det(A)^2 and is therefore
never negative.

Everything here is pure arithmetic on floats: no state, safe to call from
any thread.  Units are meters throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .errors import TrackingError
from .protocol import DuplicateCode, validate_ap_code

#: Default relative floor under which the Gram determinant is treated as zero.
#: The determinant scales with length^4, so the floor is scaled by the fourth
#: power of the coordinate magnitude.
EPS_GEOM = 1e-9


class DegenerateGeometry(TrackingError):
    """The access points are (nearly) collinear; the position is underdetermined."""


class GeometryVerdict(Enum):
    OK = "ok"
    DEGENERATE = "degenerate"


@dataclass(frozen=True)
class Point2D:
    """A position in the XY plane, meters."""

    x: float
    y: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"coordinates must be finite, got ({self.x}, {self.y})")

    def distance_to(self, other: "Point2D") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)

    def translated(self, dx: float, dy: float) -> "Point2D":
        return Point2D(self.x + dx, self.y + dy)


@dataclass(frozen=True)
class ApLayout:
    """The three access point positions and their three-letter codes."""

    ap1: Point2D
    ap2: Point2D
    ap3: Point2D
    codes: tuple[str, str, str] = ("aaa", "bbb", "ccc")

    def __post_init__(self) -> None:
        points = (self.ap1, self.ap2, self.ap3)
        if self.ap1 == self.ap2 or self.ap2 == self.ap3 or self.ap1 == self.ap3:
            raise ValueError(f"access points must be pairwise distinct, got {points}")
        if len(self.codes) != 3:
            raise ValueError("exactly three access point codes are required")
        for code in self.codes:
            validate_ap_code(code)
        if len(set(self.codes)) != 3:
            raise DuplicateCode(f"access point codes must be distinct, got {self.codes}")

    @classmethod
    def from_entries(cls, entries) -> "ApLayout":
        """Build from three (code, x, y) triples, e.g. operator-entered rows."""
        entries = list(entries)
        if len(entries) != 3:
            raise ValueError(f"exactly three access points are required, got {len(entries)}")
        codes = tuple(validate_ap_code(code) for code, _, _ in entries)
        if len(set(codes)) != 3:
            raise DuplicateCode(f"access point codes must be distinct, got {codes}")
        points = tuple(Point2D(float(x), float(y)) for _, x, y in entries)
        return cls(points[0], points[1], points[2], codes)  # type: ignore[arg-type]

    @property
    def aps(self) -> tuple[Point2D, Point2D, Point2D]:
        return (self.ap1, self.ap2, self.ap3)

    def code_index(self, code: str) -> int:
        """Index (0..2) of the access point carrying ``code``."""
        try:
            return self.codes.index(code)
        except ValueError:
            raise KeyError(code) from None

    def scale(self) -> float:
        """Largest coordinate magnitude, used to scale the degeneracy floor."""
        return max(abs(v) for p in self.aps for v in (p.x, p.y))


@dataclass(frozen=True)
class DistanceTriple:
    """Distances from AP1, AP2, AP3 to the device, meters."""

    s1: float
    s2: float
    s3: float

    def __post_init__(self) -> None:
        for s in (self.s1, self.s2, self.s3):
            if not math.isfinite(s) or s < 0:
                raise ValueError(f"distances must be finite and >= 0, got {s!r}")


@dataclass(frozen=True)
class LinearSystem2:
    """The linearized system ``a*x + b*y = e``, ``c*x + d*y = f``.

    a..d are twice the coordinate differences between consecutive access
    points (meter scale); e and f are meter^2 combinations of the squared
    distances and squared coordinates.
    """

    a: float
    b: float
    c: float
    d: float
    e: float
    f: float

    @property
    def denom(self) -> float:
        """Gram determinant (a^2+c^2)(b^2+d^2) - (ab+cd)^2, >= 0 up to round-off."""
        return (self.a**2 + self.c**2) * (self.b**2 + self.d**2) - (
            self.a * self.b + self.c * self.d
        ) ** 2


def build_linear_system(layout: ApLayout, dists: DistanceTriple) -> LinearSystem2:
    """Linearize the three circle equations into the 2x2 system.

    Coefficients follow the pairwise subtraction of the circles around
    AP1/AP2 and AP2/AP3:

        a = 2(x2-x1)   b = 2(y2-y1)   e = s1^2 - s2^2 - x1^2 + x2^2 - y1^2 + y2^2
        c = 2(x3-x2)   d = 2(y3-y2)   f = s2^2 - s3^2 - x2^2 + x3^2 - y2^2 + y3^2
    """
    (x1, y1) = (layout.ap1.x, layout.ap1.y)
    (x2, y2) = (layout.ap2.x, layout.ap2.y)
    (x3, y3) = (layout.ap3.x, layout.ap3.y)
    s1, s2, s3 = dists.s1, dists.s2, dists.s3
    a = 2.0 * (x2 - x1)
    b = 2.0 * (y2 - y1)
    c = 2.0 * (x3 - x2)
    d = 2.0 * (y3 - y2)
    e = s1**2 - s2**2 - x1**2 + x2**2 - y1**2 + y2**2
    f = s2**2 - s3**2 - x2**2 + x3**2 - y2**2 + y3**2
    return LinearSystem2(a, b, c, d, e, f)


def _degeneracy_floor(scale: float, eps_geom: float) -> float:
    return eps_geom * max(1.0, scale**4)


def check_geometry(layout: ApLayout, eps_geom: float = EPS_GEOM) -> GeometryVerdict:
    """Decide whether a layout supports position solving.

    Degenerate iff the Gram determinant falls below ``eps_geom`` scaled by
    the fourth power of the coordinate magnitude (the determinant has units
    of length^4).
    """
    system = build_linear_system(layout, DistanceTriple(0.0, 0.0, 0.0))
    if system.denom < _degeneracy_floor(layout.scale(), eps_geom):
        return GeometryVerdict.DEGENERATE
    return GeometryVerdict.OK


def solve_position(system: LinearSystem2, floor: float | None = None) -> Point2D:
    """Evaluate the closed-form normal-equation solution of the 2x2 system.

        x = ((b^2+d^2)(ae+cf) - (ab+cd)(be+df)) / ((a^2+c^2)(b^2+d^2) - (ab+cd)^2)
        y = ((a^2+c^2)(be+df) - (ab+cd)(ae+cf)) / ((a^2+c^2)(b^2+d^2) - (ab+cd)^2)

    For an invertible system this equals the direct 2x2 solve.  Raises
    :class:`DegenerateGeometry` when the denominator sits below ``floor``
    (by default a floor derived from the coefficient magnitudes).
    """
    denom = system.denom
    if floor is None:
        coeff_scale = 0.5 * max(abs(system.a), abs(system.b), abs(system.c), abs(system.d))
        floor = _degeneracy_floor(coeff_scale, EPS_GEOM)
    if denom < floor:
        raise DegenerateGeometry(
            f"access point geometry is degenerate (denominator {denom:.3e} below {floor:.3e})"
        )
    aa_cc = system.a**2 + system.c**2
    bb_dd = system.b**2 + system.d**2
    ab_cd = system.a * system.b + system.c * system.d
    ae_cf = system.a * system.e + system.c * system.f
    be_df = system.b * system.e + system.d * system.f
    x = (bb_dd * ae_cf - ab_cd * be_df) / denom
    y = (aa_cc * be_df - ab_cd * ae_cf) / denom
    return Point2D(x, y)


def trilaterate(
    layout: ApLayout, dists: DistanceTriple, eps_geom: float = EPS_GEOM
) -> Point2D:
    """Distances to the three access points -> device position.

    Composition of :func:`build_linear_system` and :func:`solve_position`
    with the layout-level degeneracy check applied first.  Mutually
    inconsistent distances (circles with no common point) are not rejected;
    the linearized least-squares answer is returned as-is.
    """
    if check_geometry(layout, eps_geom) is GeometryVerdict.DEGENERATE:
        raise DegenerateGeometry("access points are collinear or nearly collinear")
    system = build_linear_system(layout, dists)
    return solve_position(system, floor=_degeneracy_floor(layout.scale(), eps_geom))
