"""Trilateration walk-through: three distances in, one coordinate out.

Three access points sit at known XY positions. Given the distance from
each to a device, the three circle equations subtract pairwise into a
2x2 linear system whose normal-equation solution is the device position.
"""

from bluetrack import (
    ApLayout,
    DegenerateGeometry,
    DistanceTriple,
    Point2D,
    build_linear_system,
    check_geometry,
    trilaterate,
)

layout = ApLayout(Point2D(0, 0), Point2D(10, 0), Point2D(0, 10), ("aaa", "bbb", "ccc"))
print("access points:", [(p.x, p.y) for p in layout.aps])

# a device truly at (3, 4): measure the exact distances
true = Point2D(3.0, 4.0)
dists = DistanceTriple(*(true.distance_to(ap) for ap in layout.aps))
print(f"true position ({true.x}, {true.y}) -> distances "
      f"{dists.s1:.4f}, {dists.s2:.4f}, {dists.s3:.4f}")

# the linearized system a x + b y = e, c x + d y = f
system = build_linear_system(layout, dists)
print(f"linear system: {system.a:+.1f}x {system.b:+.1f}y = {system.e:.3f}   "
      f"{system.c:+.1f}x {system.d:+.1f}y = {system.f:.3f}")

recovered = trilaterate(layout, dists)
print(f"recovered position: ({recovered.x:.12f}, {recovered.y:.12f})")

# inconsistent circles (noisy radii) still yield the least-squares point
noisy = DistanceTriple(dists.s1 + 0.3, dists.s2 - 0.2, dists.s3 + 0.1)
approx = trilaterate(layout, noisy)
print(f"with +-0.3 m radius noise: ({approx.x:.3f}, {approx.y:.3f})")

# collinear access points cannot pin down a position
collinear = ApLayout(Point2D(0, 0), Point2D(5, 0), Point2D(10, 0))
print("collinear layout verdict:", check_geometry(collinear).value)
try:
    trilaterate(collinear, dists)
except DegenerateGeometry as exc:
    print("trilaterate rejects it:", exc)
