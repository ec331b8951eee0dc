#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace flex::geometry {

struct Point {
    double p = 0.0;
    double q = 0.0;
};

/// Ordered list of (p,q) vertices in per-unit. Area operations require at
/// least 3 vertices; normalize() drops consecutive duplicates.
struct Polygon {
    std::vector<Point> vertices;

    bool empty() const { return vertices.empty(); }
    std::size_t size() const { return vertices.size(); }
};

/// Unsigned polygon area via the shoelace sum. Orientation-independent.
/// Throws std::invalid_argument for fewer than 3 vertices.
double shoelace(const Polygon& poly);

/// Signed shoelace sum (twice the signed area, positive for CCW order).
double signed_area2(std::span<const Point> vertices);

/// Counter-clockwise convex hull (monotone chain over lexicographic order).
/// Collinear interior points are dropped. A single distinct input point
/// yields a one-vertex hull.
Polygon convex_hull(std::span<const Point> points);

/// True iff the point lies inside or on the boundary of a convex CCW
/// polygon, within tolerance `tol` on the half-plane tests.
/// Throws std::invalid_argument if the polygon is not convex CCW.
bool contains(const Polygon& poly, Point pt, double tol = 1e-9);

/// Symmetric Hausdorff distance between two convex polygons: the max over
/// vertices of each polygon of the distance to the other polygon.
double region_gap(const Polygon& a, const Polygon& b);

/// Drop consecutive duplicate vertices (closing duplicate included).
Polygon normalize(const Polygon& poly, double tol = 1e-12);

/// Euclidean distance from a point to a convex polygon (0 if inside).
double distance_to_polygon(const Polygon& poly, Point pt);

}  // namespace flex::geometry
