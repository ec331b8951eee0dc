#include "flex/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace flex::geometry {

namespace {

double cross(const Point& o, const Point& a, const Point& b) {
    return (a.p - o.p) * (b.q - o.q) - (a.q - o.q) * (b.p - o.p);
}

double dist_point_segment(Point a, Point b, Point x) {
    const double dx = b.p - a.p;
    const double dy = b.q - a.q;
    const double len2 = dx * dx + dy * dy;
    double t = 0.0;
    if (len2 > 0.0) {
        t = ((x.p - a.p) * dx + (x.q - a.q) * dy) / len2;
        t = std::clamp(t, 0.0, 1.0);
    }
    const double px = a.p + t * dx - x.p;
    const double py = a.q + t * dy - x.q;
    return std::hypot(px, py);
}

}  // namespace

double signed_area2(std::span<const Point> v) {
    const std::size_t n = v.size();
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Point& a = v[i];
        const Point& b = v[(i + 1) % n];
        sum += a.p * b.q - b.p * a.q;
    }
    return sum;
}

double shoelace(const Polygon& poly) {
    if (poly.size() < 3) {
        throw std::invalid_argument("shoelace: polygon needs at least 3 vertices");
    }
    return 0.5 * std::abs(signed_area2(poly.vertices));
}

Polygon normalize(const Polygon& poly, double tol) {
    Polygon out;
    for (const Point& pt : poly.vertices) {
        if (out.vertices.empty() || std::abs(out.vertices.back().p - pt.p) > tol ||
            std::abs(out.vertices.back().q - pt.q) > tol) {
            out.vertices.push_back(pt);
        }
    }
    while (out.size() > 1 && std::abs(out.vertices.front().p - out.vertices.back().p) <= tol &&
           std::abs(out.vertices.front().q - out.vertices.back().q) <= tol) {
        out.vertices.pop_back();
    }
    return out;
}

Polygon convex_hull(std::span<const Point> points) {
    if (points.empty()) {
        throw std::invalid_argument("convex_hull: empty point set");
    }
    std::vector<Point> pts(points.begin(), points.end());
    std::sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) {
        return a.p < b.p || (a.p == b.p && a.q < b.q);
    });
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](const Point& a, const Point& b) { return a.p == b.p && a.q == b.q; }),
              pts.end());

    const std::size_t n = pts.size();
    if (n <= 2) {
        return Polygon{pts};
    }

    std::vector<Point> hull(2 * n);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
        hull[k++] = pts[i];
    }
    for (std::size_t i = n - 1, lower = k + 1; i-- > 0;) {
        while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    return Polygon{std::move(hull)};
}

bool contains(const Polygon& poly, Point pt, double tol) {
    const auto& v = poly.vertices;
    const std::size_t n = v.size();
    if (n == 0) return false;
    if (n == 1) return std::hypot(v[0].p - pt.p, v[0].q - pt.q) <= tol;
    if (n == 2) return dist_point_segment(v[0], v[1], pt) <= tol;

    for (std::size_t i = 0; i < n; ++i) {
        const Point& a = v[i];
        const Point& b = v[(i + 1) % n];
        const Point& c = v[(i + 2) % n];
        if (cross(a, b, c) < -tol) {
            throw std::invalid_argument("contains: polygon is not convex CCW");
        }
        // Half-plane test scaled by edge length so tol acts as a distance.
        const double edge = std::hypot(b.p - a.p, b.q - a.q);
        if (cross(a, b, pt) < -tol * std::max(edge, 1.0)) {
            return false;
        }
    }
    return true;
}

double distance_to_polygon(const Polygon& poly, Point pt) {
    const auto& v = poly.vertices;
    if (v.empty()) {
        throw std::invalid_argument("distance_to_polygon: empty polygon");
    }
    if (v.size() >= 3) {
        bool inside = true;
        for (std::size_t i = 0; i < v.size() && inside; ++i) {
            inside = cross(v[i], v[(i + 1) % v.size()], pt) >= 0.0;
        }
        if (inside) return 0.0;
    }
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < v.size(); ++i) {
        best = std::min(best, dist_point_segment(v[i], v[(i + 1) % v.size()], pt));
    }
    return best;
}

double region_gap(const Polygon& a, const Polygon& b) {
    Polygon an = normalize(a);
    Polygon bn = normalize(b);
    if (an.empty() || bn.empty()) {
        throw std::invalid_argument("region_gap: degenerate input");
    }
    // Re-hull so duplicated or reordered vertex lists compare equal.
    an = convex_hull(an.vertices);
    bn = convex_hull(bn.vertices);
    double gap = 0.0;
    for (const Point& pt : an.vertices) gap = std::max(gap, distance_to_polygon(bn, pt));
    for (const Point& pt : bn.vertices) gap = std::max(gap, distance_to_polygon(an, pt));
    return gap;
}

}  // namespace flex::geometry
