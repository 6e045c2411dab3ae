#include "fedloc/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

namespace fedloc::geom {

bool operator==(const Point2& a, const Point2& b) {
    return a.x == b.x && a.y == b.y;
}

double cross(const Point2& o, const Point2& a, const Point2& b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

double distance(const Point2& a, const Point2& b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

double shoelace_area(const std::vector<Point2>& v) {
    if (v.size() < 3) return 0.0;
    double twice = 0.0;
    for (size_t i = 0; i < v.size(); ++i) {
        const Point2& p = v[i];
        const Point2& q = v[(i + 1) % v.size()];
        twice += p.x * q.y - q.x * p.y;
    }
    return 0.5 * twice;
}

static void check_finite(const std::vector<Point2>& points) {
    for (const Point2& p : points) {
        if (!std::isfinite(p.x) || !std::isfinite(p.y))
            throw std::invalid_argument("invalid coordinate");
    }
}

static ConvexHull finish_hull(std::vector<Point2> vertices) {
    ConvexHull h;
    h.area = shoelace_area(vertices);
    h.vertices = std::move(vertices);
    return h;
}

ConvexHull convex_hull(const std::vector<Point2>& points) {
    if (points.empty()) throw std::invalid_argument("empty point set");
    check_finite(points);

    std::vector<Point2> pts = points;
    std::sort(pts.begin(), pts.end(), [](const Point2& a, const Point2& b) {
        return a.x != b.x ? a.x < b.x : a.y < b.y;
    });
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

    const size_t n = pts.size();
    if (n <= 2) return finish_hull(std::move(pts));

    // cross <= 0 pops non-left turns, so collinear interior points are
    // excluded from the boundary.
    std::vector<Point2> hull(2 * n);
    size_t k = 0;
    for (size_t i = 0; i < n; ++i) {  // lower chain
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
        hull[k++] = pts[i];
    }
    const size_t lower = k + 1;
    for (size_t i = n - 1; i-- > 0;) {  // upper chain
        while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);  // last point repeats the first
    return finish_hull(std::move(hull));
}

ConvexHull convex_hull_polyline(const std::vector<Point2>& polyline) {
    if (polyline.empty()) throw std::invalid_argument("empty point set");
    check_finite(polyline);

    // Collapse consecutive duplicates; Melkman assumes a moving point.
    std::vector<Point2> pts;
    pts.reserve(polyline.size());
    for (const Point2& p : polyline)
        if (pts.empty() || !(pts.back() == p)) pts.push_back(p);

    if (pts.size() <= 2) {
        std::vector<Point2> v = pts;
        std::sort(v.begin(), v.end(), [](const Point2& a, const Point2& b) {
            return a.x != b.x ? a.x < b.x : a.y < b.y;
        });
        v.erase(std::unique(v.begin(), v.end()), v.end());
        return finish_hull(std::move(v));
    }

    // Skip leading collinear points so the seed triple has nonzero turn.
    size_t i = 2;
    while (i < pts.size() && cross(pts[0], pts[1], pts[i]) == 0.0) ++i;
    if (i == pts.size()) {
        // fully collinear polyline: hull is the extreme pair
        std::vector<Point2> v = pts;
        std::sort(v.begin(), v.end(), [](const Point2& a, const Point2& b) {
            return a.x != b.x ? a.x < b.x : a.y < b.y;
        });
        return finish_hull({v.front(), v.back()});
    }

    std::deque<Point2> dq;  // dq.front() == dq.back(), CCW ring
    const Point2 a = pts[0], b = pts[i - 1], c = pts[i];
    if (cross(a, b, c) > 0.0) {
        dq = {c, a, b, c};
    } else {
        dq = {c, b, a, c};
    }

    auto left_of_front = [&](const Point2& p) {
        return cross(dq[0], dq[1], p) > 0.0;
    };
    auto left_of_back = [&](const Point2& p) {
        return cross(dq[dq.size() - 2], dq[dq.size() - 1], p) > 0.0;
    };

    for (++i; i < pts.size(); ++i) {
        const Point2& p = pts[i];
        if (left_of_front(p) && left_of_back(p)) continue;
        while (!left_of_back(p)) dq.pop_back();
        dq.push_back(p);
        while (!left_of_front(p)) dq.pop_front();
        dq.push_front(p);
    }

    dq.pop_front();  // break the ring
    return finish_hull(std::vector<Point2>(dq.begin(), dq.end()));
}

double hull_area(const ConvexHull& hull) {
    return hull.area;
}

bool hull_contains(const ConvexHull& hull, const Point2& p) {
    const auto& v = hull.vertices;
    if (v.empty()) return false;
    double scale = 1.0;
    for (const Point2& q : v)
        scale = std::max({scale, std::abs(q.x), std::abs(q.y)});
    const double tol = -1e-9 * scale * scale;
    if (v.size() == 1) return distance(v[0], p) <= -tol;
    if (v.size() == 2) {
        if (cross(v[0], v[1], p) < tol || cross(v[0], v[1], p) > -tol) return false;
        const double t = (p.x - v[0].x) * (v[1].x - v[0].x) +
                         (p.y - v[0].y) * (v[1].y - v[0].y);
        const double len2 = (v[1].x - v[0].x) * (v[1].x - v[0].x) +
                            (v[1].y - v[0].y) * (v[1].y - v[0].y);
        return t >= tol && t <= len2 - tol;
    }
    for (size_t i = 0; i < v.size(); ++i) {
        if (cross(v[i], v[(i + 1) % v.size()], p) < tol) return false;
    }
    return true;
}

double min_distance(const Point2& query, const std::vector<Point2>& positions) {
    if (positions.empty()) throw std::invalid_argument("empty position set");
    double best = distance(query, positions[0]);
    for (size_t i = 1; i < positions.size(); ++i)
        best = std::min(best, distance(query, positions[i]));
    return best;
}

}  // namespace fedloc::geom
