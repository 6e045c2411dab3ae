#pragma once

#include <vector>

namespace fedloc::geom {

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

bool operator==(const Point2& a, const Point2& b);

/// Convex hull of a 2-D point set: extreme points in counter-clockwise
/// order plus the cached shoelace area. Degenerate hulls (fewer than 3
/// vertices, area 0) are legal values.
struct ConvexHull {
    std::vector<Point2> vertices;
    double area = 0.0;
};

// Cross product of (a-o) x (b-o). Positive for a left turn o->a->b.
double cross(const Point2& o, const Point2& a, const Point2& b);

double distance(const Point2& a, const Point2& b);

// Shoelace area of a CCW vertex ring; 0 for fewer than 3 vertices.
double shoelace_area(const std::vector<Point2>& vertices);

// Andrew's monotone chain. Works on arbitrary (unordered, duplicated)
// point sets. Collinear boundary points other than endpoints are dropped.
ConvexHull convex_hull(const std::vector<Point2>& points);

// Melkman's online algorithm. Only valid when the input is a simple
// polyline; callers declare that by choosing this entry point.
ConvexHull convex_hull_polyline(const std::vector<Point2>& polyline);

double hull_area(const ConvexHull& hull);

// true if p is inside or on the hull boundary (tolerance scaled to the
// hull's extent to absorb double rounding on near-boundary points).
bool hull_contains(const ConvexHull& hull, const Point2& p);

double min_distance(const Point2& query, const std::vector<Point2>& positions);

}  // namespace fedloc::geom
