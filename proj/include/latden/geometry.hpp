#pragma once

#include "latden/error.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace latden {

//! Planar (projected) coordinate. `x` is easting, `y` is northing.
struct Point
{
  double x{ 0.0 };
  double y{ 0.0 };

  friend bool operator==(const Point&, const Point&) = default;
};

inline Point operator+(Point a, Point b) { return { a.x + b.x, a.y + b.y }; }
inline Point operator-(Point a, Point b) { return { a.x - b.x, a.y - b.y }; }
inline Point operator*(double s, Point a) { return { s * a.x, s * a.y }; }

inline double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }
inline double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

struct BoundingBox
{
  Point min;
  Point max;

  bool contains(Point p) const
  {
    return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y;
  }
  double width() const { return max.x - min.x; }
  double height() const { return max.y - min.y; }
};

namespace geom {

//! Tolerance, in coordinate units, for collinearity and incidence tests.
inline constexpr double kEpsilon = 1e-9;

//! Sign of the turn a -> b -> c: +1 left, -1 right, 0 when c lies within
//! kEpsilon of the line through a and b.
inline int orientation(Point a, Point b, Point c)
{
  const Point ab = b - a;
  const double len = std::hypot(ab.x, ab.y);
  const double area2 = cross(ab, c - a);
  if (len == 0.0)
    return 0;
  if (std::abs(area2) <= kEpsilon * len)
    return 0;
  return area2 > 0 ? 1 : -1;
}

inline double point_segment_distance(Point p, Point a, Point b)
{
  const Point ab = b - a;
  const double len2 = dot(ab, ab);
  if (len2 == 0.0)
    return distance(p, a);
  const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  return distance(p, a + t * ab);
}

inline bool on_segment(Point p, Point a, Point b)
{
  return point_segment_distance(p, a, b) <= kEpsilon;
}

//! Open segments cross at a single point interior to both.
inline bool segments_cross_properly(Point a, Point b, Point c, Point d)
{
  const int o1 = orientation(a, b, c);
  const int o2 = orientation(a, b, d);
  const int o3 = orientation(c, d, a);
  const int o4 = orientation(c, d, b);
  return o1 * o2 < 0 && o3 * o4 < 0;
}

//! Closed segments share at least one point (touching counts).
inline bool segments_intersect(Point a, Point b, Point c, Point d)
{
  if (segments_cross_properly(a, b, c, d))
    return true;
  return on_segment(c, a, b) || on_segment(d, a, b) || on_segment(a, c, d) ||
         on_segment(b, c, d);
}

inline BoundingBox bounding_box(std::span<const Point> pts)
{
  BoundingBox box{ pts.front(), pts.front() };
  for (const Point& p : pts) {
    box.min.x = std::min(box.min.x, p.x);
    box.min.y = std::min(box.min.y, p.y);
    box.max.x = std::max(box.max.x, p.x);
    box.max.y = std::max(box.max.y, p.y);
  }
  return box;
}

inline double signed_area(std::span<const Point> pts)
{
  double twice = 0.0;
  const std::size_t n = pts.size();
  for (std::size_t i = 0; i < n; ++i)
    twice += cross(pts[i], pts[(i + 1) % n]);
  return 0.5 * twice;
}

//! Ray casting against +x. Each edge is half-open in y (it owns the endpoint
//! with the smaller northing and not the other), so a ray through a vertex
//! is counted exactly once.
inline bool ray_cast_inside(std::span<const Point> pts, Point p)
{
  bool inside = false;
  const std::size_t n = pts.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Point a = pts[j];
    const Point b = pts[i];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x_at = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < x_at)
        inside = !inside;
    }
  }
  return inside;
}

} // namespace geom

//! Simple closed polygon. Closure is implicit: the first vertex is not
//! repeated at the end.
class Ring
{
public:
  Ring() = default;

  explicit Ring(std::vector<Point> vertices)
    : vertices_(std::move(vertices))
  {
    validate();
    box_ = geom::bounding_box(vertices_);
  }

  std::span<const Point> vertices() const { return vertices_; }
  std::size_t size() const { return vertices_.size(); }
  const Point& operator[](std::size_t i) const { return vertices_[i]; }
  const BoundingBox& bounds() const { return box_; }

  //! Edge i runs from vertex i to vertex i+1 (wrapping).
  std::pair<Point, Point> edge(std::size_t i) const
  {
    return { vertices_[i], vertices_[(i + 1) % vertices_.size()] };
  }

  bool on_boundary(Point p) const
  {
    for (std::size_t i = 0; i < size(); ++i) {
      auto [a, b] = edge(i);
      if (geom::on_segment(p, a, b))
        return true;
    }
    return false;
  }

  //! Interior test by ray casting; boundary points resolve by the half-open
  //! edge rule and are not special-cased here.
  bool encloses(Point p) const
  {
    return box_.contains(p) && geom::ray_cast_inside(vertices_, p);
  }

private:
  void validate() const
  {
    const std::size_t n = vertices_.size();
    if (n < 3)
      throw ValidationError("ring needs at least 3 vertices, got " + std::to_string(n));
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::isfinite(vertices_[i].x) || !std::isfinite(vertices_[i].y))
        throw ValidationError("ring vertex " + std::to_string(i) + " is not finite");
      if (vertices_[i] == vertices_[(i + 1) % n])
        throw ValidationError("ring has repeated consecutive vertex at index " +
                              std::to_string(i));
    }
    // Brute-force pairing; regions hold at most a few thousand vertices.
    for (std::size_t i = 0; i < n; ++i) {
      const Point a = vertices_[i];
      const Point b = vertices_[(i + 1) % n];
      for (std::size_t j = i + 1; j < n; ++j) {
        const Point c = vertices_[j];
        const Point d = vertices_[(j + 1) % n];
        const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
        bool bad = false;
        if (!adjacent) {
          bad = geom::segments_intersect(a, b, c, d);
        } else if (j == i + 1) {
          // shared vertex b == c; fold-back if either far end lies on the other edge
          bad = geom::on_segment(d, a, b) || geom::on_segment(a, c, d);
        } else {
          // shared vertex a == d
          bad = geom::on_segment(c, a, b) || geom::on_segment(b, c, d);
        }
        if (bad)
          throw ValidationError("ring is self-intersecting (edges " + std::to_string(i) +
                                " and " + std::to_string(j) + ")");
      }
    }
  }

  std::vector<Point> vertices_;
  BoundingBox box_{};
};

//! Shoelace area; orientation independent.
inline double ring_area(const Ring& r)
{
  if (r.size() < 3)
    throw ValidationError("ring needs at least 3 vertices");
  return std::abs(geom::signed_area(r.vertices()));
}

//! Outer ring with zero or more holes.
class Region
{
public:
  Region() = default;

  explicit Region(Ring outer, std::vector<Ring> holes = {})
    : outer_(std::move(outer))
    , holes_(std::move(holes))
  {
    validate();
  }

  const Ring& outer() const { return outer_; }
  const std::vector<Ring>& holes() const { return holes_; }
  const BoundingBox& bounds() const { return outer_.bounds(); }

  //! Calls f(a, b) for every boundary edge of the outer ring and the holes.
  template<typename F>
  void for_each_edge(F&& f) const
  {
    auto visit = [&](const Ring& r) {
      for (std::size_t i = 0; i < r.size(); ++i) {
        auto [a, b] = r.edge(i);
        f(a, b);
      }
    };
    visit(outer_);
    for (const Ring& h : holes_)
      visit(h);
  }

  bool on_boundary(Point p) const
  {
    if (outer_.on_boundary(p))
      return true;
    return std::any_of(holes_.begin(), holes_.end(), [&](const Ring& h) {
      return h.on_boundary(p);
    });
  }

private:
  void validate() const
  {
    if (outer_.size() < 3)
      throw ValidationError("region outer ring is empty");
    for (std::size_t h = 0; h < holes_.size(); ++h) {
      const Ring& hole = holes_[h];
      for (const Point& v : hole.vertices()) {
        if (outer_.on_boundary(v) || !outer_.encloses(v))
          throw ValidationError("hole " + std::to_string(h) +
                                " is not strictly inside the outer ring");
      }
      if (rings_touch(outer_, hole))
        throw ValidationError("hole " + std::to_string(h) + " touches the outer ring");
      for (std::size_t g = 0; g < h; ++g) {
        const Ring& other = holes_[g];
        if (rings_touch(other, hole) || other.encloses(hole[0]) || hole.encloses(other[0]))
          throw ValidationError("holes " + std::to_string(g) + " and " + std::to_string(h) +
                                " overlap");
      }
    }
    double area = ring_area(outer_);
    for (const Ring& hole : holes_)
      area -= ring_area(hole);
    if (!(area > 0.0))
      throw ValidationError("region area is not positive");
  }

  static bool rings_touch(const Ring& r, const Ring& s)
  {
    for (std::size_t i = 0; i < r.size(); ++i) {
      auto [a, b] = r.edge(i);
      for (std::size_t j = 0; j < s.size(); ++j) {
        auto [c, d] = s.edge(j);
        if (geom::segments_intersect(a, b, c, d))
          return true;
      }
    }
    return false;
  }

  Ring outer_;
  std::vector<Ring> holes_;
};

inline double region_area(const Region& g)
{
  double area = ring_area(g.outer());
  for (const Ring& h : g.holes())
    area -= ring_area(h);
  if (!(area > 0.0))
    throw ValidationError("region area is not positive");
  return area;
}

//! Inside the outer ring and outside every hole. Points within kEpsilon of
//! any boundary edge (outer or hole) count as inside.
inline bool contains(const Region& g, Point p)
{
  if (!g.bounds().contains(p))
    return false;
  if (g.on_boundary(p))
    return true;
  if (!g.outer().encloses(p))
    return false;
  return std::none_of(g.holes().begin(), g.holes().end(), [&](const Ring& h) {
    return h.encloses(p);
  });
}

//! The open segment (a, b) properly crosses some boundary edge.
inline bool segment_crosses_boundary(const Region& g, Point a, Point b)
{
  const BoundingBox seg{ { std::min(a.x, b.x), std::min(a.y, b.y) },
                         { std::max(a.x, b.x), std::max(a.y, b.y) } };
  bool crosses = false;
  g.for_each_edge([&](Point c, Point d) {
    if (crosses)
      return;
    if (std::max(c.x, d.x) < seg.min.x || std::min(c.x, d.x) > seg.max.x ||
        std::max(c.y, d.y) < seg.min.y || std::min(c.y, d.y) > seg.max.y)
      return;
    crosses = geom::segments_cross_properly(a, b, c, d);
  });
  return crosses;
}

//! Stronger than !segment_crosses_boundary: also rejects segments that leave
//! the region through boundary vertices or between two boundary nodes
//! without a proper crossing (e.g. a chord of a hole whose ends sit on the
//! hole's edges). The segment is split at every boundary contact and the
//! midpoint of each piece is tested with contains().
inline bool segment_within_region(const Region& g, Point a, Point b)
{
  if (segment_crosses_boundary(g, a, b))
    return false;
  const Point ab = b - a;
  const double len2 = dot(ab, ab);
  if (len2 == 0.0)
    return contains(g, a);

  std::vector<double> cuts{ 0.0, 1.0 };
  auto add_cut = [&](Point p) {
    if (geom::on_segment(p, a, b))
      cuts.push_back(std::clamp(dot(p - a, ab) / len2, 0.0, 1.0));
  };
  g.for_each_edge([&](Point c, Point d) {
    add_cut(c);
    add_cut(d);
  });
  std::sort(cuts.begin(), cuts.end());
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    if (cuts[i + 1] - cuts[i] <= 1e-12)
      continue;
    const double t = 0.5 * (cuts[i] + cuts[i + 1]);
    if (!contains(g, a + t * ab))
      return false;
  }
  return true;
}

} // namespace latden
