#pragma once

// Independent reference implementations used only by the tests. Nothing
// here calls into the code path it checks.

#include "latden/latden.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

namespace latden::oracle {

// ---------------------------------------------------------------------------
// Geometry
// ---------------------------------------------------------------------------

//! Winding number of a closed polygon around p (Sunday's crossing rules).
inline int winding_number(std::span<const Point> poly, Point p)
{
  auto is_left = [](Point a, Point b, Point c) {
    return (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
  };
  int wn = 0;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point a = poly[i];
    const Point b = poly[(i + 1) % n];
    if (a.y <= p.y) {
      if (b.y > p.y && is_left(a, b, p) > 0)
        ++wn;
    } else if (b.y <= p.y && is_left(a, b, p) < 0) {
      --wn;
    }
  }
  return wn;
}

inline bool winding_contains(const Region& g, Point p)
{
  if (winding_number(g.outer().vertices(), p) == 0)
    return false;
  for (const Ring& h : g.holes())
    if (winding_number(h.vertices(), p) != 0)
      return false;
  return true;
}

inline double boundary_distance(const Region& g, Point p)
{
  double best = std::numeric_limits<double>::infinity();
  g.for_each_edge([&](Point a, Point b) {
    const Point ab = b - a;
    const double t = std::clamp(dot(p - a, ab) / dot(ab, ab), 0.0, 1.0);
    best = std::min(best, distance(p, a + t * ab));
  });
  return best;
}

//! Parametric intersection of open segments. Returns -1 when the answer is
//! too close to degenerate to call, otherwise 0/1.
inline int segments_cross_parametric(Point a, Point b, Point c, Point d)
{
  const Point r = b - a, s = d - c;
  const double denom = cross(r, s);
  if (std::abs(denom) < 1e-12) {
    // parallel: only a collinear overlap is undecidable here
    const double offset = std::abs(cross(c - a, r)) / std::sqrt(dot(r, r));
    return offset < 1e-9 ? -1 : 0;
  }
  const double t = cross(c - a, s) / denom;
  const double u = cross(c - a, r) / denom;
  constexpr double m = 1e-7;
  if (std::abs(t) < m || std::abs(t - 1) < m || std::abs(u) < m || std::abs(u - 1) < m)
    return -1;
  return (t > 0 && t < 1 && u > 0 && u < 1) ? 1 : 0;
}

//! -1 if any edge is near-degenerate for this pair, else 0/1.
inline int crosses_boundary_bruteforce(const Region& g, Point a, Point b)
{
  int verdict = 0;
  bool ambiguous = false;
  g.for_each_edge([&](Point c, Point d) {
    const int v = segments_cross_parametric(a, b, c, d);
    if (v < 0)
      ambiguous = true;
    else if (v == 1)
      verdict = 1;
  });
  return ambiguous ? -1 : verdict;
}

//! Star-shaped simple polygon with `n` vertices around `center`.
template<typename Rng>
std::vector<Point> random_star_polygon(Rng& rng, std::size_t n, Point center = { 0, 0 },
                                       double r_min = 0.4, double r_max = 1.0)
{
  std::uniform_real_distribution<double> ur(r_min, r_max);
  std::vector<Point> out;
  for (std::size_t i = 0; i < n; ++i) {
    const double ang = 2.0 * std::numbers::pi * (static_cast<double>(i) + 0.5) /
                       static_cast<double>(n);
    const double r = ur(rng);
    out.push_back({ center.x + r * std::cos(ang), center.y + r * std::sin(ang) });
  }
  return out;
}

//! Rejection-sampling area estimate with its standard error.
template<typename Rng, typename Inside>
std::pair<double, double> monte_carlo_area(const BoundingBox& box, Inside&& inside,
                                           std::size_t samples, Rng& rng)
{
  std::uniform_real_distribution<double> ux(box.min.x, box.max.x);
  std::uniform_real_distribution<double> uy(box.min.y, box.max.y);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < samples; ++i)
    hits += inside(Point{ ux(rng), uy(rng) }) ? 1 : 0;
  const double frac = static_cast<double>(hits) / static_cast<double>(samples);
  const double box_area = box.width() * box.height();
  const double se = box_area * std::sqrt(frac * (1 - frac) / static_cast<double>(samples));
  return { box_area * frac, se };
}

// ---------------------------------------------------------------------------
// Diffusion
// ---------------------------------------------------------------------------

using Dense = std::vector<std::vector<double>>;

//! Transition matrix straight from the degree formula on the lattice graph.
inline Dense dense_operator(const Lattice& lat, double mobility)
{
  const auto ids = lat.active_ids();
  const std::size_t n = ids.size();
  std::size_t q_max = 0;
  for (NodeId id : ids)
    q_max = std::max(q_max, lat.degree(id));
  Dense t(n, std::vector<double>(n, 0.0));
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      if (a == b)
        t[a][b] = q_max ? 1.0 - mobility * static_cast<double>(lat.degree(ids[a])) /
                                  static_cast<double>(q_max)
                        : 1.0;
      else if (lat.has_link(ids[a], ids[b]))
        t[a][b] = mobility / static_cast<double>(q_max);
    }
  }
  return t;
}

inline Dense multiply(const Dense& a, const Dense& b)
{
  const std::size_t n = a.size();
  Dense c(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t j = 0; j < n; ++j)
        c[i][j] += a[i][k] * b[k][j];
  return c;
}

inline Dense matrix_power(const Dense& t, std::size_t k)
{
  const std::size_t n = t.size();
  Dense r(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    r[i][i] = 1.0;
  for (std::size_t s = 0; s < k; ++s)
    r = multiply(r, t);
  return r;
}

inline std::vector<double> mat_vec(const Dense& m, std::span<const double> v)
{
  std::vector<double> out(m.size(), 0.0);
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < v.size(); ++j)
      out[i] += m[i][j] * v[j];
  return out;
}

//! Random connected graph lattice: a random spanning tree plus extra links.
template<typename Rng>
Lattice random_lattice(Rng& rng, std::size_t n, double extra_link_prob = 0.15,
                       bool connected = true)
{
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Point> pts;
  for (std::size_t i = 0; i < n; ++i)
    pts.push_back({ u(rng) * 10, u(rng) * 10 });
  Lattice lat(std::move(pts), 1.0, 100.0);
  for (std::size_t i = 1; i < n; ++i) {
    if (!connected && u(rng) < 0.3)
      continue;
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    lat.add_link(i, pick(rng));
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (!lat.has_link(i, j) && u(rng) < extra_link_prob)
        lat.add_link(i, j);
  return lat;
}

// ---------------------------------------------------------------------------
// Crossvalidation
// ---------------------------------------------------------------------------

struct BruteUcv
{
  double ucv;
  std::vector<double> loo_values; // p_{k,i,-i}
  std::vector<double> loo_sums;   // sum of each leave-one-out vector
};

//! UCV_k by building each leave-one-out start vector, evolving it with a
//! dense matrix power, and reading it at the held-out node.
inline BruteUcv ucv_bruteforce(const Dense& t_pow_k, const std::vector<std::size_t>& obs_index,
                               std::size_t n_nodes, double area)
{
  const std::size_t n = obs_index.size();
  std::vector<double> p0(n_nodes, 0.0);
  for (std::size_t j : obs_index)
    p0[j] += 1.0 / static_cast<double>(n);
  const auto pk = mat_vec(t_pow_k, p0);
  double sq = 0.0;
  for (double v : pk)
    sq += v * v;

  BruteUcv out{};
  double loo_total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> q(n_nodes, 0.0);
    for (std::size_t m = 0; m < n; ++m)
      if (m != i)
        q[obs_index[m]] += 1.0 / static_cast<double>(n - 1);
    const auto qk = mat_vec(t_pow_k, q);
    double s = 0.0;
    for (double v : qk)
      s += v;
    out.loo_sums.push_back(s);
    out.loo_values.push_back(qk[obs_index[i]]);
    loo_total += qk[obs_index[i]];
  }
  const double scale = static_cast<double>(n_nodes) / area;
  out.ucv = scale * sq - scale * (2.0 / static_cast<double>(n)) * loo_total;
  return out;
}

// ---------------------------------------------------------------------------
// Home range
// ---------------------------------------------------------------------------

//! Smallest subset size reaching `coverage`, by enumerating all subsets.
inline std::size_t min_cover_cardinality(const std::vector<double>& p, double coverage)
{
  const std::size_t n = p.size();
  std::size_t best = n + 1;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    const auto size = static_cast<std::size_t>(std::popcount(mask));
    if (size >= best)
      continue;
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (mask & (1u << i))
        s += p[i];
    if (s >= coverage - 1e-12)
      best = size;
  }
  return best;
}

// ---------------------------------------------------------------------------
// Fixtures
// ---------------------------------------------------------------------------

//! The worked six-node example: nodes 0..5 with nine links.
inline Lattice six_node_lattice()
{
  std::vector<Point> pts{ { 0, 0 }, { 1, 0 }, { 0, 1 }, { 1, 1 }, { 0, 2 }, { 1, 2 } };
  return Lattice::from_links(std::move(pts),
                             { { 0, 1 }, { 0, 2 }, { 0, 3 }, { 1, 2 }, { 1, 3 }, { 2, 3 },
                               { 2, 4 }, { 3, 4 }, { 4, 5 } },
                             1.0, 6.0);
}

//! Printed transition matrix of the worked example.
inline Dense six_node_printed_T()
{
  return { { 0.625, 0.125, 0.125, 0.125, 0.000, 0.000 },
           { 0.125, 0.625, 0.125, 0.125, 0.000, 0.000 },
           { 0.125, 0.125, 0.500, 0.125, 0.125, 0.000 },
           { 0.125, 0.125, 0.125, 0.500, 0.125, 0.000 },
           { 0.000, 0.000, 0.125, 0.125, 0.625, 0.125 },
           { 0.000, 0.000, 0.000, 0.000, 0.125, 0.875 } };
}

//! Four-decimal printed value: either rounded (|v - printed| <= 5e-5) or
//! truncated (printed <= v < printed + 1e-4).
inline bool matches_printed(double value, double printed)
{
  const double d = value - printed;
  return std::abs(d) <= 5e-5 || (d >= -1e-12 && d < 1e-4);
}

} // namespace latden::oracle
