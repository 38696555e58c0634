#pragma once

#include "latden/crossval.hpp"
#include "latden/diffusion.hpp"
#include "latden/error.hpp"
#include "latden/geometry.hpp"
#include "latden/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace latden {

struct EstimateOptions
{
  double spacing{ 1.0 };
  double mobility{ kDefaultMobility };
  NeighborRule rule{ Grid8Rule{} };
  EditScript edits;
  //! Fixed walk length; empty selects k by crossvalidation.
  std::optional<std::size_t> k;
  UcvScanOptions scan;
  //! Grid origin; empty anchors at the region's lower-left corner.
  std::optional<Point> anchor;
};

struct EstimateResult
{
  Lattice lattice;
  ObservationAssignment assignment;
  DensityField density;
  std::size_t k_used{ 0 };
  std::optional<UcvTrace> trace;
  std::size_t component_count{ 0 };
  std::vector<std::string> warnings;
};

//! Density on an already-built lattice. Observations are snapped to nodes,
//! k is fixed or chosen by crossvalidation, and p_k = T^k p_0 is scaled to
//! density units.
inline EstimateResult estimate_on_lattice(Lattice lat, std::span<const Point> observations,
                                          const EstimateOptions& opt)
{
  EstimateResult r;
  const TransitionOperator T = build_operator(lat, opt.mobility);
  r.assignment = assign_observations(observations, lat);

  const ConnectivityReport conn = connectivity_report(lat);
  r.component_count = conn.components.size();
  if (r.component_count > 1)
    r.warnings.push_back("lattice has " + std::to_string(r.component_count) +
                         " connected components; the uniform limit holds per component");
  if (!conn.isolated.empty())
    r.warnings.push_back(std::to_string(conn.isolated.size()) + " isolated node(s)");

  if (opt.k) {
    r.k_used = *opt.k;
  } else {
    if (r.assignment.n() < 2)
      throw ValidationError("automatic k needs at least 2 observations");
    UcvTrace trace = ucv_scan(T, r.assignment, lat, opt.scan);
    r.k_used = trace.k_star;
    if (trace.minimum_at_edge)
      r.warnings.push_back("minimum at scan edge (k = " + std::to_string(trace.k_star) +
                           "); raise k_max");
    r.trace = std::move(trace);
  }

  const ProbabilityVector p = evolve(T, r.assignment.p0, r.k_used);
  r.density = to_density(p, lat);
  r.lattice = std::move(lat);
  return r;
}

//! Full pipeline: nodes, adjacency, edits, then estimate_on_lattice.
inline EstimateResult estimate(const Region& region, std::span<const Point> observations,
                               const EstimateOptions& opt)
{
  Lattice lat = generate_nodes(region, opt.spacing, opt.anchor);
  lat = build_adjacency(std::move(lat), region, opt.rule);
  lat = apply_edits(std::move(lat), opt.edits);
  return estimate_on_lattice(std::move(lat), observations, opt);
}

// ---------------------------------------------------------------------------
// Home range
// ---------------------------------------------------------------------------

struct HomeRange
{
  //! In inclusion order: decreasing probability, ties by ascending id.
  std::vector<NodeId> node_ids;
  std::vector<double> probability;
  double coverage{ 0.0 };
  double achieved{ 0.0 };
  double area{ 0.0 };
};

//! Slack on the coverage test so sums that equal `coverage` exactly are not
//! lost to rounding in the running total.
inline constexpr double kCoverageSlack = 1e-12;

//! Fewest nodes whose probabilities total at least `coverage`. Taking nodes
//! in decreasing probability is optimal: any set of m nodes totals no more
//! than the m largest probabilities.
inline HomeRange home_range(const DensityField& f, double coverage)
{
  if (!(coverage > 0.0 && coverage < 1.0))
    throw ValidationError("coverage must lie in (0, 1), got " + std::to_string(coverage));
  std::vector<std::size_t> order(f.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (f.probability[a] != f.probability[b])
      return f.probability[a] > f.probability[b];
    return f.node_ids[a] < f.node_ids[b];
  });

  HomeRange hr;
  hr.coverage = coverage;
  for (std::size_t c : order) {
    if (hr.achieved >= coverage - kCoverageSlack)
      break;
    hr.node_ids.push_back(f.node_ids[c]);
    hr.probability.push_back(f.probability[c]);
    hr.achieved += f.probability[c];
  }
  hr.area = static_cast<double>(hr.node_ids.size()) * f.cell_area();
  return hr;
}

inline HomeRange home_range(const EstimateResult& r, double coverage)
{
  return home_range(r.density, coverage);
}

// ---------------------------------------------------------------------------
// Raster export
// ---------------------------------------------------------------------------

//! Cell values over a bounding box; row 0 is the northernmost row. Cells
//! whose centre lies outside the region hold NaN.
struct Raster
{
  std::size_t nx{ 0 };
  std::size_t ny{ 0 };
  BoundingBox box{};
  std::vector<double> values;

  double cell_width() const { return box.width() / static_cast<double>(nx); }
  double cell_height() const { return box.height() / static_cast<double>(ny); }
  double cell_area() const { return cell_width() * cell_height(); }
  double& at(std::size_t row, std::size_t col) { return values[row * nx + col]; }
  double at(std::size_t row, std::size_t col) const { return values[row * nx + col]; }
  Point center(std::size_t row, std::size_t col) const
  {
    return { box.min.x + (static_cast<double>(col) + 0.5) * cell_width(),
             box.max.y - (static_cast<double>(row) + 0.5) * cell_height() };
  }
  static bool outside(double v) { return std::isnan(v); }
};

//! Nearest-node density at each cell centre inside the region.
inline Raster grid_export(const DensityField& f, const Lattice& lat, const Region& region,
                          std::size_t nx, std::size_t ny)
{
  if (nx < 2 || ny < 2)
    throw ValidationError("raster resolution must be at least 2 per axis");
  Raster r;
  r.nx = nx;
  r.ny = ny;
  r.box = region.bounds();
  r.values.assign(nx * ny, std::numeric_limits<double>::quiet_NaN());
  const NodeLocator locate(lat);
  const auto& ids = f.node_ids;
  for (std::size_t row = 0; row < ny; ++row) {
    for (std::size_t col = 0; col < nx; ++col) {
      const Point c = r.center(row, col);
      if (!contains(region, c))
        continue;
      const NodeId id = locate.nearest(c).first;
      const auto it = std::lower_bound(ids.begin(), ids.end(), id);
      r.at(row, col) = f.density[static_cast<std::size_t>(it - ids.begin())];
    }
  }
  return r;
}

inline Raster grid_export(const EstimateResult& result, const Region& region, std::size_t nx,
                          std::size_t ny)
{
  return grid_export(result.density, result.lattice, region, nx, ny);
}

// ---------------------------------------------------------------------------
// Causeway fixture
// ---------------------------------------------------------------------------

//! Unit square crossed by a causeway: a notch from the south shore spanning
//! eastings [0.49, 0.51] up to northing 0.8, leaving an opening to the
//! north. A small square island sits in the western basin. Observations are
//! uniform over the region west of easting 0.5.
struct CausewayFixture
{
  Region region;
  std::vector<Point> observations;
  double spacing{ 0.02 };
  double barrier_easting{ 0.5 };
};

inline constexpr std::uint64_t kCausewaySeed = 20100930;

inline Region causeway_region()
{
  Ring outer({ { 0.0, 0.0 },
               { 0.49, 0.0 },
               { 0.49, 0.8 },
               { 0.51, 0.8 },
               { 0.51, 0.0 },
               { 1.0, 0.0 },
               { 1.0, 1.0 },
               { 0.0, 1.0 } });
  Ring island({ { 0.15, 0.55 }, { 0.3, 0.55 }, { 0.3, 0.7 }, { 0.15, 0.7 } });
  return Region(std::move(outer), { std::move(island) });
}

inline CausewayFixture make_causeway_fixture(std::size_t n = 200,
                                             std::uint64_t seed = kCausewaySeed,
                                             double spacing = 0.02)
{
  CausewayFixture fx;
  fx.region = causeway_region();
  fx.spacing = spacing;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(0.0, fx.barrier_easting);
  std::uniform_real_distribution<double> uy(0.0, 1.0);
  while (fx.observations.size() < n) {
    const Point p{ ux(rng), uy(rng) };
    if (p.x < fx.barrier_easting && contains(fx.region, p))
      fx.observations.push_back(p);
  }
  return fx;
}

//! Edits that close the causeway opening: drop nodes on the barrier line
//! and any link straddling it.
inline EditScript causeway_sever_script(const Lattice& lat, double barrier_easting = 0.5)
{
  EditScript script;
  std::vector<char> dropped(lat.id_count(), 0);
  for (NodeId id : lat.active_ids()) {
    if (std::abs(lat.position(id).x - barrier_easting) <= 1e-6) {
      script.remove_node(id);
      dropped[id] = 1;
    }
  }
  for (auto [i, j] : lat.links()) {
    if (dropped[i] || dropped[j])
      continue;
    const double xi = lat.position(i).x - barrier_easting;
    const double xj = lat.position(j).x - barrier_easting;
    if ((xi < 0) != (xj < 0))
      script.remove_link(i, j);
  }
  return script;
}

} // namespace latden
