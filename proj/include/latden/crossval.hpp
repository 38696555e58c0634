#pragma once

#include "latden/diffusion.hpp"
#include "latden/error.hpp"
#include "latden/lattice.hpp"

#include <algorithm>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace latden {

inline constexpr std::size_t kDefaultMaxSteps = 1000;
inline constexpr std::size_t kDefaultWindow = 30;

//! Observations snapped to lattice nodes.
struct ObservationAssignment
{
  std::vector<Point> observations;
  std::vector<NodeId> node_of;       // per observation
  std::vector<double> snap_distance; // per observation
  std::vector<std::size_t> counts;   // per compact node index
  std::vector<NodeId> occupied;      // distinct observed node ids, ascending
  ProbabilityVector p0;

  std::size_t n() const { return observations.size(); }
};

//! Largest snap distance accepted, as a multiple of the lattice spacing.
inline constexpr double kMaxSnapSpacings = 1.5;

//! Snaps every observation to its nearest active node (ties to the smaller
//! id) and forms p0(i) = count(i) / n.
inline ObservationAssignment assign_observations(std::span<const Point> obs, const Lattice& lat)
{
  if (obs.empty())
    throw ValidationError("no observations");
  const auto ids = lat.active_ids();
  if (ids.empty())
    throw ValidationError("lattice has no active nodes");

  NodeLocator locate(lat);
  ObservationAssignment a;
  a.observations.assign(obs.begin(), obs.end());
  a.counts.assign(ids.size(), 0);
  std::vector<std::size_t> outside;
  const double limit = kMaxSnapSpacings * lat.spacing();
  for (std::size_t i = 0; i < obs.size(); ++i) {
    auto [node, d] = locate.nearest(obs[i]);
    if (!(d <= limit))
      outside.push_back(i);
    a.node_of.push_back(node);
    a.snap_distance.push_back(d);
    const auto c = static_cast<std::size_t>(std::lower_bound(ids.begin(), ids.end(), node) - ids.begin());
    ++a.counts[c];
  }
  if (!outside.empty()) {
    std::string msg = "observation outside lattice support (indices";
    for (std::size_t k = 0; k < outside.size() && k < 20; ++k)
      msg += " " + std::to_string(outside[k]);
    if (outside.size() > 20)
      msg += " ... " + std::to_string(outside.size()) + " total";
    throw ValidationError(msg + ")");
  }

  const double n = static_cast<double>(obs.size());
  std::vector<double> p(ids.size(), 0.0);
  for (std::size_t c = 0; c < ids.size(); ++c) {
    if (a.counts[c]) {
      p[c] = static_cast<double>(a.counts[c]) / n;
      a.occupied.push_back(ids[c]);
    }
  }
  a.p0 = ProbabilityVector(std::move(p));
  return a;
}

struct UcvRecord
{
  std::size_t k{ 0 };
  double ucv{ 0.0 };
};

struct UcvTrace
{
  std::vector<UcvRecord> records;
  //! Records with k below this are reported but never selected.
  std::size_t scan_start{ 1 };
  std::size_t k_max{ kDefaultMaxSteps };
  std::size_t window{ kDefaultWindow };
  std::size_t k_star{ 0 };
  bool stopped_by_window{ false };
  //! The selected k is the last scanned k, so the true minimum may lie
  //! beyond the scan.
  bool minimum_at_edge{ false };
};

struct KSelection
{
  std::size_t k{ 0 };
  bool at_edge{ false };
};

//! Smallest k attaining the minimum UCV among selectable records.
inline KSelection select_k(const UcvTrace& trace)
{
  if (trace.records.empty())
    throw ValidationError("empty UCV trace");
  const UcvRecord* best = nullptr;
  for (const UcvRecord& r : trace.records) {
    if (r.k < trace.scan_start)
      continue;
    if (!best || r.ucv < best->ucv)
      best = &r;
  }
  if (!best)
    best = &trace.records.front();
  return { best->k, best->k == trace.records.back().k };
}

struct UcvScanOptions
{
  std::size_t k_max{ kDefaultMaxSteps };
  //! Stop after this many consecutive steps without a new running minimum;
  //! 0 scans to k_max.
  std::size_t window{ kDefaultWindow };
  unsigned threads{ 0 };
};

//! Unbiased crossvalidation over walk length:
//!
//!   UCV_k = (N/A) sum_j p_k(j)^2 - (N/A) (2/n) sum_i p_{k,i,-i}
//!
//! The leave-one-out value uses linearity of T^k: removing observation i
//! (at node j) gives p_{0,-i} = (n p_0 - e_j) / (n - 1), hence
//! p_{k,i,-i} = (n p_k(j) - (T^k)[j][j]) / (n - 1). Only one column
//! diffusion per occupied node is needed besides the full-data diffusion.
inline UcvTrace ucv_scan(const TransitionOperator& T, const ObservationAssignment& assign,
                         const Lattice& lat, const UcvScanOptions& opt = {})
{
  const std::size_t n = assign.n();
  if (n < 2)
    throw ValidationError("crossvalidation needs at least 2 observations, got " +
                          std::to_string(n));
  if (opt.k_max < 1)
    throw ValidationError("k_max must be at least 1");
  if (assign.p0.size() != T.dimension())
    throw ValidationError("assignment does not match operator dimension");

  const double scale = static_cast<double>(T.dimension()) / lat.region_area();
  const double dn = static_cast<double>(n);

  ColumnPropagator columns(T, assign.occupied, opt.threads);
  // slot of each observation's node among the propagated columns
  std::vector<std::size_t> slot(n), node_row(n);
  for (std::size_t i = 0; i < n; ++i) {
    slot[i] = static_cast<std::size_t>(
      std::lower_bound(assign.occupied.begin(), assign.occupied.end(), assign.node_of[i]) -
      assign.occupied.begin());
    node_row[i] = T.index_of(assign.node_of[i]);
  }

  std::vector<double> p(assign.p0.values().begin(), assign.p0.values().end());
  std::vector<double> next(p.size());

  auto score = [&]() {
    double sq = 0.0;
    for (double v : p)
      sq += v * v;
    double loo = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      loo += (dn * p[node_row[i]] - columns.diagonal(slot[i])) / (dn - 1.0);
    return scale * sq - scale * (2.0 / dn) * loo;
  };

  UcvTrace trace;
  trace.k_max = opt.k_max;
  trace.window = opt.window;
  trace.records.push_back({ 0, score() });

  double best = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  for (std::size_t k = 1; k <= opt.k_max; ++k) {
    T.apply(p, next);
    p.swap(next);
    columns.advance();
    const double u = score();
    trace.records.push_back({ k, u });
    if (u < best) {
      best = u;
      since_best = 0;
    } else if (opt.window && ++since_best >= opt.window) {
      trace.stopped_by_window = true;
      break;
    }
  }

  const KSelection sel = select_k(trace);
  trace.k_star = sel.k;
  trace.minimum_at_edge = sel.at_edge;
  return trace;
}

} // namespace latden
