#pragma once

#include "latden/error.hpp"
#include "latden/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

namespace latden {

using NodeId = std::size_t;
using Link = std::pair<NodeId, NodeId>;

//! Nodes with planar positions plus a symmetric neighbor relation.
//!
//! Node ids are stable: removing a node tombstones it rather than
//! renumbering, so `id_count()` can exceed `node_count()`.
class Lattice
{
public:
  Lattice() = default;

  Lattice(std::vector<Point> positions, double spacing, double region_area,
          std::optional<Point> grid_anchor = std::nullopt)
    : positions_(std::move(positions))
    , alive_(positions_.size(), 1)
    , neighbors_(positions_.size())
    , spacing_(spacing)
    , region_area_(region_area)
    , anchor_(grid_anchor)
  {
    if (positions_.empty())
      throw ValidationError("lattice needs at least one node");
    if (!(spacing_ > 0.0))
      throw ValidationError("lattice spacing must be positive");
    if (!(region_area_ > 0.0))
      throw ValidationError("lattice region area must be positive");
  }

  //! Lattice from an explicit graph (fixtures, imported lattices).
  static Lattice from_links(std::vector<Point> positions, const std::vector<Link>& links,
                            double spacing, double region_area)
  {
    Lattice lat(std::move(positions), spacing, region_area);
    for (auto [i, j] : links)
      lat.add_link(i, j);
    return lat;
  }

  std::size_t id_count() const { return positions_.size(); }
  std::size_t node_count() const
  {
    return static_cast<std::size_t>(std::count(alive_.begin(), alive_.end(), 1));
  }
  bool has_node(NodeId id) const { return id < positions_.size() && alive_[id]; }
  const Point& position(NodeId id) const { return positions_.at(id); }
  const std::vector<NodeId>& neighbors(NodeId id) const { return neighbors_.at(id); }
  std::size_t degree(NodeId id) const { return neighbors_.at(id).size(); }
  double spacing() const { return spacing_; }
  double region_area() const { return region_area_; }

  //! Origin of the square grid the nodes were generated on; absent for
  //! lattices built from an explicit graph.
  const std::optional<Point>& grid_anchor() const { return anchor_; }

  std::vector<NodeId> active_ids() const
  {
    std::vector<NodeId> ids;
    ids.reserve(positions_.size());
    for (NodeId i = 0; i < positions_.size(); ++i)
      if (alive_[i])
        ids.push_back(i);
    return ids;
  }

  bool has_link(NodeId i, NodeId j) const
  {
    if (!has_node(i) || !has_node(j))
      return false;
    const auto& nb = neighbors_[i];
    return std::binary_search(nb.begin(), nb.end(), j);
  }

  //! Unordered links as (i, j) with i < j, sorted.
  std::vector<Link> links() const
  {
    std::vector<Link> out;
    for (NodeId i = 0; i < positions_.size(); ++i)
      for (NodeId j : neighbors_[i])
        if (i < j)
          out.emplace_back(i, j);
    return out;
  }

  std::size_t link_count() const
  {
    std::size_t twice = 0;
    for (const auto& nb : neighbors_)
      twice += nb.size();
    return twice / 2;
  }

  std::size_t max_degree() const
  {
    std::size_t q = 0;
    for (const auto& nb : neighbors_)
      q = std::max(q, nb.size());
    return q;
  }

  void add_link(NodeId i, NodeId j)
  {
    if (i == j)
      throw ValidationError("self link on node " + std::to_string(i));
    require_node(i);
    require_node(j);
    if (has_link(i, j))
      throw ValidationError("link " + std::to_string(i) + "-" + std::to_string(j) +
                            " already exists");
    insert_sorted(neighbors_[i], j);
    insert_sorted(neighbors_[j], i);
  }

  void remove_link(NodeId i, NodeId j)
  {
    require_node(i);
    require_node(j);
    if (!has_link(i, j))
      throw ValidationError("no link " + std::to_string(i) + "-" + std::to_string(j));
    erase_sorted(neighbors_[i], j);
    erase_sorted(neighbors_[j], i);
  }

  void remove_node(NodeId i)
  {
    require_node(i);
    for (NodeId j : neighbors_[i])
      erase_sorted(neighbors_[j], i);
    neighbors_[i].clear();
    alive_[i] = 0;
  }

  void clear_links()
  {
    for (auto& nb : neighbors_)
      nb.clear();
  }

private:
  void require_node(NodeId i) const
  {
    if (!has_node(i))
      throw ValidationError("no node " + std::to_string(i));
  }

  static void insert_sorted(std::vector<NodeId>& v, NodeId x)
  {
    v.insert(std::lower_bound(v.begin(), v.end(), x), x);
  }
  static void erase_sorted(std::vector<NodeId>& v, NodeId x)
  {
    v.erase(std::lower_bound(v.begin(), v.end(), x));
  }

  std::vector<Point> positions_;
  std::vector<char> alive_;
  std::vector<std::vector<NodeId>> neighbors_;
  double spacing_{ 1.0 };
  double region_area_{ 1.0 };
  std::optional<Point> anchor_;
};

// ---------------------------------------------------------------------------
// Neighbor rules
// ---------------------------------------------------------------------------

//! Nearest node in each of the 8 compass directions, one grid step away.
struct Grid8Rule
{};

//! Every pair with lo <= distance <= hi.
struct DistanceBandRule
{
  double lo{ 0.0 };
  double hi{ 0.0 };
};

using NeighborRule = std::variant<Grid8Rule, DistanceBandRule>;

inline std::string to_string(const NeighborRule& rule)
{
  if (const auto* band = std::get_if<DistanceBandRule>(&rule))
    return "band:" + std::to_string(band->lo) + ":" + std::to_string(band->hi);
  return "grid8";
}

// ---------------------------------------------------------------------------
// Construction
// ---------------------------------------------------------------------------

//! Square grid with step `spacing` anchored at `anchor` (default: the
//! region's bounding-box lower-left corner), filtered by contains(). Ids
//! are assigned row by row from south to north, west to east within a row.
inline Lattice generate_nodes(const Region& g, double spacing,
                              std::optional<Point> anchor = std::nullopt)
{
  if (!(spacing > 0.0) || !std::isfinite(spacing))
    throw ValidationError("spacing must be positive");
  const BoundingBox box = g.bounds();
  const Point origin = anchor.value_or(box.min);
  constexpr double slack = 1e-9;
  const auto first = [&](double lo, double o) {
    return static_cast<long long>(std::ceil((lo - o) / spacing - slack));
  };
  const auto last = [&](double hi, double o) {
    return static_cast<long long>(std::floor((hi - o) / spacing + slack));
  };
  const long long c0 = first(box.min.x, origin.x), c1 = last(box.max.x, origin.x);
  const long long r0 = first(box.min.y, origin.y), r1 = last(box.max.y, origin.y);
  if ((c1 - c0 + 1) * (r1 - r0 + 1) > 50'000'000LL)
    throw ValidationError("spacing too fine for region extent");

  std::vector<Point> nodes;
  for (long long r = r0; r <= r1; ++r) {
    for (long long c = c0; c <= c1; ++c) {
      const Point p{ origin.x + static_cast<double>(c) * spacing,
                     origin.y + static_cast<double>(r) * spacing };
      if (contains(g, p))
        nodes.push_back(p);
    }
  }
  if (nodes.empty())
    throw ValidationError("region too small for spacing");
  return Lattice(std::move(nodes), spacing, region_area(g), origin);
}

namespace detail {

inline std::int64_t cell_key(long long cx, long long cy)
{
  return (static_cast<std::int64_t>(cx) << 32) ^ static_cast<std::int64_t>(cy & 0xffffffffLL);
}

inline std::vector<Link> grid8_candidates(const Lattice& lat)
{
  const double s = lat.spacing();
  Point origin{ std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity() };
  if (lat.grid_anchor()) {
    origin = *lat.grid_anchor();
  } else {
    for (NodeId id : lat.active_ids()) {
      origin.x = std::min(origin.x, lat.position(id).x);
      origin.y = std::min(origin.y, lat.position(id).y);
    }
  }
  std::unordered_map<std::int64_t, NodeId> at;
  std::vector<std::pair<long long, long long>> cell(lat.id_count());
  for (NodeId id : lat.active_ids()) {
    const Point p = lat.position(id);
    const long long cx = std::llround((p.x - origin.x) / s);
    const long long cy = std::llround((p.y - origin.y) / s);
    cell[id] = { cx, cy };
    at.emplace(cell_key(cx, cy), id);
  }
  static constexpr int offsets[4][2] = { { 1, 0 }, { -1, 1 }, { 0, 1 }, { 1, 1 } };
  std::vector<Link> out;
  for (NodeId id : lat.active_ids()) {
    for (const auto& off : offsets) {
      auto it = at.find(cell_key(cell[id].first + off[0], cell[id].second + off[1]));
      if (it != at.end() && it->second != id)
        out.emplace_back(std::min(id, it->second), std::max(id, it->second));
    }
  }
  return out;
}

inline std::vector<Link> band_candidates(const Lattice& lat, DistanceBandRule band)
{
  const double tol = 1e-9 * std::max(band.hi, 1.0);
  const double cell = std::max(band.hi, lat.spacing());
  std::unordered_map<std::int64_t, std::vector<NodeId>> buckets;
  auto cell_of = [&](Point p) {
    return std::pair{ static_cast<long long>(std::floor(p.x / cell)),
                      static_cast<long long>(std::floor(p.y / cell)) };
  };
  const auto ids = lat.active_ids();
  for (NodeId id : ids) {
    auto [cx, cy] = cell_of(lat.position(id));
    buckets[cell_key(cx, cy)].push_back(id);
  }
  std::vector<Link> out;
  for (NodeId i : ids) {
    const Point p = lat.position(i);
    auto [cx, cy] = cell_of(p);
    for (long long dx = -1; dx <= 1; ++dx) {
      for (long long dy = -1; dy <= 1; ++dy) {
        auto it = buckets.find(cell_key(cx + dx, cy + dy));
        if (it == buckets.end())
          continue;
        for (NodeId j : it->second) {
          if (j <= i)
            continue;
          const double d = distance(p, lat.position(j));
          if (d >= band.lo - tol && d <= band.hi + tol)
            out.emplace_back(i, j);
        }
      }
    }
  }
  return out;
}

} // namespace detail

//! Replaces the adjacency of `lat` with the links produced by `rule`, then
//! drops every link whose segment leaves the region.
inline Lattice build_adjacency(Lattice lat, const Region& g, const NeighborRule& rule)
{
  std::vector<Link> candidates;
  if (const auto* band = std::get_if<DistanceBandRule>(&rule)) {
    if (!(band->lo >= 0.0) || !(band->hi > 0.0))
      throw ValidationError("distance band bounds must satisfy 0 <= lo and hi > 0");
    if (band->hi < band->lo)
      throw ValidationError("distance band has hi < lo");
    candidates = detail::band_candidates(lat, *band);
  } else {
    candidates = detail::grid8_candidates(lat);
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  lat.clear_links();
  for (auto [i, j] : candidates)
    if (segment_within_region(g, lat.position(i), lat.position(j)))
      lat.add_link(i, j);
  return lat;
}

// ---------------------------------------------------------------------------
// Edits
// ---------------------------------------------------------------------------

struct EditCommand
{
  enum class Kind
  {
    AddLink,
    RemoveLink,
    RemoveNode
  };
  Kind kind{ Kind::RemoveNode };
  NodeId i{ 0 };
  NodeId j{ 0 };
  std::size_t line{ 0 }; // source line, 0 when built in code

  std::string str() const
  {
    switch (kind) {
      case Kind::AddLink:
        return "addlink " + std::to_string(i) + " " + std::to_string(j);
      case Kind::RemoveLink:
        return "removelink " + std::to_string(i) + " " + std::to_string(j);
      case Kind::RemoveNode:
        break;
    }
    return "removenode " + std::to_string(i);
  }
};

struct EditScript
{
  std::vector<EditCommand> commands;

  EditScript& add_link(NodeId i, NodeId j)
  {
    commands.push_back({ EditCommand::Kind::AddLink, i, j });
    return *this;
  }
  EditScript& remove_link(NodeId i, NodeId j)
  {
    commands.push_back({ EditCommand::Kind::RemoveLink, i, j });
    return *this;
  }
  EditScript& remove_node(NodeId i)
  {
    commands.push_back({ EditCommand::Kind::RemoveNode, i, 0 });
    return *this;
  }
};

//! Applies commands in order. Errors name the failing command's index
//! (0-based) and source line when known.
inline Lattice apply_edits(Lattice lat, const EditScript& script)
{
  for (std::size_t k = 0; k < script.commands.size(); ++k) {
    const EditCommand& cmd = script.commands[k];
    try {
      switch (cmd.kind) {
        case EditCommand::Kind::AddLink:
          lat.add_link(cmd.i, cmd.j);
          break;
        case EditCommand::Kind::RemoveLink:
          lat.remove_link(cmd.i, cmd.j);
          break;
        case EditCommand::Kind::RemoveNode:
          lat.remove_node(cmd.i);
          break;
      }
    } catch (const ValidationError& e) {
      std::string where = "edit command " + std::to_string(k);
      if (cmd.line)
        where += " (line " + std::to_string(cmd.line) + ")";
      throw ValidationError(where + " '" + cmd.str() + "': " + e.what());
    }
  }
  return lat;
}

// ---------------------------------------------------------------------------
// Connectivity
// ---------------------------------------------------------------------------

struct ConnectivityReport
{
  //! Components ordered by smallest member; members ascending.
  std::vector<std::vector<NodeId>> components;
  //! Active nodes with no neighbors.
  std::vector<NodeId> isolated;
};

inline ConnectivityReport connectivity_report(const Lattice& lat)
{
  ConnectivityReport report;
  std::vector<char> seen(lat.id_count(), 0);
  std::vector<NodeId> stack;
  for (NodeId root : lat.active_ids()) {
    if (lat.degree(root) == 0)
      report.isolated.push_back(root);
    if (seen[root])
      continue;
    std::vector<NodeId> comp;
    stack.push_back(root);
    seen[root] = 1;
    while (!stack.empty()) {
      const NodeId v = stack.back();
      stack.pop_back();
      comp.push_back(v);
      for (NodeId w : lat.neighbors(v)) {
        if (!seen[w]) {
          seen[w] = 1;
          stack.push_back(w);
        }
      }
    }
    std::sort(comp.begin(), comp.end());
    report.components.push_back(std::move(comp));
  }
  return report;
}

// ---------------------------------------------------------------------------
// Nearest-node queries
// ---------------------------------------------------------------------------

//! Bucket grid over active nodes for nearest-node lookups. Ties resolve to
//! the smaller node id.
class NodeLocator
{
public:
  explicit NodeLocator(const Lattice& lat)
    : lat_(&lat)
    , cell_(lat.spacing())
  {
    for (NodeId id : lat.active_ids()) {
      const auto [cx, cy] = cell_of(lat.position(id));
      buckets_[detail::cell_key(cx, cy)].push_back(id);
      lo_x_ = std::min(lo_x_, cx);
      hi_x_ = std::max(hi_x_, cx);
      lo_y_ = std::min(lo_y_, cy);
      hi_y_ = std::max(hi_y_, cy);
    }
  }

  //! Nearest active node and its distance.
  std::pair<NodeId, double> nearest(Point p) const
  {
    const auto [cx, cy] = cell_of(p);
    NodeId best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    const long long max_ring =
      std::max({ std::abs(cx - lo_x_), std::abs(cx - hi_x_), std::abs(cy - lo_y_),
                 std::abs(cy - hi_y_) }) + 1;
    if (max_ring > 64) {
      for (NodeId id : lat_->active_ids()) {
        const double d = distance(p, lat_->position(id));
        if (d < best_d) {
          best_d = d;
          best = id;
        }
      }
      return { best, best_d };
    }
    for (long long ring = 0; ring <= max_ring; ++ring) {
      // every point in ring r+1 or beyond is at least r*cell away
      if (best_d < static_cast<double>(ring - 1) * cell_)
        break;
      for (long long dx = -ring; dx <= ring; ++dx) {
        for (long long dy = -ring; dy <= ring; ++dy) {
          if (std::max(std::abs(dx), std::abs(dy)) != ring)
            continue;
          auto it = buckets_.find(detail::cell_key(cx + dx, cy + dy));
          if (it == buckets_.end())
            continue;
          for (NodeId id : it->second) {
            const double d = distance(p, lat_->position(id));
            if (d < best_d || (d == best_d && id < best)) {
              best_d = d;
              best = id;
            }
          }
        }
      }
    }
    return { best, best_d };
  }

private:
  std::pair<long long, long long> cell_of(Point p) const
  {
    return { static_cast<long long>(std::floor(p.x / cell_)),
             static_cast<long long>(std::floor(p.y / cell_)) };
  }

  const Lattice* lat_;
  double cell_;
  std::unordered_map<std::int64_t, std::vector<NodeId>> buckets_;
  long long lo_x_{ std::numeric_limits<long long>::max() };
  long long hi_x_{ std::numeric_limits<long long>::min() };
  long long lo_y_{ std::numeric_limits<long long>::max() };
  long long hi_y_{ std::numeric_limits<long long>::min() };
};

} // namespace latden
