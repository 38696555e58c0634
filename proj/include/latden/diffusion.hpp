#pragma once

#include "latden/error.hpp"
#include "latden/lattice.hpp"
#include "latden/parallel.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace latden {

inline constexpr double kDefaultMobility = 0.5;

//! One-step random-walk operator on the active nodes of a lattice.
//!
//! With q_i the degree of node i, Q the largest degree and M the mobility:
//!   T[i][i] = 1 - M q_i / Q,   T[i][j] = M / Q for linked i != j.
//! Every off-diagonal entry is the same stored scalar, so T is symmetric
//! exactly. Rows and columns are indexed in ascending node-id order
//! ("compact" indices), skipping tombstoned ids.
class TransitionOperator
{
public:
  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

  TransitionOperator(const Lattice& lat, double mobility)
    : mobility_(mobility)
  {
    if (!(mobility > 0.0 && mobility <= 1.0))
      throw ValidationError("mobility must lie in (0, 1], got " + std::to_string(mobility));
    ids_ = lat.active_ids();
    if (ids_.empty())
      throw ValidationError("lattice has no active nodes");
    compact_.assign(lat.id_count(), npos);
    for (std::size_t c = 0; c < ids_.size(); ++c)
      compact_[ids_[c]] = c;

    max_degree_ = lat.max_degree();
    if (max_degree_ == 0 && ids_.size() > 1)
      throw ComputationError("no links: every node of the lattice is isolated");

    offsets_.reserve(ids_.size() + 1);
    offsets_.push_back(0);
    diag_.reserve(ids_.size());
    off_ = max_degree_ ? mobility / static_cast<double>(max_degree_) : 0.0;
    for (NodeId id : ids_) {
      for (NodeId nb : lat.neighbors(id))
        cols_.push_back(compact_[nb]);
      offsets_.push_back(cols_.size());
      const double q = static_cast<double>(lat.degree(id));
      diag_.push_back(max_degree_ ? 1.0 - mobility * q / static_cast<double>(max_degree_) : 1.0);
    }
  }

  std::size_t dimension() const { return ids_.size(); }
  double mobility() const { return mobility_; }
  std::size_t max_degree() const { return max_degree_; }
  double off_diagonal() const { return off_; }
  std::span<const NodeId> node_ids() const { return ids_; }
  std::span<const double> diagonal() const { return diag_; }
  std::size_t nonzeros() const { return cols_.size() + diag_.size(); }

  //! Compact index of a lattice node id, or npos if absent/tombstoned.
  std::size_t index_of(NodeId id) const { return id < compact_.size() ? compact_[id] : npos; }

  std::span<const std::size_t> row_neighbors(std::size_t row) const
  {
    return { cols_.data() + offsets_[row], offsets_[row + 1] - offsets_[row] };
  }

  double entry(std::size_t row, std::size_t col) const
  {
    if (row == col)
      return diag_[row];
    const auto nb = row_neighbors(row);
    return std::binary_search(nb.begin(), nb.end(), col) ? off_ : 0.0;
  }

  //! out = T * in. The neighbor sum is accumulated in ascending column order.
  void apply(std::span<const double> in, std::span<double> out) const
  {
    const std::size_t n = dimension();
    if (in.size() != n || out.size() != n)
      throw ValidationError("operator/vector dimension mismatch");
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t k = offsets_[i]; k < offsets_[i + 1]; ++k)
        s += in[cols_[k]];
      out[i] = diag_[i] * in[i] + off_ * s;
    }
  }

  //! Dense row-major copy; debugging and small-oracle use only.
  std::vector<double> dense() const
  {
    const std::size_t n = dimension();
    std::vector<double> m(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      m[i * n + i] = diag_[i];
      for (std::size_t j : row_neighbors(i))
        m[i * n + j] = off_;
    }
    return m;
  }

private:
  double mobility_;
  std::size_t max_degree_{ 0 };
  double off_{ 0.0 };
  std::vector<NodeId> ids_;
  std::vector<std::size_t> compact_;
  std::vector<std::size_t> offsets_;
  std::vector<std::size_t> cols_;
  std::vector<double> diag_;
};

inline TransitionOperator build_operator(const Lattice& lat, double mobility = kDefaultMobility)
{
  return TransitionOperator(lat, mobility);
}

//! Distribution of the walk after `step` steps, in compact node order.
class ProbabilityVector
{
public:
  static constexpr double kSumTolerance = 1e-10;

  ProbabilityVector() = default;

  explicit ProbabilityVector(std::vector<double> values, std::size_t step = 0)
    : values_(std::move(values))
    , step_(step)
  {
    if (values_.empty())
      throw ValidationError("probability vector is empty");
    double sum = 0.0;
    for (double v : values_) {
      if (!(v >= 0.0) || !std::isfinite(v))
        throw ValidationError("probability vector has a negative or non-finite entry");
      sum += v;
    }
    if (std::abs(sum - 1.0) > kSumTolerance)
      throw ValidationError("probability vector sums to " + std::to_string(sum));
  }

  //! Point mass on compact index `at`.
  static ProbabilityVector point_mass(std::size_t size, std::size_t at)
  {
    std::vector<double> v(size, 0.0);
    v.at(at) = 1.0;
    return ProbabilityVector(std::move(v));
  }

  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  std::size_t step() const { return step_; }
  double operator[](std::size_t i) const { return values_[i]; }

private:
  friend ProbabilityVector evolve(const TransitionOperator&, const ProbabilityVector&, std::size_t);

  struct Unchecked
  {};
  ProbabilityVector(Unchecked, std::vector<double> values, std::size_t step)
    : values_(std::move(values))
    , step_(step)
  {}

  std::vector<double> values_;
  std::size_t step_{ 0 };
};

//! p_k = T^k p_0 by k sparse products.
inline ProbabilityVector evolve(const TransitionOperator& T, const ProbabilityVector& p0,
                                std::size_t k)
{
  if (p0.size() != T.dimension())
    throw ValidationError("dimension mismatch: operator " + std::to_string(T.dimension()) +
                          ", vector " + std::to_string(p0.size()));
  std::vector<double> cur(p0.values().begin(), p0.values().end());
  std::vector<double> next(cur.size());
  for (std::size_t s = 0; s < k; ++s) {
    T.apply(cur, next);
    cur.swap(next);
  }
  return ProbabilityVector(ProbabilityVector::Unchecked{}, std::move(cur), p0.step() + k);
}

//! Columns T^k e_j for a set of nodes, advanced one step at a time so a
//! scan can read every intermediate k. By symmetry each column is also the
//! matching row of T^k.
class ColumnPropagator
{
public:
  ColumnPropagator(const TransitionOperator& T, std::span<const NodeId> node_ids,
                   unsigned threads = 0)
    : T_(&T)
    , threads_(threads)
  {
    columns_.reserve(node_ids.size());
    rows_.reserve(node_ids.size());
    for (NodeId id : node_ids) {
      const std::size_t c = T.index_of(id);
      if (c == TransitionOperator::npos)
        throw ValidationError("node " + std::to_string(id) + " is not an active lattice node");
      std::vector<double> e(T.dimension(), 0.0);
      e[c] = 1.0;
      columns_.push_back(std::move(e));
      rows_.push_back(c);
    }
    scratch_.resize(columns_.size(), std::vector<double>(T.dimension()));
  }

  void advance()
  {
    parallel_for(
      columns_.size(),
      [&](std::size_t i) {
        T_->apply(columns_[i], scratch_[i]);
        columns_[i].swap(scratch_[i]);
      },
      threads_);
    ++step_;
  }

  std::size_t step() const { return step_; }
  std::size_t size() const { return columns_.size(); }
  const std::vector<double>& column(std::size_t i) const { return columns_[i]; }
  //! (T^k)[j][j] for the i-th requested node j.
  double diagonal(std::size_t i) const { return columns_[i][rows_[i]]; }

private:
  const TransitionOperator* T_;
  unsigned threads_;
  std::size_t step_{ 0 };
  std::vector<std::vector<double>> columns_;
  std::vector<std::vector<double>> scratch_;
  std::vector<std::size_t> rows_;
};

//! T^k e_j for each requested node id j.
inline std::vector<std::vector<double>> evolve_columns(const TransitionOperator& T,
                                                       std::span<const NodeId> node_ids,
                                                       std::size_t k)
{
  ColumnPropagator prop(T, node_ids);
  for (std::size_t s = 0; s < k; ++s)
    prop.advance();
  std::vector<std::vector<double>> out;
  out.reserve(prop.size());
  for (std::size_t i = 0; i < prop.size(); ++i)
    out.push_back(prop.column(i));
  return out;
}

//! Per-node density f(s_i) = (N / area) p_i.
struct DensityField
{
  std::vector<NodeId> node_ids;
  std::vector<double> probability;
  std::vector<double> density;
  double region_area{ 0.0 };
  std::size_t step{ 0 };

  std::size_t size() const { return density.size(); }
  double cell_area() const { return region_area / static_cast<double>(density.size()); }
};

inline DensityField to_density(const ProbabilityVector& p, const Lattice& lat)
{
  auto ids = lat.active_ids();
  if (ids.size() != p.size())
    throw ValidationError("dimension mismatch between probability vector and lattice");
  const double scale = static_cast<double>(ids.size()) / lat.region_area();
  DensityField f;
  f.node_ids = std::move(ids);
  f.probability.assign(p.values().begin(), p.values().end());
  f.density.reserve(p.size());
  for (double v : p.values())
    f.density.push_back(scale * v);
  f.region_area = lat.region_area();
  f.step = p.step();
  return f;
}

} // namespace latden
