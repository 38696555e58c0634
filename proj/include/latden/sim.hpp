#pragma once

#include "latden/estimator.hpp"
#include "latden/kernel_baseline.hpp"
#include "latden/parallel.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

namespace latden {

using Matrix2 = std::array<std::array<double, 2>, 2>;

//! Square evaluation grid of `cells` x `cells` cells over [lo, hi]^2.
//! Values are indexed row-major from the south-west cell.
struct GridSpec
{
  double lo{ -10.0 };
  double hi{ 10.0 };
  std::size_t cells{ 16 };

  double step() const { return (hi - lo) / static_cast<double>(cells); }
  double cell_area() const { return step() * step(); }
  std::size_t size() const { return cells * cells; }
  Point center(std::size_t index) const
  {
    const std::size_t row = index / cells, col = index % cells;
    return { lo + (static_cast<double>(col) + 0.5) * step(),
             lo + (static_cast<double>(row) + 0.5) * step() };
  }
  std::vector<Point> centers() const
  {
    std::vector<Point> out(size());
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = center(i);
    return out;
  }
};

struct SimulationConfig
{
  std::size_t replicates{ 20 };
  std::size_t n{ 100 };
  Point mean{ 5.0, 5.0 };
  Matrix2 covariance{ { { 1.5, 0.8 }, { 0.8, 1.5 } } };
  GridSpec grid{};
  std::uint64_t seed{ 1 };
  double mobility{ kDefaultMobility };
  UcvScanOptions scan{};
  unsigned threads{ 0 };

  //! The lattice covers the square [lo, hi]^2 with one node at the centre
  //! of every grid cell: spacing = cell width, anchor = lo + spacing / 2.
  double spacing() const { return grid.step(); }
  Point anchor() const { return { grid.lo + 0.5 * spacing(), grid.lo + 0.5 * spacing() }; }

  void validate() const
  {
    if (replicates < 1)
      throw ValidationError("replicates must be at least 1");
    if (n < 2)
      throw ValidationError("n must be at least 2");
    if (!(grid.hi > grid.lo) || grid.cells < 2)
      throw ValidationError("invalid grid: need lo < hi and at least two cells");
    if (covariance[0][1] != covariance[1][0])
      throw ValidationError("covariance must be symmetric");
    const double sx = std::sqrt(covariance[0][0]), sy = std::sqrt(covariance[1][1]);
    if (mean.x - 4 * sx < grid.lo || mean.x + 4 * sx > grid.hi || mean.y - 4 * sy < grid.lo ||
        mean.y + 4 * sy > grid.hi)
      throw ValidationError("grid extent must cover mean +/- 4 sd on each axis");
  }
};

//! Lower Cholesky factor of a 2x2 symmetric positive-definite matrix.
inline Matrix2 cholesky(const Matrix2& s)
{
  if (s[0][1] != s[1][0])
    throw ValidationError("covariance must be symmetric");
  if (!(s[0][0] > 0.0))
    throw ValidationError("covariance is not positive definite");
  const double l11 = std::sqrt(s[0][0]);
  const double l21 = s[1][0] / l11;
  const double r = s[1][1] - l21 * l21;
  if (!(r > 0.0))
    throw ValidationError("covariance is not positive definite");
  return { { { l11, 0.0 }, { l21, std::sqrt(r) } } };
}

template<typename Rng>
std::vector<Point> sample_mvn(Point mean, const Matrix2& cov, std::size_t n, Rng& rng)
{
  const Matrix2 L = cholesky(cov);
  std::normal_distribution<double> z;
  std::vector<Point> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double z1 = z(rng);
    const double z2 = z(rng);
    out.push_back({ mean.x + L[0][0] * z1, mean.y + L[1][0] * z1 + L[1][1] * z2 });
  }
  return out;
}

inline std::vector<Point> sample_mvn(Point mean, const Matrix2& cov, std::size_t n,
                                     std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  return sample_mvn(mean, cov, n, rng);
}

inline double mvn_density(Point p, Point mean, const Matrix2& cov)
{
  const double det = cov[0][0] * cov[1][1] - cov[0][1] * cov[1][0];
  const double dx = p.x - mean.x, dy = p.y - mean.y;
  const double q = (cov[1][1] * dx * dx - 2.0 * cov[0][1] * dx * dy + cov[0][0] * dy * dy) / det;
  return std::exp(-0.5 * q) / (2.0 * std::numbers::pi * std::sqrt(det));
}

//! Riemann-sum integrated squared error over a shared grid.
inline double ise(std::span<const double> estimate, std::span<const double> truth,
                  double cell_area)
{
  if (estimate.size() != truth.size())
    throw ValidationError("ISE grids differ in size");
  double s = 0.0;
  for (std::size_t i = 0; i < estimate.size(); ++i) {
    const double d = truth[i] - estimate[i];
    s += d * d;
  }
  return s * cell_area;
}

struct ReplicateResult
{
  double ise_lattice{ 0.0 };
  double ise_kernel{ 0.0 };
  double ise_zero{ 0.0 };
  std::size_t k_star{ 0 };
  double h1{ 0.0 };
  double h2{ 0.0 };
};

struct IseReport
{
  std::vector<ReplicateResult> replicates;
  double mean_lattice{ 0.0 };
  double mean_kernel{ 0.0 };
  double sd_lattice{ 0.0 };
  double sd_kernel{ 0.0 };
  //! Paired differences lattice - kernel.
  double mean_difference{ 0.0 };
  double sd_difference{ 0.0 };
  //! mean_difference / (sd_difference / sqrt(R)); NaN for one replicate.
  double t_statistic{ 0.0 };
};

namespace detail {

inline std::mt19937_64 replicate_rng(std::uint64_t seed, std::size_t replicate)
{
  std::seed_seq seq{ static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                     static_cast<std::uint32_t>(replicate),
                     static_cast<std::uint32_t>(static_cast<std::uint64_t>(replicate) >> 32) };
  return std::mt19937_64(seq);
}

inline void mean_sd(const std::vector<double>& v, double& mean, double& sd)
{
  const double n = static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v)
    s += x;
  mean = s / n;
  double ss = 0.0;
  for (double x : v)
    ss += (x - mean) * (x - mean);
  sd = v.size() > 1 ? std::sqrt(ss / (n - 1.0)) : std::numeric_limits<double>::quiet_NaN();
}

} // namespace detail

inline ReplicateResult run_replicate(const SimulationConfig& cfg, const Lattice& lattice,
                                     const std::vector<double>& truth, std::size_t index)
{
  auto rng = detail::replicate_rng(cfg.seed, index);
  const auto pts = sample_mvn(cfg.mean, cfg.covariance, cfg.n, rng);
  const double cell = cfg.grid.cell_area();

  EstimateOptions opt;
  opt.spacing = cfg.spacing();
  opt.mobility = cfg.mobility;
  opt.scan = cfg.scan;
  opt.scan.threads = 1;
  const EstimateResult est = estimate_on_lattice(lattice, pts, opt);

  // node ids follow the grid's row-major cell order
  std::vector<double> lattice_grid(cfg.grid.size(), 0.0);
  for (std::size_t c = 0; c < est.density.size(); ++c)
    lattice_grid.at(est.density.node_ids[c]) = est.density.density[c];

  const KdeModel kde = fit_kde(pts);
  const auto centers = cfg.grid.centers();
  const auto kernel_grid = kde_evaluate(kde, centers);

  ReplicateResult r;
  r.ise_lattice = ise(lattice_grid, truth, cell);
  r.ise_kernel = ise(kernel_grid, truth, cell);
  r.ise_zero = ise(std::vector<double>(truth.size(), 0.0), truth, cell);
  r.k_star = est.k_used;
  r.h1 = kde.h1;
  r.h2 = kde.h2;
  return r;
}

//! Lattice used by run_comparison: boundary-free square,
//! one node per evaluation cell, grid8 links.
inline Lattice comparison_lattice(const SimulationConfig& cfg)
{
  const double lo = cfg.grid.lo, hi = cfg.grid.hi;
  const Region square(Ring({ { lo, lo }, { hi, lo }, { hi, hi }, { lo, hi } }));
  Lattice lat = generate_nodes(square, cfg.spacing(), cfg.anchor());
  if (lat.node_count() != cfg.grid.size())
    throw ComputationError("comparison lattice does not align with the evaluation grid");
  return build_adjacency(std::move(lat), square, Grid8Rule{});
}

//! Samples each replicate from its own (seed, replicate) stream, fits both
//! estimators, and scores them against the true normal density.
inline IseReport run_comparison(const SimulationConfig& cfg)
{
  cfg.validate();
  const Lattice lattice = comparison_lattice(cfg);
  std::vector<double> truth(cfg.grid.size());
  for (std::size_t i = 0; i < truth.size(); ++i)
    truth[i] = mvn_density(cfg.grid.center(i), cfg.mean, cfg.covariance);

  IseReport rep;
  rep.replicates.resize(cfg.replicates);
  parallel_for(
    cfg.replicates,
    [&](std::size_t r) { rep.replicates[r] = run_replicate(cfg, lattice, truth, r); },
    cfg.threads);

  std::vector<double> lat_ise, ker_ise, diff;
  for (const auto& r : rep.replicates) {
    lat_ise.push_back(r.ise_lattice);
    ker_ise.push_back(r.ise_kernel);
    diff.push_back(r.ise_lattice - r.ise_kernel);
  }
  detail::mean_sd(lat_ise, rep.mean_lattice, rep.sd_lattice);
  detail::mean_sd(ker_ise, rep.mean_kernel, rep.sd_kernel);
  detail::mean_sd(diff, rep.mean_difference, rep.sd_difference);
  rep.t_statistic = rep.mean_difference /
                    (rep.sd_difference / std::sqrt(static_cast<double>(cfg.replicates)));
  return rep;
}

} // namespace latden
