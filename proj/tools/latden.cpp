// latden: lattice-based density estimation from the command line.
//
//   latden build-lattice --region lake.geojson --spacing 200 --out run1
//   latden estimate      --region lake.geojson --obs fish.csv --spacing 200 --out run2
//   latden homerange     --density run2/density.csv --coverage 0.75 --out run3
//   latden simulate      --replicates 20 --seed 7 --out run4
//
// Exit status: 0 success, 1 warnings under --strict, 2 invalid input.

#include <latden/io.hpp>
#include <latden/latden.hpp>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace latden;

namespace {

constexpr int kExitWarning = 1;
constexpr int kExitInput = 2;

struct Options
{
  std::string region;
  std::string obs;
  std::string edits;
  std::string density;
  std::string out;
  double spacing{ 0.0 };
  double mobility{ kDefaultMobility };
  std::string rule{ "grid8" };
  std::string k{ "auto" };
  std::size_t kmax{ kDefaultMaxSteps };
  std::size_t window{ kDefaultWindow };
  double coverage{ 0.95 };
  std::size_t resolution{ 100 };
  std::optional<std::uint64_t> seed;
  std::size_t replicates{ 20 };
  bool strict{ false };
};

std::string sha256_file(const std::string& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw ValidationError("cannot open input file: " + path);
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0)
    EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i)
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return hex.str();
}

//! Collects run metadata and writes the output directory.
class Run
{
public:
  Run(std::string command, const Options& opt)
    : opt_(opt)
    , dir_(opt.out)
  {
    meta_["command"] = std::move(command);
    meta_["parameters"] = json::object();
    meta_["inputs"] = json::object();
    meta_["warnings"] = json::array();
    meta_["outputs"] = json::array();
  }

  void param(const std::string& key, json value) { meta_["parameters"][key] = std::move(value); }
  void result(const std::string& key, json value) { meta_["results"][key] = std::move(value); }

  void input(const std::string& role, const std::string& path)
  {
    meta_["inputs"][role] = { { "path", path }, { "sha256", sha256_file(path) } };
  }

  void warn(const std::string& w)
  {
    warnings_.push_back(w);
    meta_["warnings"].push_back(w);
    std::cerr << "warning: " << w << "\n";
  }

  std::ofstream file(const std::string& name)
  {
    fs::create_directories(dir_);
    meta_["outputs"].push_back(name);
    return io::detail::open_output((dir_ / name).string());
  }

  void summary_line(const std::string& key, const std::string& value)
  {
    summary_ << key << " " << value << "\n";
  }

  std::ostream& summary() { return summary_; }

  int finish()
  {
    {
      auto s = file("summary.txt");
      s << summary_.str();
      for (const auto& w : warnings_)
        s << "warning " << w << "\n";
    }
    {
      auto j = file("run.json");
      j << meta_.dump(2) << "\n";
    }
    return opt_.strict && !warnings_.empty() ? kExitWarning : 0;
  }

private:
  const Options& opt_;
  fs::path dir_;
  json meta_;
  std::ostringstream summary_;
  std::vector<std::string> warnings_;
};

std::optional<std::size_t> parse_k(const std::string& text)
{
  if (text == "auto")
    return std::nullopt;
  std::size_t k = 0;
  if (!io::detail::parse_int(text, k))
    throw ValidationError("--k must be 'auto' or a non-negative integer, got '" + text + "'");
  return k;
}

void validate_common(const Options& opt)
{
  if (!(opt.spacing > 0.0) || !std::isfinite(opt.spacing))
    throw ValidationError("--spacing must be positive");
  if (!(opt.mobility > 0.0 && opt.mobility <= 1.0))
    throw ValidationError("--mobility must lie in (0, 1]");
  io::parse_rule(opt.rule);
}

Lattice build_lattice(const Options& opt, const Region& region, Run& run)
{
  Lattice lat = generate_nodes(region, opt.spacing);
  lat = build_adjacency(std::move(lat), region, io::parse_rule(opt.rule));
  if (!opt.edits.empty()) {
    run.input("edits", opt.edits);
    lat = apply_edits(std::move(lat), io::read_edit_script_file(opt.edits));
  }
  return lat;
}

void write_lattice(const Lattice& lat, const ConnectivityReport& conn, Run& run)
{
  {
    auto f = run.file("nodes.csv");
    io::write_nodes_csv(f, lat);
  }
  {
    auto f = run.file("links.csv");
    io::write_links_csv(f, lat);
  }
  {
    auto f = run.file("connectivity.txt");
    io::write_connectivity(f, conn);
  }
  run.summary_line("nodes", std::to_string(lat.node_count()));
  run.summary_line("links", std::to_string(lat.link_count()));
  run.summary_line("components", std::to_string(conn.components.size()));
  run.summary_line("isolated", std::to_string(conn.isolated.size()));
  run.result("nodes", lat.node_count());
  run.result("links", lat.link_count());
  run.result("components", conn.components.size());
  run.result("isolated", conn.isolated);
}

void record_lattice_params(const Options& opt, Run& run)
{
  run.param("spacing", opt.spacing);
  run.param("rule", opt.rule);
  run.param("edits", opt.edits.empty() ? json(nullptr) : json(opt.edits));
  run.param("strict", opt.strict);
}

int cmd_build_lattice(const Options& opt)
{
  validate_common(opt);
  Run run("build-lattice", opt);
  record_lattice_params(opt, run);
  run.input("region", opt.region);
  const Region region = io::read_region_file(opt.region);
  const Lattice lat = build_lattice(opt, region, run);
  const ConnectivityReport conn = connectivity_report(lat);
  write_lattice(lat, conn, run);
  if (!conn.isolated.empty())
    run.warn(std::to_string(conn.isolated.size()) + " isolated node(s)");
  if (conn.components.size() > 1)
    run.warn("lattice has " + std::to_string(conn.components.size()) + " connected components");
  return run.finish();
}

//! Shared by estimate and inline homerange.
EstimateResult run_estimate(const Options& opt, Run& run, bool write_outputs)
{
  validate_common(opt);
  const auto k = parse_k(opt.k);
  if (opt.kmax < 1)
    throw ValidationError("--kmax must be at least 1");
  if (opt.resolution < 2)
    throw ValidationError("--resolution must be at least 2");
  record_lattice_params(opt, run);
  run.param("mobility", opt.mobility);
  run.param("k", opt.k);
  run.param("kmax", opt.kmax);
  run.param("window", opt.window);
  run.param("resolution", opt.resolution);

  run.input("region", opt.region);
  run.input("obs", opt.obs);
  const Region region = io::read_region_file(opt.region);
  const auto obs = io::read_observations_file(opt.obs);
  Lattice lat = build_lattice(opt, region, run);

  EstimateOptions eo;
  eo.spacing = opt.spacing;
  eo.mobility = opt.mobility;
  eo.k = k;
  eo.scan.k_max = opt.kmax;
  eo.scan.window = opt.window;
  EstimateResult r = estimate_on_lattice(std::move(lat), obs, eo);
  for (const auto& w : r.warnings)
    run.warn(w);

  run.summary_line("observations", std::to_string(r.assignment.n()));
  run.summary_line("k_mode", k ? "fixed" : "auto");
  run.summary_line("k_used", std::to_string(r.k_used));
  run.result("observations", r.assignment.n());
  run.result("k_used", r.k_used);
  if (r.trace) {
    run.summary_line("k_star", std::to_string(r.trace->k_star));
    run.summary_line("minimum_at_scan_edge", r.trace->minimum_at_edge ? "true" : "false");
    run.summary_line("scan_last_k", std::to_string(r.trace->records.back().k));
    run.result("k_star", r.trace->k_star);
    run.result("minimum_at_scan_edge", r.trace->minimum_at_edge);
  }

  if (write_outputs) {
    write_lattice(r.lattice, connectivity_report(r.lattice), run);
    {
      auto f = run.file("density.csv");
      io::write_density_csv(f, r.density, r.lattice);
    }
    {
      auto f = run.file("raster.csv");
      io::write_raster_csv(f, grid_export(r, region, opt.resolution, opt.resolution));
    }
    if (r.trace) {
      auto f = run.file("ucv_trace.csv");
      io::write_trace_csv(f, *r.trace);
    }
  }
  return r;
}

int cmd_estimate(const Options& opt)
{
  Run run("estimate", opt);
  run_estimate(opt, run, true);
  return run.finish();
}

int cmd_homerange(const Options& opt)
{
  if (!(opt.coverage > 0.0 && opt.coverage < 1.0))
    throw ValidationError("--coverage must lie in (0, 1)");
  Run run("homerange", opt);
  run.param("coverage", opt.coverage);

  DensityField field;
  std::map<NodeId, Point> positions;
  if (!opt.density.empty()) {
    if (!opt.region.empty() || !opt.obs.empty())
      throw ValidationError("--density cannot be combined with --region/--obs");
    run.input("density", opt.density);
    auto in = io::detail::open_input(opt.density);
    io::DensityTable t = io::read_density_csv(in, opt.density);
    for (std::size_t i = 0; i < t.ids.size(); ++i)
      positions[t.ids[i]] = t.positions[i];
    field = std::move(t.field);
  } else {
    if (opt.region.empty() || opt.obs.empty())
      throw ValidationError("homerange needs --density, or --region and --obs");
    const EstimateResult r = run_estimate(opt, run, false);
    for (NodeId id : r.density.node_ids)
      positions[id] = r.lattice.position(id);
    field = r.density;
  }

  const HomeRange hr = home_range(field, opt.coverage);
  {
    auto f = run.file("homerange.csv");
    io::write_home_range_csv(f, hr, positions);
  }
  io::write_home_range_summary(run.summary(), hr);
  run.result("achieved", hr.achieved);
  run.result("node_count", hr.node_ids.size());
  run.result("area", hr.area);
  return run.finish();
}

int cmd_simulate(const Options& opt)
{
  if (opt.replicates < 1)
    throw ValidationError("--replicates must be at least 1");
  Run run("simulate", opt);
  SimulationConfig cfg;
  cfg.replicates = opt.replicates;
  cfg.seed = opt.seed ? *opt.seed : std::random_device{}();
  cfg.mobility = opt.mobility;
  cfg.scan.k_max = opt.kmax;
  cfg.scan.window = opt.window;
  cfg.validate();

  run.param("replicates", cfg.replicates);
  run.param("n", cfg.n);
  run.param("mean", { cfg.mean.x, cfg.mean.y });
  run.param("covariance", cfg.covariance);
  run.param("grid", { { "lo", cfg.grid.lo }, { "hi", cfg.grid.hi }, { "cells", cfg.grid.cells } });
  run.param("mobility", cfg.mobility);
  run.param("kmax", cfg.scan.k_max);
  run.param("window", cfg.scan.window);
  run.param("seed", cfg.seed);
  run.param("seed_source", opt.seed ? "flag" : "random");

  const IseReport rep = run_comparison(cfg);
  {
    auto f = run.file("ise.csv");
    io::write_ise_csv(f, rep);
  }
  io::write_ise_summary(run.summary(), rep);
  run.summary_line("seed", std::to_string(cfg.seed));
  run.result("mean_ise_lattice", rep.mean_lattice);
  run.result("mean_ise_kernel", rep.mean_kernel);
  run.result("paired_t", rep.t_statistic);
  for (std::size_t r = 0; r < rep.replicates.size(); ++r) {
    const auto& x = rep.replicates[r];
    if (!(x.ise_lattice < x.ise_zero) || !(x.ise_kernel < x.ise_zero))
      run.warn("replicate " + std::to_string(r) + " does not beat the zero estimate");
    if (x.k_star == cfg.scan.k_max)
      run.warn("replicate " + std::to_string(r) + " UCV minimum at scan edge");
  }
  return run.finish();
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{ "Lattice-based density estimation for bounded regions" };
  app.require_subcommand(1);
  Options opt;

  auto add_out = [&](CLI::App* c) {
    c->add_option("--out", opt.out, "Output directory")->required();
    c->add_flag("--strict", opt.strict, "Exit with status 1 when warnings are raised");
  };
  auto add_lattice = [&](CLI::App* c, bool region_required) {
    auto* r = c->add_option("--region", opt.region, "Region file (GeoJSON Polygon or CSV)");
    if (region_required)
      r->required();
    c->add_option("--spacing", opt.spacing, "Node spacing in region units");
    c->add_option("--rule", opt.rule, "Neighbor rule: grid8 or band:LO:HI");
    c->add_option("--edits", opt.edits, "Edit script applied after adjacency");
  };
  auto add_estimate = [&](CLI::App* c, bool obs_required) {
    auto* o = c->add_option("--obs", opt.obs, "Observations CSV (easting,northing)");
    if (obs_required)
      o->required();
    c->add_option("--mobility", opt.mobility, "Mobility M in (0, 1]");
    c->add_option("--k", opt.k, "Number of steps, or 'auto' for crossvalidation");
    c->add_option("--kmax", opt.kmax, "Largest k scanned");
    c->add_option("--window", opt.window, "Stop after this many steps without improvement (0: off)");
    c->add_option("--resolution", opt.resolution, "Raster cells per axis");
  };

  auto* build = app.add_subcommand("build-lattice", "Build the lattice and report connectivity");
  add_lattice(build, true);
  build->get_option("--spacing")->required();
  add_out(build);

  auto* est = app.add_subcommand("estimate", "Estimate density from observations");
  add_lattice(est, true);
  est->get_option("--spacing")->required();
  add_estimate(est, true);
  add_out(est);

  auto* hr = app.add_subcommand("homerange", "Smallest node set holding a given probability");
  hr->add_option("--density", opt.density, "density.csv from a previous estimate run");
  add_lattice(hr, false);
  add_estimate(hr, false);
  hr->add_option("--coverage", opt.coverage, "Probability P in (0, 1)");
  add_out(hr);

  auto* sim = app.add_subcommand("simulate", "Lattice vs kernel ISE on the bivariate normal target");
  sim->add_option("--replicates", opt.replicates, "Number of simulated data sets");
  sim->add_option("--seed", opt.seed, "Random seed (drawn and recorded when absent)");
  sim->add_option("--mobility", opt.mobility, "Mobility M in (0, 1]");
  sim->add_option("--kmax", opt.kmax, "Largest k scanned");
  sim->add_option("--window", opt.window, "Stop after this many steps without improvement");
  add_out(sim);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    if (*build)
      return cmd_build_lattice(opt);
    if (*est)
      return cmd_estimate(opt);
    if (*hr) {
      if (opt.density.empty() && !(opt.spacing > 0.0))
        throw ValidationError("--spacing is required unless --density is given");
      return cmd_homerange(opt);
    }
    return cmd_simulate(opt);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
}
