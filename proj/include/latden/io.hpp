#pragma once

#include "latden/crossval.hpp"
#include "latden/diffusion.hpp"
#include "latden/error.hpp"
#include "latden/estimator.hpp"
#include "latden/geometry.hpp"
#include "latden/lattice.hpp"
#include "latden/sim.hpp"

#include <nlohmann/json.hpp>

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace latden::io {

namespace detail {

inline std::string_view trim(std::string_view s)
{
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
    s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
    s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view line, char sep)
{
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos)
      break;
    start = pos + 1;
  }
  return out;
}

inline bool parse_double(std::string_view s, double& out)
{
  s = trim(s);
  if (s.empty())
    return false;
  // strtod accepts forms from_chars rejects on some toolchains (leading '+')
  std::string buf(s);
  char* end = nullptr;
  out = std::strtod(buf.c_str(), &end);
  return end == buf.c_str() + buf.size() && std::isfinite(out);
}

template<typename Int>
bool parse_int(std::string_view s, Int& out)
{
  s = trim(s);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

inline std::ifstream open_input(const std::string& path)
{
  std::ifstream in(path);
  if (!in)
    throw ParseError(path, 0, "cannot open file");
  return in;
}

inline std::ofstream open_output(const std::string& path)
{
  std::ofstream out(path);
  if (!out)
    throw Error(path + ": cannot open for writing");
  return out;
}

inline std::string fmt(double v, int digits = 17)
{
  if (std::isnan(v))
    return "NA";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

inline std::vector<Point> ring_points(const nlohmann::json& ring, const std::string& source,
                                      std::size_t index)
{
  if (!ring.is_array())
    throw ParseError(source, 0, "ring " + std::to_string(index) + " is not an array");
  std::vector<Point> pts;
  for (const auto& pos : ring) {
    if (!pos.is_array() || pos.size() < 2 || !pos[0].is_number() || !pos[1].is_number())
      throw ParseError(source, 0,
                       "ring " + std::to_string(index) + " has a malformed position");
    pts.push_back({ pos[0].get<double>(), pos[1].get<double>() });
  }
  if (pts.size() > 1 && pts.front() == pts.back())
    pts.pop_back();
  return pts;
}

inline Region region_from_rings(std::vector<std::vector<Point>> rings, const std::string& source)
{
  if (rings.empty())
    throw ParseError(source, 0, "polygon has no rings");
  try {
    Ring outer(std::move(rings[0]));
    std::vector<Ring> holes;
    for (std::size_t i = 1; i < rings.size(); ++i)
      holes.emplace_back(std::move(rings[i]));
    return Region(std::move(outer), std::move(holes));
  } catch (const ValidationError& e) {
    throw ValidationError(source + ": " + e.what());
  }
}

} // namespace detail

// ---------------------------------------------------------------------------
// Regions
// ---------------------------------------------------------------------------

//! GeoJSON Polygon geometry (also wrapped in a Feature or a one-feature
//! FeatureCollection). The first ring is the outer boundary, the rest are
//! holes. A repeated closing position is dropped.
inline Region read_region_geojson(std::istream& in, const std::string& source = "<geojson>")
{
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(source, 0, std::string("malformed GeoJSON: ") + e.what());
  }
  const auto type_of = [&](const nlohmann::json& j) -> std::string {
    if (!j.is_object() || !j.contains("type") || !j["type"].is_string())
      throw ParseError(source, 0, "GeoJSON object without a type");
    return j["type"].get<std::string>();
  };
  const nlohmann::json* geom = &doc;
  if (type_of(*geom) == "FeatureCollection") {
    if (!doc.contains("features") || !doc["features"].is_array() ||
        doc["features"].size() != 1)
      throw ParseError(source, 0, "FeatureCollection must hold exactly one feature");
    geom = &doc["features"][0];
  }
  if (type_of(*geom) == "Feature") {
    if (!geom->contains("geometry"))
      throw ParseError(source, 0, "Feature without geometry");
    geom = &(*geom)["geometry"];
  }
  if (type_of(*geom) != "Polygon")
    throw ParseError(source, 0, "expected a Polygon geometry, got " + type_of(*geom));
  if (!geom->contains("coordinates") || !(*geom)["coordinates"].is_array())
    throw ParseError(source, 0, "Polygon without coordinates");

  std::vector<std::vector<Point>> rings;
  std::size_t index = 0;
  for (const auto& ring : (*geom)["coordinates"])
    rings.push_back(detail::ring_points(ring, source, index++));
  return detail::region_from_rings(std::move(rings), source);
}

//! CSV `ring_index,easting,northing`; ring 0 is the outer boundary. A
//! header line is optional.
inline Region read_region_csv(std::istream& in, const std::string& source = "<csv>")
{
  std::map<long, std::vector<Point>> rings;
  std::string line;
  std::size_t lineno = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = detail::trim(line);
    if (t.empty() || t.front() == '#')
      continue;
    const auto f = detail::split(t, ',');
    long ring = 0;
    double x = 0, y = 0;
    const bool ok = f.size() == 3 && detail::parse_int(f[0], ring) &&
                    detail::parse_double(f[1], x) && detail::parse_double(f[2], y);
    if (!ok) {
      if (first) { // header
        first = false;
        continue;
      }
      throw ParseError(source, lineno, "expected ring_index,easting,northing");
    }
    first = false;
    if (ring < 0)
      throw ParseError(source, lineno, "negative ring index");
    rings[ring].push_back({ x, y });
  }
  std::vector<std::vector<Point>> ordered;
  long expect = 0;
  for (auto& [idx, pts] : rings) {
    if (idx != expect++)
      throw ParseError(source, 0, "ring indices must be contiguous from 0");
    if (pts.size() > 1 && pts.front() == pts.back())
      pts.pop_back();
    ordered.push_back(std::move(pts));
  }
  return detail::region_from_rings(std::move(ordered), source);
}

//! Dispatches on content: a leading '{' means GeoJSON, anything else CSV.
inline Region read_region_file(const std::string& path)
{
  auto in = detail::open_input(path);
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  const auto t = detail::trim(text);
  std::istringstream s(text);
  if (!t.empty() && t.front() == '{')
    return read_region_geojson(s, path);
  return read_region_csv(s, path);
}

inline void write_region_geojson(std::ostream& out, const Region& g)
{
  nlohmann::json coords = nlohmann::json::array();
  auto add = [&](const Ring& r) {
    nlohmann::json ring = nlohmann::json::array();
    for (const Point& p : r.vertices())
      ring.push_back({ p.x, p.y });
    ring.push_back({ r[0].x, r[0].y });
    coords.push_back(std::move(ring));
  };
  add(g.outer());
  for (const Ring& h : g.holes())
    add(h);
  out << nlohmann::json{ { "type", "Polygon" }, { "coordinates", coords } }.dump() << "\n";
}

// ---------------------------------------------------------------------------
// Observations
// ---------------------------------------------------------------------------

//! CSV `easting,northing`; a non-numeric first line is treated as a header.
inline std::vector<Point> read_observations(std::istream& in, const std::string& source = "<obs>")
{
  std::vector<Point> pts;
  std::string line;
  std::size_t lineno = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = detail::trim(line);
    if (t.empty())
      continue;
    const auto f = detail::split(t, ',');
    double x = 0, y = 0;
    const bool ok = f.size() >= 2 && detail::parse_double(f[0], x) && detail::parse_double(f[1], y);
    if (!ok) {
      if (first) {
        first = false;
        continue;
      }
      throw ParseError(source, lineno, "expected easting,northing");
    }
    first = false;
    pts.push_back({ x, y });
  }
  if (pts.empty())
    throw ParseError(source, 0, "no observations");
  return pts;
}

inline std::vector<Point> read_observations_file(const std::string& path)
{
  auto in = detail::open_input(path);
  return read_observations(in, path);
}

inline void write_observations(std::ostream& out, std::span<const Point> pts)
{
  out << "easting,northing\n";
  for (const Point& p : pts)
    out << detail::fmt(p.x) << "," << detail::fmt(p.y) << "\n";
}

// ---------------------------------------------------------------------------
// Edit scripts
// ---------------------------------------------------------------------------

//! One command per line: `addlink I J`, `removelink I J`, `removenode I`.
//! Lines starting with '#' and blank lines are skipped.
inline EditScript parse_edit_script(std::istream& in, const std::string& source = "<edits>")
{
  EditScript script;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = detail::trim(line);
    if (t.empty() || t.front() == '#')
      continue;
    std::istringstream words{ std::string(t) };
    std::string verb;
    words >> verb;
    std::vector<std::string> args;
    for (std::string a; words >> a;)
      args.push_back(a);
    EditCommand cmd;
    cmd.line = lineno;
    std::size_t arity = 2;
    if (verb == "addlink") {
      cmd.kind = EditCommand::Kind::AddLink;
    } else if (verb == "removelink") {
      cmd.kind = EditCommand::Kind::RemoveLink;
    } else if (verb == "removenode") {
      cmd.kind = EditCommand::Kind::RemoveNode;
      arity = 1;
    } else {
      throw ParseError(source, lineno, "unknown edit command '" + verb + "'");
    }
    if (args.size() != arity)
      throw ParseError(source, lineno, verb + " takes " + std::to_string(arity) + " node id(s)");
    if (!detail::parse_int(args[0], cmd.i) || (arity == 2 && !detail::parse_int(args[1], cmd.j)))
      throw ParseError(source, lineno, "node ids must be non-negative integers");
    if (cmd.kind == EditCommand::Kind::AddLink && cmd.i == cmd.j)
      throw ParseError(source, lineno, "addlink of a node to itself");
    script.commands.push_back(cmd);
  }
  return script;
}

inline EditScript read_edit_script_file(const std::string& path)
{
  auto in = detail::open_input(path);
  return parse_edit_script(in, path);
}

inline void write_edit_script(std::ostream& out, const EditScript& script)
{
  for (const auto& c : script.commands)
    out << c.str() << "\n";
}

// ---------------------------------------------------------------------------
// Neighbor rule
// ---------------------------------------------------------------------------

//! `grid8` or `band:LO:HI`.
inline NeighborRule parse_rule(std::string_view text)
{
  text = detail::trim(text);
  if (text == "grid8")
    return Grid8Rule{};
  if (text.substr(0, 5) == "band:") {
    const auto f = detail::split(text.substr(5), ':');
    DistanceBandRule band;
    if (f.size() == 2 && detail::parse_double(f[0], band.lo) &&
        detail::parse_double(f[1], band.hi)) {
      if (band.hi < band.lo)
        throw ValidationError("distance band has hi < lo");
      return band;
    }
  }
  throw ValidationError("neighbor rule must be grid8 or band:LO:HI, got '" + std::string(text) +
                        "'");
}

// ---------------------------------------------------------------------------
// Writers
// ---------------------------------------------------------------------------

inline void write_nodes_csv(std::ostream& out, const Lattice& lat)
{
  out << "id,easting,northing,degree\n";
  for (NodeId id : lat.active_ids()) {
    const Point p = lat.position(id);
    out << id << "," << detail::fmt(p.x) << "," << detail::fmt(p.y) << "," << lat.degree(id)
        << "\n";
  }
}

inline void write_links_csv(std::ostream& out, const Lattice& lat)
{
  out << "i,j\n";
  for (auto [i, j] : lat.links())
    out << i << "," << j << "\n";
}

inline void write_connectivity(std::ostream& out, const ConnectivityReport& rep)
{
  out << "components " << rep.components.size() << "\n";
  for (std::size_t c = 0; c < rep.components.size(); ++c)
    out << "component " << c << " size " << rep.components[c].size() << " first "
        << rep.components[c].front() << "\n";
  out << "isolated " << rep.isolated.size();
  for (NodeId id : rep.isolated)
    out << " " << id;
  out << "\n";
}

inline void write_density_csv(std::ostream& out, const DensityField& f, const Lattice& lat)
{
  out << "id,easting,northing,p,density\n";
  for (std::size_t c = 0; c < f.size(); ++c) {
    const Point p = lat.position(f.node_ids[c]);
    out << f.node_ids[c] << "," << detail::fmt(p.x) << "," << detail::fmt(p.y) << ","
        << detail::fmt(f.probability[c]) << "," << detail::fmt(f.density[c]) << "\n";
  }
}

struct DensityTable
{
  std::vector<NodeId> ids;
  std::vector<Point> positions;
  DensityField field;
};

//! Reads `id,easting,northing,p,density` back. The region area is recovered
//! from density / p on any node with positive probability.
inline DensityTable read_density_csv(std::istream& in, const std::string& source = "<density>")
{
  DensityTable t;
  std::string line;
  std::size_t lineno = 0;
  double area = 0.0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto s = detail::trim(line);
    if (s.empty())
      continue;
    const auto f = detail::split(s, ',');
    NodeId id = 0;
    double x = 0, y = 0, p = 0, d = 0;
    if (f.size() != 5 || !detail::parse_int(f[0], id) || !detail::parse_double(f[1], x) ||
        !detail::parse_double(f[2], y) || !detail::parse_double(f[3], p) ||
        !detail::parse_double(f[4], d)) {
      if (lineno == 1)
        continue;
      throw ParseError(source, lineno, "expected id,easting,northing,p,density");
    }
    if (p < 0)
      throw ParseError(source, lineno, "negative probability");
    t.ids.push_back(id);
    t.positions.push_back({ x, y });
    t.field.node_ids.push_back(id);
    t.field.probability.push_back(p);
    t.field.density.push_back(d);
    if (p > 0 && d > 0 && area == 0.0)
      area = p / d; // = area / N
  }
  if (t.ids.empty())
    throw ParseError(source, 0, "no density rows");
  t.field.region_area = area * static_cast<double>(t.ids.size());
  return t;
}

inline void write_trace_csv(std::ostream& out, const UcvTrace& trace)
{
  out << "k,ucv\n";
  for (const auto& r : trace.records)
    out << r.k << "," << detail::fmt(r.ucv) << "\n";
}

//! Raster rows run north to south; NA marks cells outside the region.
inline void write_raster_csv(std::ostream& out, const Raster& r)
{
  for (std::size_t row = 0; row < r.ny; ++row) {
    for (std::size_t col = 0; col < r.nx; ++col) {
      if (col)
        out << ",";
      out << detail::fmt(r.at(row, col));
    }
    out << "\n";
  }
}

inline void write_home_range_csv(std::ostream& out, const HomeRange& hr,
                                 const std::map<NodeId, Point>& positions)
{
  out << "id,easting,northing,p\n";
  for (std::size_t i = 0; i < hr.node_ids.size(); ++i) {
    const Point p = positions.at(hr.node_ids[i]);
    out << hr.node_ids[i] << "," << detail::fmt(p.x) << "," << detail::fmt(p.y) << ","
        << detail::fmt(hr.probability[i]) << "\n";
  }
}

inline void write_home_range_summary(std::ostream& out, const HomeRange& hr)
{
  out << "P,achieved,node_count,area\n"
      << detail::fmt(hr.coverage) << "," << detail::fmt(hr.achieved) << ","
      << hr.node_ids.size() << "," << detail::fmt(hr.area) << "\n";
}

//! Dense row-major operator, 12 significant digits.
inline void write_operator_csv(std::ostream& out, const TransitionOperator& T)
{
  const auto m = T.dense();
  const std::size_t n = T.dimension();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (j)
        out << ",";
      out << detail::fmt(m[i * n + j], 12);
    }
    out << "\n";
  }
}

inline void write_ise_csv(std::ostream& out, const IseReport& rep)
{
  out << "replicate,ise_lattice,ise_kernel\n";
  for (std::size_t r = 0; r < rep.replicates.size(); ++r)
    out << r << "," << detail::fmt(rep.replicates[r].ise_lattice) << ","
        << detail::fmt(rep.replicates[r].ise_kernel) << "\n";
}

inline void write_ise_summary(std::ostream& out, const IseReport& rep)
{
  out << "replicates " << rep.replicates.size() << "\n"
      << "mean_ise_lattice " << detail::fmt(rep.mean_lattice) << "\n"
      << "sd_ise_lattice " << detail::fmt(rep.sd_lattice) << "\n"
      << "mean_ise_kernel " << detail::fmt(rep.mean_kernel) << "\n"
      << "sd_ise_kernel " << detail::fmt(rep.sd_kernel) << "\n"
      << "mean_difference " << detail::fmt(rep.mean_difference) << "\n"
      << "sd_difference " << detail::fmt(rep.sd_difference) << "\n"
      << "paired_t " << detail::fmt(rep.t_statistic) << "\n";
}

} // namespace latden::io
