#include <latden/io.hpp>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

const std::string kCli = LATDEN_CLI;
const fs::path kData = LATDEN_DATA_DIR;

struct Result
{
  int code;
  std::string err;
};

class Cli : public ::testing::Test
{
protected:
  void SetUp() override
  {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    tmp_ = fs::temp_directory_path() / ("latden_cli_" + std::string(info->name()) + "_" +
                                        std::to_string(::getpid()));
    fs::remove_all(tmp_);
    fs::create_directories(tmp_);
  }
  void TearDown() override { fs::remove_all(tmp_); }

  Result run(const std::string& args) const
  {
    const fs::path err = tmp_ / "stderr.txt";
    const std::string cmd = "'" + kCli + "' " + args + " > /dev/null 2> '" + err.string() + "'";
    const int status = std::system(cmd.c_str());
    return { WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(err) };
  }

  static std::string slurp(const fs::path& p)
  {
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
  }

  static std::vector<std::string> lines(const fs::path& p)
  {
    std::ifstream in(p);
    std::vector<std::string> out;
    for (std::string l; std::getline(in, l);)
      out.push_back(l);
    return out;
  }

  std::string out(const std::string& name) const { return (tmp_ / name).string(); }
  static std::string data(const std::string& name) { return (kData / name).string(); }

  fs::path tmp_;
};

} // namespace

TEST_F(Cli, BuildLatticeUnitSquare)
{
  const auto r =
    run("build-lattice --region " + data("unit_square.geojson") + " --spacing 0.5 --out " +
        out("b"));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto nodes = lines(tmp_ / "b" / "nodes.csv");
  ASSERT_EQ(nodes.size(), 10u);
  EXPECT_EQ(nodes[0], "id,easting,northing,degree");
  EXPECT_EQ(nodes[5], "4,0.5,0.5,8");
  EXPECT_EQ(lines(tmp_ / "b" / "links.csv").size(), 21u);
  EXPECT_NE(slurp(tmp_ / "b" / "connectivity.txt").find("components 1"), std::string::npos);
  const auto meta = nlohmann::json::parse(slurp(tmp_ / "b" / "run.json"));
  EXPECT_EQ(meta["command"], "build-lattice");
  EXPECT_EQ(meta["parameters"]["spacing"], 0.5);
  EXPECT_EQ(meta["inputs"]["region"]["sha256"].get<std::string>().size(), 64u);
}

TEST_F(Cli, BuildLatticeSlitReportsTwoComponents)
{
  const std::string args =
    "build-lattice --region " + data("slit.geojson") + " --spacing 0.1 --out " + out("s");
  const auto r = run(args);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(slurp(tmp_ / "s" / "connectivity.txt").find("components 2"), std::string::npos);
  EXPECT_EQ(run(args + " --strict").code, 1);
}

TEST_F(Cli, MalformedGeoJsonExitsTwo)
{
  const fs::path bad = tmp_ / "broken.geojson";
  std::ofstream(bad) << "{\"type\": \"Polygon\", \"coordinates\": [[[0,0],[1,0]";
  const auto r = run("build-lattice --region " + bad.string() + " --spacing 0.5 --out " + out("x"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find(bad.string()), std::string::npos) << r.err;
}

TEST_F(Cli, BadFlagsExitTwo)
{
  EXPECT_EQ(run("build-lattice --region " + data("unit_square.geojson") + " --out " + out("x"))
              .code,
            2);
  EXPECT_EQ(run("build-lattice --region " + data("unit_square.geojson") +
                " --spacing 0.5 --rule band:2:1 --out " + out("x"))
              .code,
            2);
  EXPECT_EQ(run("frobnicate").code, 2);
  EXPECT_EQ(run("estimate --region " + data("six_node_region.geojson") + " --obs " +
                data("six_node_obs.csv") + " --spacing 1 --k many --out " + out("x"))
              .code,
            2);
}

TEST_F(Cli, EstimateSixNodeFixedK)
{
  const std::string region = data("six_node_region.geojson");
  const std::string before = slurp(region);
  const auto r = run("estimate --region " + region + " --edits " + data("six_node_edits.txt") +
                     " --obs " + data("six_node_obs.csv") + " --spacing 1 --k 30 --out " +
                     out("e"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(region), before);
  std::ifstream in(tmp_ / "e" / "density.csv");
  const auto t = latden::io::read_density_csv(in);
  const std::vector<double> printed{ 0.1703, 0.1703, 0.1689, 0.1689, 0.1643, 0.1570 };
  ASSERT_EQ(t.field.size(), 6u);
  for (std::size_t i = 0; i < 6; ++i) {
    const double d = t.field.probability[i] - printed[i];
    EXPECT_TRUE(std::abs(d) <= 5e-5 || (d >= 0 && d < 1e-4)) << i;
    // N / area = 6 / 2
    EXPECT_NEAR(t.field.density[i], 3.0 * t.field.probability[i], 1e-12);
  }
  EXPECT_FALSE(fs::exists(tmp_ / "e" / "ucv_trace.csv"));
  EXPECT_TRUE(fs::exists(tmp_ / "e" / "raster.csv"));
  const auto meta = nlohmann::json::parse(slurp(tmp_ / "e" / "run.json"));
  EXPECT_EQ(meta["results"]["k_used"], 30);
  EXPECT_TRUE(meta["inputs"].contains("edits"));
}

TEST_F(Cli, EstimateAutoOnCauseway)
{
  const auto r = run("estimate --region " + data("causeway.geojson") + " --obs " +
                     data("causeway_obs.csv") + " --spacing 0.02 --resolution 75 --out " +
                     out("c"));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto trace = lines(tmp_ / "c" / "ucv_trace.csv");
  EXPECT_EQ(trace[0], "k,ucv");
  EXPECT_GT(trace.size(), 10u);
  const std::string summary = slurp(tmp_ / "c" / "summary.txt");
  EXPECT_NE(summary.find("minimum_at_scan_edge false"), std::string::npos) << summary;
  const auto raster = lines(tmp_ / "c" / "raster.csv");
  ASSERT_EQ(raster.size(), 75u);
  // the notch cuts through the bottom rows
  EXPECT_NE(raster.back().find("NA"), std::string::npos);
}

TEST_F(Cli, EstimateMissingObservationsExitsTwo)
{
  const auto r = run("estimate --region " + data("unit_square.geojson") + " --obs " +
                     out("nope.csv") + " --spacing 0.5 --out " + out("m"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("nope.csv"), std::string::npos);
}

TEST_F(Cli, EstimateObservationOutsideListsIndex)
{
  const fs::path obs = tmp_ / "obs.csv";
  std::ofstream(obs) << "0.5,0.5\n0.2,0.2\n7,7\n";
  const auto r = run("estimate --region " + data("unit_square.geojson") + " --obs " +
                     obs.string() + " --spacing 0.5 --out " + out("m"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("indices 2"), std::string::npos) << r.err;
}

TEST_F(Cli, HomerangeUniformEightNodes)
{
  const fs::path dens = tmp_ / "density.csv";
  {
    std::ofstream f(dens);
    f << "id,easting,northing,p,density\n";
    for (int i = 0; i < 8; ++i)
      f << i << "," << i << ",0,0.125,0.5\n";
  }
  const auto r = run("homerange --density " + dens.string() + " --coverage 0.75 --out " + out("h"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(lines(tmp_ / "h" / "homerange.csv").size(), 7u);
  const std::string summary = slurp(tmp_ / "h" / "summary.txt");
  EXPECT_NE(summary.find("P,achieved,node_count,area\n0.75,0.75,6,1.5"), std::string::npos)
    << summary;
}

TEST_F(Cli, HomerangeRejectsFullCoverage)
{
  const auto r = run("homerange --region " + data("six_node_region.geojson") + " --obs " +
                     data("six_node_obs.csv") + " --spacing 1 --coverage 1.0 --out " + out("h"));
  EXPECT_EQ(r.code, 2);
}

TEST_F(Cli, HomerangeInlineOnCauseway)
{
  const auto r = run("homerange --region " + data("causeway.geojson") + " --obs " +
                     data("causeway_obs.csv") + " --spacing 0.02 --coverage 0.75 --out " +
                     out("h"));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto summary = lines(tmp_ / "h" / "summary.txt");
  const auto it = std::find(summary.begin(), summary.end(), "P,achieved,node_count,area");
  ASSERT_NE(it, summary.end());
  std::istringstream row(*(it + 1));
  double P = 0, achieved = 0;
  char comma = 0;
  row >> P >> comma >> achieved;
  EXPECT_EQ(P, 0.75);
  EXPECT_GE(achieved, 0.75);
}

TEST_F(Cli, SimulateDeterministicWithSeed)
{
  ASSERT_EQ(run("simulate --replicates 1 --seed 7 --out " + out("a")).code, 0);
  ASSERT_EQ(run("simulate --replicates 1 --seed 7 --out " + out("b")).code, 0);
  const auto a = slurp(tmp_ / "a" / "ise.csv");
  EXPECT_EQ(a, slurp(tmp_ / "b" / "ise.csv"));
  EXPECT_EQ(lines(tmp_ / "a" / "ise.csv").size(), 2u);
  EXPECT_NE(slurp(tmp_ / "a" / "summary.txt").find("paired_t "), std::string::npos);
  const auto meta = nlohmann::json::parse(slurp(tmp_ / "a" / "run.json"));
  EXPECT_EQ(meta["parameters"]["seed"], 7);
}

TEST_F(Cli, SimulateRecordsDrawnSeed)
{
  ASSERT_EQ(run("simulate --replicates 1 --out " + out("r")).code, 0);
  const auto meta = nlohmann::json::parse(slurp(tmp_ / "r" / "run.json"));
  EXPECT_EQ(meta["parameters"]["seed_source"], "random");
  const auto seed = meta["parameters"]["seed"].get<std::uint64_t>();
  ASSERT_EQ(run("simulate --replicates 1 --seed " + std::to_string(seed) + " --out " + out("s"))
              .code,
            0);
  EXPECT_EQ(slurp(tmp_ / "r" / "ise.csv"), slurp(tmp_ / "s" / "ise.csv"));
}
