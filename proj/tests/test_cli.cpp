#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "cli/commands.hpp"
#include "oamtomo/io.hpp"
#include "oamtomo/phasecam.hpp"

using namespace oamtomo;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "oamtomo");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "oamtomo_test_cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_file(const fs::path& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
  return path;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// phases.csv rows keyed by frame id: column index -> text
std::map<std::string, std::vector<std::string>> read_phases(const fs::path& path) {
  std::istringstream in(slurp(path));
  std::string line;
  std::map<std::string, std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("frame_id", 0) == 0) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cols.push_back(c);
    while (cols.size() < 7) cols.emplace_back();
    rows[cols[0]] = cols;
  }
  return rows;
}

const char* kSmallConfig = R"({
  "seed": 99,
  "device": "nominal",
  "detection": {"trials": 200000},
  "inputs": ["R", "D", "example4"],
  "schedule": "standard",
  "readout": {"bins": 120, "mode": "analytic"}
})";

}  // namespace

TEST_CASE("simulate writes the artifacts with provenance") {
  const fs::path dir = fresh_dir("simulate");
  const auto cfg = write_file(dir / "cfg.json", kSmallConfig);
  const auto r = run({"--out", (dir / "out").string(), "simulate", cfg.string()});
  INFO(r.err);
  REQUIRE(r.code == cli::kExitOk);
  for (const char* f : {"calibration.json", "density_R.json", "density_D.json", "density_example4.json",
                        "counts.csv", "qudit_counts.csv", "mode_R.pgm", "mode_example4.pgm"})
    CHECK_MESSAGE(fs::exists(dir / "out" / f), f);

  const auto rho = nlohmann::json::parse(slurp(dir / "out" / "density_R.json"));
  const std::string hash = rho["provenance"]["config_hash"];
  CHECK(hash.size() == 16);
  CHECK(rho["provenance"]["seed"] == 99);
  CHECK(rho["fidelity"].get<double>() > 0.9);
  CHECK(slurp(dir / "out" / "counts.csv").rfind("# config_hash=" + hash + " seed=99\n", 0) == 0);
  CHECK(slurp(dir / "out" / "mode_R.pgm").find("config_hash=" + hash) != std::string::npos);
  const auto q = nlohmann::json::parse(slurp(dir / "out" / "density_example4.json"));
  CHECK(q["dim"] == 4);

  // the seed on the command line overrides the config and changes the counts
  const auto r2 = run({"--seed", "100", "--out", (dir / "out2").string(), "tomograph", cfg.string()});
  REQUIRE(r2.code == cli::kExitOk);
  CHECK(slurp(dir / "out2" / "counts.csv") != slurp(dir / "out" / "counts.csv"));
  CHECK_FALSE(fs::exists(dir / "out2" / "qudit_counts.csv"));
}

TEST_CASE("json summary is machine readable") {
  const fs::path dir = fresh_dir("summary");
  const auto cfg = write_file(dir / "cfg.json", kSmallConfig);
  const auto r = run({"--format", "json", "--out", (dir / "out").string(), "tomograph", cfg.string()});
  REQUIRE(r.code == cli::kExitOk);
  CHECK_NOTHROW((void)nlohmann::json::parse(r.out));
}

TEST_CASE("configuration errors exit with code 2 and name the field") {
  const fs::path dir = fresh_dir("errors");
  auto cfg = write_file(dir / "neg.json",
                        "{\n \"seed\": 1,\n \"detection\": {\"trials\": -5},\n \"inputs\": [\"R\"]\n}\n");
  auto r = run({"simulate", cfg.string()});
  CHECK(r.code == cli::kExitConfig);
  CHECK(r.err.find("/detection/trials") != std::string::npos);
  CHECK(r.err.find("line 3") != std::string::npos);

  cfg = write_file(dir / "syntax.json", "{\n \"seed\": 1,\n \"inputs\": [\"R\",]\n}\n");
  r = run({"simulate", cfg.string()});
  CHECK(r.code == cli::kExitConfig);
  CHECK(r.err.find("line 3") != std::string::npos);

  cfg = write_file(dir / "noseed.json", "{\"inputs\": [\"R\"]}");
  r = run({"simulate", cfg.string()});
  CHECK(r.code == cli::kExitConfig);
  CHECK(r.err.find("/seed") != std::string::npos);
  CHECK(run({"--seed", "5", "--out", (dir / "o").string(), "calibrate", cfg.string()}).code ==
        cli::kExitOk);

  cfg = write_file(dir / "unknown.json", "{\"seed\": 1, \"inputs\": [\"R\"], \"devcie\": \"nominal\"}");
  r = run({"simulate", cfg.string()});
  CHECK(r.code == cli::kExitConfig);
  CHECK(r.err.find("/devcie") != std::string::npos);

  cfg = write_file(dir / "qubits.json", "{\"seed\": 1, \"inputs\": [\"R\"]}");
  CHECK(run({"qudit", cfg.string()}).code == cli::kExitConfig);
  CHECK(run({"simulate", (dir / "missing.json").string()}).code == cli::kExitConfig);
  CHECK(run({"frobnicate"}).code == cli::kExitConfig);
  CHECK(run({"--help"}).code == cli::kExitOk);
}

TEST_CASE("frame generation and analysis") {
  const fs::path dir = fresh_dir("frames");
  const auto frames = dir / "frames";
  CHECK(run({"--out", frames.string(), "gen-frames", "--count", "4"}).code == cli::kExitConfig);

  REQUIRE(run({"--seed", "11", "--out", frames.string(), "gen-frames", "--count", "360"}).code ==
          cli::kExitOk);
  CHECK(fs::exists(frames / "frame_0359.pgm"));
  CHECK(fs::exists(frames / "truth.json"));

  // no ring fit and no --fit
  auto r = run({"--out", (dir / "a").string(), "analyze-frames", frames.string()});
  CHECK(r.code == cli::kExitConfig);
  CHECK(r.err.find("ring") != std::string::npos);

  r = run({"--out", (dir / "a").string(), "analyze-frames", frames.string(), "--fit"});
  REQUIRE(r.code == cli::kExitOk);
  const auto rows = read_phases(dir / "a" / "phases.csv");
  REQUIRE(rows.size() == 360);
  double max_err = 0.0;
  for (const auto& [id, cols] : rows) max_err = std::max(max_err, std::abs(std::stod(cols[6])));
  CHECK(max_err <= 3.0);

  // rotating frames and ring by 90 degrees moves phi by 180 degrees
  const auto rot = dir / "rotated";
  fs::create_directories(rot);
  const auto ring_j = nlohmann::json::parse(slurp(dir / "a" / "ringfit.json"));
  phasecam::RingFit ring;
  ring.center_x = ring_j["center_x"];
  ring.center_y = ring_j["center_y"];
  ring.width = ring_j["width"];
  ring.radius_of_interest = ring_j["radius_of_interest"];
  int w = 0, h = 0;
  for (int i = 0; i < 40; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "frame_%04d.pgm", i);
    const auto f = io::read_pgm(frames / name);
    w = f.width();
    h = f.height();
    io::write_pgm(rot / name, phasecam::rotate90(f));
  }
  const auto rring = phasecam::rotate90(ring, w, h);
  const auto ring_file = write_file(dir / "ring_rot.json",
                                    nlohmann::json{{"center_x", rring.center_x},
                                                   {"center_y", rring.center_y},
                                                   {"width", rring.width},
                                                   {"radius_of_interest", rring.radius_of_interest}}
                                        .dump());
  r = run({"--out", (dir / "b").string(), "analyze-frames", rot.string(), "--ring", ring_file.string()});
  REQUIRE(r.code == cli::kExitOk);
  const auto rrows = read_phases(dir / "b" / "phases.csv");
  REQUIRE(rrows.size() == 40);
  for (const auto& [id, cols] : rrows) {
    CHECK(cols[5].empty());  // no truth sidecar
    const double d = std::stod(cols[2]) - std::stod(rows.at(id)[2]);
    const double off = std::remainder(d - 180.0, 360.0);
    CHECK(std::abs(off) <= 6.0 + 1e-9);  // one phase bin
  }

  CHECK(run({"analyze-frames", rot.string(), "--ring", (dir / "nope.json").string()}).code ==
        cli::kExitConfig);
  CHECK(run({"analyze-frames", (dir / "empty").string(), "--fit"}).code == cli::kExitConfig);
}

TEST_CASE("budget command") {
  auto r = run({"budget"});
  REQUIRE(r.code == cli::kExitOk);
  CHECK(r.out.find("total: 24.0%") != std::string::npos);

  r = run({"budget", "--dL", "1", "--dnu", "1"});
  CHECK(r.out.find("geometric: 12.000 deg") != std::string::npos);
  CHECK(r.out.find("dispersion: -0.100 deg") != std::string::npos);

  r = run({"budget", "--dL", "2", "--dnu", "0.5"});
  CHECK(r.out.find("geometric: 12.000 deg") != std::string::npos);

  r = run({"budget", "--preset", "OAM-sorter"});
  CHECK(r.out.find("dimension 15, losses 40%") != std::string::npos);
  CHECK(r.out.find("3BS") == std::string::npos);

  r = run({"budget", "--preset", "nonsense"});
  CHECK(r.code == cli::kExitConfig);

  r = run({"--format", "json", "budget"});
  const auto j = nlohmann::json::parse(r.out);
  CHECK_FALSE(j.empty());
  r = run({"--format", "csv", "budget"});
  CHECK(r.out.find(',') != std::string::npos);
}

TEST_CASE("identical inputs reproduce identical files") {
  const fs::path dir = fresh_dir("repeat");
  const auto cfg = write_file(dir / "cfg.json", kSmallConfig);
  for (const char* sub : {"one", "two"}) {
    REQUIRE(run({"--out", (dir / sub).string(), "simulate", cfg.string()}).code == cli::kExitOk);
    REQUIRE(run({"--seed", "3", "--out", (dir / sub / "frames").string(), "gen-frames", "--count",
                 "12", "--shot-noise"})
                .code == cli::kExitOk);
  }
  int compared = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir / "one")) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), dir / "one");
    INFO(rel.string());
    CHECK(slurp(e.path()) == slurp(dir / "two" / rel));
    ++compared;
  }
  CHECK(compared > 15);
}
