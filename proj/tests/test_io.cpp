#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "oamtomo/error.hpp"
#include "oamtomo/io.hpp"
#include "oamtomo/modes.hpp"
#include "oamtomo/phasecam.hpp"
#include "oamtomo/seed.hpp"

using namespace oamtomo;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "oamtomo_test_io";
  fs::create_directories(dir);
  return dir / name;
}

phasecam::PhaseFrame ramp(int bit_depth) {
  std::vector<std::uint16_t> px(80 * 70);
  const int maxv = (1 << bit_depth) - 1;
  for (std::size_t i = 0; i < px.size(); ++i) px[i] = static_cast<std::uint16_t>((i * 37) % (maxv + 1));
  return phasecam::PhaseFrame(80, 70, bit_depth, px);
}

}  // namespace

TEST_CASE("PGM round trip") {
  for (int bd : {8, 16}) {
    const auto f = ramp(bd);
    const std::string bytes = io::encode_pgm(f, {"config_hash=abc seed=1"});
    CHECK(bytes.rfind("P5\n# config_hash=abc seed=1\n", 0) == 0);
    const auto g = io::decode_pgm(bytes);
    CHECK(g.bit_depth() == bd);
    CHECK(g.width() == 80);
    CHECK(g.height() == 70);
    CHECK(std::equal(f.pixels().begin(), f.pixels().end(), g.pixels().begin()));
  }
  // 16-bit samples are big-endian
  const std::string b16 = io::encode_pgm(phasecam::PhaseFrame(64, 64, 16, std::vector<std::uint16_t>(64 * 64, 0x0102)));
  CHECK(b16.substr(b16.size() - 2) == std::string("\x01\x02", 2));

  const auto path = scratch("ramp.pgm");
  io::write_pgm(path, ramp(8));
  CHECK(io::read_pgm(path).at(3, 2) == ramp(8).at(3, 2));
}

TEST_CASE("PGM header comments anywhere and malformed input") {
  std::string bytes = "P5 # a comment\n64 # width done\n64\n255\n" + std::string(64 * 64, '\x07');
  CHECK(io::decode_pgm(bytes).at(10, 10) == 7);
  CHECK_THROWS_AS(io::decode_pgm("P2\n64 64\n255\n"), DataError);
  CHECK_THROWS_AS(io::decode_pgm("P5\n64 64\n255\n" + std::string(100, '\0')), DataError);
  CHECK_THROWS_AS(io::decode_pgm("P5\n64 x\n255\n"), DataError);
  CHECK_THROWS_AS(io::decode_pgm("P5\n16 16\n255\n" + std::string(256, '\0')), DataError);
  CHECK_THROWS_AS(io::read_pgm(scratch("missing.pgm")), DataError);
}

TEST_CASE("complex field round trip") {
  const modes::BeamGeometry beam(1e-3, 852e-9);
  auto grid = modes::reference_grid(beam, 1);
  grid.n = 64;
  const auto f = modes::lg_field({1, 0}, beam, grid);
  const auto path = scratch("field.bin");
  io::write_field(path, f);
  CHECK(fs::file_size(path) == 32 + 64 * 64 * 16);
  const auto g = io::read_field(path);
  CHECK(g.same_grid(f));
  CHECK(std::equal(f.samples().begin(), f.samples().end(), g.samples().begin()));

  const auto frame = io::field_to_frame(f);
  CHECK(frame.width() == 64);
  CHECK(*std::max_element(frame.pixels().begin(), frame.pixels().end()) == 255);
  // top row holds the largest y: intensity of a doughnut is symmetric, so compare a
  // field that is not
  std::vector<modes::Complex> s(64 * 64);
  s[63 * 64 + 5] = 1.0;  // iy = 63, the top
  const auto top = io::field_to_frame(modes::ComplexField(64, 1.0, 0, 0, s));
  CHECK(top.at(5, 0) == 255);
}

TEST_CASE("density JSON") {
  const auto rho = qubit::density_from_stokes({0.3, -0.4, 0.5});
  const auto j = io::density_to_json(rho, {"00ff", 42});
  CHECK(j["dim"] == 2);
  CHECK(j["provenance"]["seed"] == 42);
  CHECK(j["provenance"]["config_hash"] == "00ff");
  CHECK(j["stokes"][0].get<double>() == doctest::Approx(0.3));
  CHECK(j["physicalized"] == false);
  const auto back = io::density_from_json(io::Json::parse(j.dump()));
  CHECK((back.matrix() - rho.matrix()).norm() < 1e-15);

  const auto q = io::density_to_json(qubit::DensityMatrix::maximally_mixed(4), {"x", 1});
  CHECK(q["stokes"].size() == 15);
  CHECK_THROWS_AS(io::density_from_json(io::Json::parse(R"({"dim": 2})")), DataError);
}

TEST_CASE("count CSV") {
  std::vector<apparatus::CountRecord> recs(2);
  recs[0] = {"R/block-L", apparatus::Port::X, -1, 500000, 1234, 7};
  recs[1] = {"R/phi-90", apparatus::Port::X, PhaseBins(120).phase_bin(kPi / 2), 1000000, 40000, 8};
  std::ostringstream out;
  out << "# config_hash=abc seed=3\n";
  io::write_counts_csv(out, recs);
  const std::string text = out.str();
  CHECK(text.find("configuration_id,port,phase_bin_deg,trials,clicks,seed\n") != std::string::npos);
  CHECK(text.find("R/block-L,X,,500000,1234,7\n") != std::string::npos);
  CHECK(text.find("R/phi-90,X,90.000,1000000,40000,8\n") != std::string::npos);

  std::istringstream in(text);
  const auto back = io::read_counts_csv(in);
  REQUIRE(back.size() == 2);
  CHECK(back[1].phase_bin == recs[1].phase_bin);
  CHECK(back[0].phase_bin == -1);
  CHECK(back[0].clicks == 1234);

  std::istringstream bad("configuration_id,port,phase_bin_deg,trials,clicks,seed\nx,Z,,1,1,1\n");
  CHECK_THROWS_AS(io::read_counts_csv(bad), DataError);
  std::istringstream nohead("x,X,,1,1,1\n");
  CHECK_THROWS_AS(io::read_counts_csv(nohead), DataError);
}

TEST_CASE("hashing and formatting") {
  // FNV-1a 64 reference values
  CHECK(io::fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(io::fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  const auto a = nlohmann::json::parse(R"({"b": 1, "a": [1, 2]})");
  const auto b = nlohmann::json::parse(R"({"a": [1, 2], "b": 1})");
  CHECK(io::config_hash(a) == io::config_hash(b));
  CHECK(io::config_hash(a).size() == 16);
  CHECK(io::format_fixed(-0.0001, 3) == "0.000");
  CHECK(io::format_fixed(2.5, 2) == "2.50");
  CHECK(child_seed(1, 0) != child_seed(1, 1));
  CHECK(child_seed(1, 0) == child_seed(1, 0));
}
