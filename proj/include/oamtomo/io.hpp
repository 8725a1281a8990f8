#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "oamtomo/apparatus.hpp"
#include "oamtomo/modes.hpp"
#include "oamtomo/phasecam.hpp"
#include "oamtomo/qubit.hpp"
#include "oamtomo/qudit.hpp"

namespace oamtomo::io {

using Json = nlohmann::ordered_json;

/// Binary PGM (P5). 8-bit frames use one byte per pixel, 16-bit frames two
/// bytes big-endian. Comment lines are written after the magic number.
std::string encode_pgm(const phasecam::PhaseFrame& frame,
                       const std::vector<std::string>& comments = {});
/// Accepts comments anywhere in the header; maxval ≤ 255 gives an 8-bit
/// frame, larger values a 16-bit frame. Throws DataError on malformed input.
phasecam::PhaseFrame decode_pgm(const std::string& bytes);

void write_pgm(const std::filesystem::path& path, const phasecam::PhaseFrame& frame,
               const std::vector<std::string>& comments = {});
phasecam::PhaseFrame read_pgm(const std::filesystem::path& path);

/// Raw complex field: u64 N, f64 pitch, f64 centre x, f64 centre y, then N²
/// interleaved (re, im) f64 values, all little-endian, row iy = 0 first.
void write_field(const std::filesystem::path& path, const modes::ComplexField& field);
modes::ComplexField read_field(const std::filesystem::path& path);

/// |u|² scaled so the maximum maps to the full gray range; the top image
/// row holds the largest y.
phasecam::PhaseFrame field_to_frame(const modes::ComplexField& field, int bit_depth = 8);

struct Provenance {
  std::string config_hash;
  std::uint64_t seed = 0;
};

/// {dim, re, im, physicalized, stokes, provenance}. "stokes" holds S1..S3
/// for a qubit and the 15 generalized Bloch components for d = 4.
Json density_to_json(const qubit::DensityMatrix& rho, const Provenance& prov);
qubit::DensityMatrix density_from_json(const Json& j);

/// Count table with columns configuration_id, port, phase_bin_deg, trials,
/// clicks, seed. phase_bin_deg is the interferometer phase of the readout
/// bin, empty for blocked configurations.
void write_counts_csv(std::ostream& out, const std::vector<apparatus::CountRecord>& records,
                      int bins = 120);
void write_counts_csv(std::ostream& out, const std::vector<qudit::QuditCount>& records);
std::vector<apparatus::CountRecord> read_counts_csv(std::istream& in, int bins = 120);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(const std::string& bytes);
/// 16 hex digits of FNV-1a over the compact dump of the JSON with keys sorted.
std::string config_hash(const nlohmann::json& config);

/// Fixed-point decimal with the given number of digits, "-0" normalized.
std::string format_fixed(double v, int digits);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace oamtomo::io
