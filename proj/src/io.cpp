#include "oamtomo/io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "oamtomo/angles.hpp"
#include "oamtomo/error.hpp"

namespace oamtomo::io {

namespace {

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

std::uint64_t get_u64(const std::string& in, std::size_t& pos) {
  if (pos + 8 > in.size()) throw DataError("field file is truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  pos += 8;
  return v;
}

double get_f64(const std::string& in, std::size_t& pos) {
  return std::bit_cast<double>(get_u64(in, pos));
}

// Next whitespace-delimited header token, skipping comments.
std::string header_token(const std::string& s, std::size_t& pos) {
  while (pos < s.size()) {
    const char c = s[pos];
    if (c == '#') {
      while (pos < s.size() && s[pos] != '\n') ++pos;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      ++pos;
    } else {
      break;
    }
  }
  const std::size_t start = pos;
  while (pos < s.size() && !std::isspace(static_cast<unsigned char>(s[pos])) && s[pos] != '#')
    ++pos;
  if (start == pos) throw DataError("PGM header is truncated");
  return s.substr(start, pos - start);
}

int header_int(const std::string& s, std::size_t& pos, const char* what) {
  const std::string tok = header_token(s, pos);
  try {
    std::size_t used = 0;
    const int v = std::stoi(tok, &used);
    if (used != tok.size() || v <= 0) throw std::invalid_argument(tok);
    return v;
  } catch (const std::logic_error&) {
    throw DataError(std::string("PGM header has an invalid ") + what + " '" + tok + "'");
  }
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

std::string encode_pgm(const phasecam::PhaseFrame& frame,
                       const std::vector<std::string>& comments) {
  std::string out = "P5\n";
  for (const auto& c : comments) {
    if (c.find('\n') != std::string::npos) throw InvalidArgument("PGM comments must be one line");
    out += "# " + c + "\n";
  }
  out += std::to_string(frame.width()) + " " + std::to_string(frame.height()) + "\n" +
         std::to_string(frame.max_value()) + "\n";
  for (std::uint16_t v : frame.pixels()) {
    if (frame.bit_depth() == 16) out.push_back(static_cast<char>(v >> 8));
    out.push_back(static_cast<char>(v & 0xff));
  }
  return out;
}

phasecam::PhaseFrame decode_pgm(const std::string& bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5')
    throw DataError("not a binary PGM (P5) image");
  std::size_t pos = 2;
  const int width = header_int(bytes, pos, "width");
  const int height = header_int(bytes, pos, "height");
  const int maxval = header_int(bytes, pos, "maxval");
  if (maxval > 65535) throw DataError("PGM maxval exceeds 65535");
  // exactly one whitespace byte separates the header from the raster
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos])))
    throw DataError("PGM header is not terminated");
  ++pos;
  const int depth = maxval > 255 ? 16 : 8;
  const std::size_t bpp = depth == 16 ? 2 : 1;
  const std::size_t count = static_cast<std::size_t>(width) * height;
  if (bytes.size() - pos < count * bpp) throw DataError("PGM raster is truncated");
  std::vector<std::uint16_t> px(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto hi = static_cast<unsigned char>(bytes[pos + i * bpp]);
    px[i] = bpp == 2
                ? static_cast<std::uint16_t>(
                      (hi << 8) | static_cast<unsigned char>(bytes[pos + i * bpp + 1]))
                : hi;
    if (px[i] > maxval) throw DataError("PGM pixel exceeds maxval");
  }
  try {
    return phasecam::PhaseFrame(width, height, depth, std::move(px));
  } catch (const InvalidArgument& e) {
    throw DataError(std::string("PGM image rejected: ") + e.what());
  }
}

void write_pgm(const std::filesystem::path& path, const phasecam::PhaseFrame& frame,
               const std::vector<std::string>& comments) {
  write_text(path, encode_pgm(frame, comments));
}

phasecam::PhaseFrame read_pgm(const std::filesystem::path& path) {
  try {
    return decode_pgm(read_text(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_field(const std::filesystem::path& path, const modes::ComplexField& field) {
  std::string out;
  put_u64(out, field.size());
  put_f64(out, field.pitch());
  put_f64(out, field.center_x());
  put_f64(out, field.center_y());
  for (const auto& v : field.samples()) {
    put_f64(out, v.real());
    put_f64(out, v.imag());
  }
  write_text(path, out);
}

modes::ComplexField read_field(const std::filesystem::path& path) {
  const std::string in = read_text(path);
  std::size_t pos = 0;
  const std::uint64_t n = get_u64(in, pos);
  if (n == 0 || n > 65536) throw DataError("field size out of range");
  const double pitch = get_f64(in, pos);
  const double cx = get_f64(in, pos);
  const double cy = get_f64(in, pos);
  if (in.size() - pos != n * n * 16) throw DataError("field file size does not match its header");
  std::vector<modes::Complex> samples(n * n);
  for (auto& s : samples) {
    const double re = get_f64(in, pos);
    s = modes::Complex(re, get_f64(in, pos));
  }
  return modes::ComplexField(n, pitch, cx, cy, std::move(samples));
}

phasecam::PhaseFrame field_to_frame(const modes::ComplexField& field, int bit_depth) {
  const auto n = static_cast<int>(field.size());
  const std::vector<double> inten = field.intensity();
  const double peak = *std::max_element(inten.begin(), inten.end());
  const double maxv = (1 << bit_depth) - 1;
  phasecam::GrayImage img(n, n);
  for (int iy = 0; iy < n; ++iy)
    for (int ix = 0; ix < n; ++ix)
      img.at(ix, n - 1 - iy) =
          peak > 0.0 ? maxv * inten[static_cast<std::size_t>(iy) * n + ix] / peak : 0.0;
  return phasecam::PhaseFrame::from_gray(img, bit_depth);
}

Json density_to_json(const qubit::DensityMatrix& rho, const Provenance& prov) {
  Json j;
  j["dim"] = rho.dim();
  Json re = Json::array(), im = Json::array();
  for (int r = 0; r < rho.dim(); ++r) {
    Json rr = Json::array(), ii = Json::array();
    for (int c = 0; c < rho.dim(); ++c) {
      rr.push_back(rho(r, c).real());
      ii.push_back(rho(r, c).imag());
    }
    re.push_back(rr);
    im.push_back(ii);
  }
  j["re"] = re;
  j["im"] = im;
  j["physicalized"] = rho.physicalized();
  if (rho.dim() == 2) {
    const auto s = qubit::stokes_of(rho);
    j["stokes"] = {s.s1, s.s2, s.s3};
  } else {
    j["stokes"] = qubit::bloch_vector(rho);
  }
  j["provenance"] = {{"config_hash", prov.config_hash}, {"seed", prov.seed}};
  return j;
}

qubit::DensityMatrix density_from_json(const Json& j) {
  try {
    const int dim = j.at("dim").get<int>();
    qubit::Matrix m(dim, dim);
    for (int r = 0; r < dim; ++r)
      for (int c = 0; c < dim; ++c)
        m(r, c) = qubit::Complex(j.at("re").at(r).at(c).get<double>(),
                                 j.at("im").at(r).at(c).get<double>());
    return qubit::DensityMatrix(m, j.value("physicalized", false));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed density matrix JSON: ") + e.what());
  }
}

void write_counts_csv(std::ostream& out, const std::vector<apparatus::CountRecord>& records,
                      int bins) {
  const PhaseBins pb(bins);
  out << "configuration_id,port,phase_bin_deg,trials,clicks,seed\n";
  for (const auto& r : records) {
    out << r.configuration_id << ',' << apparatus::to_string(r.port) << ',';
    if (r.phase_bin >= 0) out << format_fixed(rad_to_deg(pb.phase_of(r.phase_bin)), 3);
    out << ',' << r.trials << ',' << r.clicks << ',' << r.seed << '\n';
  }
}

void write_counts_csv(std::ostream& out, const std::vector<qudit::QuditCount>& records) {
  out << "configuration_id,port,phase_bin_deg,trials,clicks,seed\n";
  for (const auto& r : records)
    out << r.configuration_id << ',' << qudit::to_string(r.port) << ','
        << format_fixed(rad_to_deg(r.phase), 3) << ',' << r.trials << ',' << r.clicks << ','
        << r.seed << '\n';
}

std::vector<apparatus::CountRecord> read_counts_csv(std::istream& in, int bins) {
  const PhaseBins pb(bins);
  std::string line;
  int lineno = 0;
  // leading comment lines carry provenance
  while (std::getline(in, line) && ++lineno && !line.empty() && line[0] == '#') {
  }
  if (!in || line != "configuration_id,port,phase_bin_deg,trials,clicks,seed")
    throw DataError("count table header is missing or unexpected");
  std::vector<apparatus::CountRecord> out;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 6)
      throw DataError("count table line " + std::to_string(lineno) + " has " +
                      std::to_string(cells.size()) + " columns");
    try {
      apparatus::CountRecord r;
      r.configuration_id = cells[0];
      if (cells[1] != "X" && cells[1] != "Y") throw std::invalid_argument(cells[1]);
      r.port = cells[1] == "X" ? apparatus::Port::X : apparatus::Port::Y;
      r.phase_bin = cells[2].empty() ? -1 : pb.phase_bin(deg_to_rad(std::stod(cells[2])));
      r.trials = std::stoull(cells[3]);
      r.clicks = std::stoull(cells[4]);
      r.seed = std::stoull(cells[5]);
      out.push_back(r);
    } catch (const std::logic_error&) {
      throw DataError("count table line " + std::to_string(lineno) + " is malformed");
    }
  }
  return out;
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash(const nlohmann::json& config) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(config.dump())));
  return buf;
}

std::string format_fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  std::string s = buf;
  // "-0.000" and "0.000" must print alike
  if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path.string() + " for writing");
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!f) throw Error("failed writing " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot read " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace oamtomo::io
