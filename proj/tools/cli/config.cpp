#include "cli/config.hpp"

#include <cmath>
#include <set>

#include "oamtomo/angles.hpp"
#include "oamtomo/error.hpp"
#include "oamtomo/io.hpp"

namespace oamtomo::cli {

namespace {

using nlohmann::json;

std::string join(const std::string& path, const std::string& key) { return path + "/" + key; }

void check_keys(const json& j, const std::string& path, const std::set<std::string>& allowed) {
  if (!j.is_object()) throw ConfigError(path.empty() ? "/" : path, "must be an object");
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) throw ConfigError(join(path, key), "unknown setting");
}

double number(const json& j, const std::string& path, const std::string& key, double fallback,
              double lo, double hi) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_number()) throw ConfigError(join(path, key), "must be a number");
  const double x = v.get<double>();
  if (!(x >= lo && x <= hi))
    throw ConfigError(join(path, key), "must lie in [" + io::format_fixed(lo, 6) + ", " +
                                           io::format_fixed(hi, 6) + "], got " +
                                           io::format_fixed(x, 6));
  return x;
}

std::uint64_t positive_integer(const json& j, const std::string& path, const std::string& key,
                               std::uint64_t fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (v.is_number_unsigned() && v.get<std::uint64_t>() > 0) return v.get<std::uint64_t>();
  throw ConfigError(join(path, key), "must be a positive integer");
}

bool boolean(const json& j, const std::string& path, const std::string& key, bool fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_boolean()) throw ConfigError(join(path, key), "must be true or false");
  return j.at(key).get<bool>();
}

std::string text(const json& j, const std::string& path, const std::string& key,
                 const std::string& fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_string()) throw ConfigError(join(path, key), "must be a string");
  return j.at(key).get<std::string>();
}

apparatus::InterferometerConfig device_preset(const std::string& name, const std::string& path) {
  try {
    return apparatus::InterferometerConfig::preset(name);
  } catch (const InvalidArgument&) {
    throw ConfigError(path, "unknown device preset '" + name +
                                "' (expected ideal, nominal, calibration or measured)");
  }
}

apparatus::InterferometerConfig parse_device(const json& j, const std::string& path,
                                             std::string& name) {
  if (j.is_string()) {
    name = j.get<std::string>();
    return device_preset(name, path);
  }
  check_keys(j, path,
             {"preset", "efficiency_r", "efficiency_l", "leakage_db", "coherence",
              "reference_tap_loss", "input_split", "phase_drift_deg_per_s"});
  name = text(j, path, "preset", "nominal");
  auto d = device_preset(name, join(path, "preset"));
  d.r.efficiency = number(j, path, "efficiency_r", d.r.efficiency, 0.0, 1.0);
  d.l.efficiency = number(j, path, "efficiency_l", d.l.efficiency, 0.0, 1.0);
  if (j.contains("leakage_db")) {
    const double db = number(j, path, "leakage_db", 0.0, 0.0, 200.0);
    d.r.leakage[d.l.target_l] = db_to_ratio(db);
    d.l.leakage[d.r.target_l] = db_to_ratio(db);
  }
  d.coherence = number(j, path, "coherence", d.coherence, 0.0, 1.0);
  d.reference_tap_loss = number(j, path, "reference_tap_loss", d.reference_tap_loss, 0.0, 1.0);
  d.input_split = number(j, path, "input_split", d.input_split, 0.0, 1.0);
  d.phase_drift = deg_to_rad(
      number(j, path, "phase_drift_deg_per_s", rad_to_deg(d.phase_drift), 0.0, 1e6));
  name = "custom:" + name;
  return d;
}

apparatus::DetectionConfig parse_detection(const json& j, const std::string& path,
                                           apparatus::DetectionConfig d) {
  check_keys(j, path,
             {"mean_photons", "detector_efficiency", "background", "trials", "trial_period"});
  d.mean_photons = number(j, path, "mean_photons", d.mean_photons, 0.0, 1e6);
  d.detector_efficiency = number(j, path, "detector_efficiency", d.detector_efficiency, 0.0, 1.0);
  d.background = number(j, path, "background", d.background, 0.0, 1.0);
  d.trials = positive_integer(j, path, "trials", d.trials);
  d.trial_period = number(j, path, "trial_period", d.trial_period, 1e-12, 1e6);
  return d;
}

InputSpec parse_input(const json& j, const std::string& path) {
  InputSpec in;
  if (j.is_string()) {
    in.name = j.get<std::string>();
    if (in.name == "example4") {
      in.qudit = qudit::QuditState::example_state();
    } else if (in.name.size() == 1 && std::string("RLHVDA").find(in.name[0]) != std::string::npos) {
      in.qubit = qubit::PureQubit::named(in.name[0]);
    } else {
      throw ConfigError(path, "unknown named state '" + in.name +
                                  "' (expected R, L, H, V, D, A or example4)");
    }
    return in;
  }
  check_keys(j, path, {"name", "bloch", "amplitudes"});
  in.name = text(j, path, "name", "");
  if (in.name.empty() || in.name.find_first_of("/\\,\n") != std::string::npos)
    throw ConfigError(join(path, "name"), "must be a non-empty name without / \\ or commas");
  if (j.contains("bloch") == j.contains("amplitudes"))
    throw ConfigError(path, "give exactly one of \"bloch\" or \"amplitudes\"");
  if (j.contains("bloch")) {
    const std::string bp = join(path, "bloch");
    check_keys(j.at("bloch"), bp, {"polar_deg", "azimuth_deg"});
    const double polar = number(j.at("bloch"), bp, "polar_deg", 0.0, 0.0, 180.0);
    const double azimuth = number(j.at("bloch"), bp, "azimuth_deg", 0.0, -360.0, 360.0);
    in.qubit = qubit::PureQubit::from_bloch(deg_to_rad(polar), deg_to_rad(azimuth));
    return in;
  }
  const std::string ap = join(path, "amplitudes");
  const json& a = j.at("amplitudes");
  if (!a.is_array() || (a.size() != 2 && a.size() != 4))
    throw ConfigError(ap, "must list 2 or 4 amplitudes");
  std::vector<std::complex<double>> amp;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const json& v = a.at(i);
    const std::string vp = ap + "/" + std::to_string(i);
    if (v.is_number()) {
      amp.emplace_back(v.get<double>(), 0.0);
    } else if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
      amp.emplace_back(v[0].get<double>(), v[1].get<double>());
    } else {
      throw ConfigError(vp, "must be a number or a [re, im] pair");
    }
  }
  double norm = 0.0;
  for (const auto& c : amp) norm += std::norm(c);
  if (!(norm > 0.0) || !std::isfinite(norm)) throw ConfigError(ap, "must not all be zero");
  // amplitudes are normalized on input
  norm = std::sqrt(norm);
  if (amp.size() == 2) {
    in.qubit = qubit::PureQubit(amp[0] / norm, amp[1] / norm);
  } else {
    qudit::Vector4 v;
    for (int i = 0; i < 4; ++i) v(i) = amp[i] / norm;
    in.qudit = qudit::QuditState(v);
  }
  return in;
}

tomo::ScheduleEntry parse_entry(const json& j, const std::string& path, std::uint64_t trials) {
  check_keys(j, path, {"kind", "phase_deg", "trials", "steps", "id"});
  const std::string kind = text(j, path, "kind", "");
  const std::uint64_t t = positive_integer(j, path, "trials", trials);
  const std::string id = text(j, path, "id", "");
  if (id.find_first_of(",\n") != std::string::npos)
    throw ConfigError(join(path, "id"), "must not contain commas");
  if (kind == "block-L") return tomo::ScheduleEntry::block_l(t, id.empty() ? "block-L" : id);
  if (kind == "block-R") return tomo::ScheduleEntry::block_r(t, id.empty() ? "block-R" : id);
  if (kind == "phase") {
    if (!j.contains("phase_deg")) throw ConfigError(join(path, "phase_deg"), "is required");
    const double deg = number(j, path, "phase_deg", 0.0, -360.0, 720.0);
    return tomo::ScheduleEntry::fixed(deg_to_rad(deg), t, id);
  }
  if (kind == "scan") {
    const auto steps = positive_integer(j, path, "steps", 720);
    if (steps > 1'000'000) throw ConfigError(join(path, "steps"), "must not exceed 1000000");
    return tomo::ScheduleEntry::scan(static_cast<int>(steps), t, id.empty() ? "scan" : id);
  }
  throw ConfigError(join(path, "kind"), "must be block-L, block-R, phase or scan");
}

// Approximate source line of a JSON pointer: each object key along the
// path is searched for after the previous one. Array indices are skipped.
int locate_line(const std::string& source, const std::string& pointer) {
  std::size_t pos = 0;
  std::size_t start = 1;
  while (start <= pointer.size()) {
    std::size_t end = pointer.find('/', start);
    if (end == std::string::npos) end = pointer.size();
    const std::string key = pointer.substr(start, end - start);
    start = end + 1;
    if (key.empty() || key.find_first_not_of("0123456789") == std::string::npos) continue;
    const std::size_t hit = source.find("\"" + key + "\"", pos);
    if (hit == std::string::npos) break;
    pos = hit;
  }
  int line = 1;
  for (std::size_t i = 0; i < pos && i < source.size(); ++i) line += source[i] == '\n';
  return line;
}

}  // namespace

std::pair<int, int> line_column(const std::string& text, std::size_t offset) {
  int line = 1, col = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

namespace {

ExperimentConfig parse_impl(const std::string& source,
                            std::optional<std::uint64_t> seed_override) {
  json j;
  try {
    j = json::parse(source);
  } catch (const json::parse_error& e) {
    // e.byte is 1-based and points just past the offending character
    const auto [line, col] = line_column(source, e.byte > 0 ? e.byte - 1 : 0);
    throw ConfigError("", "syntax error at line " + std::to_string(line) + ", column " +
                              std::to_string(col) + ": " + e.what());
  }
  check_keys(j, "",
             {"description", "seed", "device", "detection", "inputs", "schedule", "readout",
              "calibration", "qudit", "physical_projection", "background_subtraction", "output"});

  ExperimentConfig c;
  c.raw = j;
  c.hash = io::config_hash(j);
  if (seed_override) {
    c.seed = *seed_override;
  } else if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned())
      throw ConfigError("/seed", "must be a non-negative integer");
    c.seed = j.at("seed").get<std::uint64_t>();
  } else {
    throw ConfigError("/seed", "is required (pass --seed or set it in the config)");
  }

  c.device_name = "nominal";
  c.device = apparatus::InterferometerConfig::nominal();
  if (j.contains("device")) c.device = parse_device(j.at("device"), "/device", c.device_name);
  if (j.contains("detection"))
    c.detection = parse_detection(j.at("detection"), "/detection", c.detection);

  if (!j.contains("inputs")) throw ConfigError("/inputs", "is required");
  const json& inputs = j.at("inputs");
  if (!inputs.is_array() || inputs.empty())
    throw ConfigError("/inputs", "must be a non-empty array");
  std::set<std::string> names;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const std::string p = "/inputs/" + std::to_string(i);
    c.inputs.push_back(parse_input(inputs.at(i), p));
    if (!names.insert(c.inputs.back().name).second)
      throw ConfigError(p, "duplicate input name '" + c.inputs.back().name + "'");
  }

  int bins = 120;
  if (j.contains("readout")) {
    const json& r = j.at("readout");
    check_keys(r, "/readout", {"bins", "mode", "calibration_offset_deg"});
    const auto b = positive_integer(r, "/readout", "bins", 120);
    if (b < 8 || b % 8 != 0 || b > 7200)
      throw ConfigError("/readout/bins", "must be a multiple of 8 between 8 and 7200");
    bins = static_cast<int>(b);
    const std::string mode = text(r, "/readout", "mode", "analytic");
    if (mode == "camera") {
      c.tomography.readout.mode = tomo::ReadoutMode::Camera;
    } else if (mode != "analytic") {
      throw ConfigError("/readout/mode", "must be analytic or camera");
    }
    c.tomography.calibration_offset =
        deg_to_rad(number(r, "/readout", "calibration_offset_deg", 0.0, -180.0, 180.0));
  }
  c.tomography.readout.bins = bins;

  const json sched = j.value("schedule", json("standard"));
  if (sched.is_string()) {
    if (sched.get<std::string>() != "standard")
      throw ConfigError("/schedule", "the only named schedule is standard");
    c.schedule = tomo::MeasurementSchedule::standard(c.detection.trials);
  } else if (sched.is_array()) {
    for (std::size_t i = 0; i < sched.size(); ++i)
      c.schedule.entries.push_back(
          parse_entry(sched.at(i), "/schedule/" + std::to_string(i), c.detection.trials));
  } else {
    throw ConfigError("/schedule", "must be \"standard\" or an array of entries");
  }
  try {
    c.schedule.validate(bins);
  } catch (const InvalidArgument& e) {
    throw ConfigError("/schedule", e.what());
  }

  c.tomography.physical_projection = boolean(j, "", "physical_projection", false);
  c.tomography.background_subtraction = boolean(j, "", "background_subtraction", false);

  c.calibration_device_name = "calibration";
  c.calibration_device = apparatus::InterferometerConfig::calibration();
  c.calibration.readout = c.tomography.readout;
  c.calibration.calibration_offset = c.tomography.calibration_offset;
  if (j.contains("calibration")) {
    const json& k = j.at("calibration");
    check_keys(k, "/calibration",
               {"enabled", "device", "steps", "trials_per_step", "frame_period",
                "visibility_threshold"});
    c.calibration_enabled = boolean(k, "/calibration", "enabled", true);
    if (k.contains("device"))
      c.calibration_device =
          parse_device(k.at("device"), "/calibration/device", c.calibration_device_name);
    const auto steps = positive_integer(k, "/calibration", "steps", 720);
    if (steps > 1'000'000) throw ConfigError("/calibration/steps", "must not exceed 1000000");
    c.calibration.steps = static_cast<int>(steps);
    c.calibration.trials_per_step =
        positive_integer(k, "/calibration", "trials_per_step", c.calibration.trials_per_step);
    c.calibration.frame_period =
        number(k, "/calibration", "frame_period", c.calibration.frame_period, 0.0, 1e6);
    c.calibration.visibility_threshold =
        number(k, "/calibration", "visibility_threshold", 0.8, 0.0, 1.0);
  }

  c.network_name = "3BS";
  c.network = qudit::NetworkConfig::three_bs();
  c.qudit_detection = c.detection;
  c.qudit_detection.mean_photons = 40.0;
  c.qudit_detection.trials = 100'000;
  if (j.contains("qudit")) {
    const json& q = j.at("qudit");
    check_keys(q, "/qudit", {"network", "mean_photons", "trials", "leakage_db"});
    c.network_name = text(q, "/qudit", "network", "3BS");
    try {
      c.network = qudit::NetworkConfig::preset(c.network_name);
    } catch (const InvalidArgument&) {
      throw ConfigError("/qudit/network", "must be 3BS or lossless");
    }
    if (q.contains("leakage_db")) {
      const double eps = db_to_ratio(number(q, "/qudit", "leakage_db", 27.0, 0.0, 200.0));
      for (int i = 0; i < 4; ++i)
        for (int m : qudit::kModes)
          if (m != qudit::kModes[i]) c.network.paths[i].leakage[m] = eps;
    }
    c.qudit_detection.mean_photons =
        number(q, "/qudit", "mean_photons", c.qudit_detection.mean_photons, 1e-9, 1e6);
    c.qudit_detection.trials = positive_integer(q, "/qudit", "trials", c.qudit_detection.trials);
  }

  if (j.contains("output")) {
    const json& o = j.at("output");
    check_keys(o, "/output", {"dir", "pgm"});
    c.output_dir = text(o, "/output", "dir", "out");
    c.write_pgm = boolean(o, "/output", "pgm", true);
  }

  try {
    c.device.validate();
    c.detection.validate();
    c.calibration_device.validate();
    c.network.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError("", e.what());
  }
  return c;
}

}  // namespace

ExperimentConfig parse_config(const std::string& source,
                              std::optional<std::uint64_t> seed_override) {
  try {
    return parse_impl(source, seed_override);
  } catch (const ConfigError& e) {
    if (e.path().empty() || e.path() == "/") throw;
    throw ConfigError(e.path(),
                      e.message() + " (line " + std::to_string(locate_line(source, e.path())) +
                          ")");
  }
}

ExperimentConfig load_config(const std::filesystem::path& path,
                             std::optional<std::uint64_t> seed_override) {
  std::string text;
  try {
    text = io::read_text(path);
  } catch (const DataError&) {
    throw ConfigError("", "cannot read the config file", path.string());
  }
  try {
    return parse_config(text, seed_override);
  } catch (const ConfigError& e) {
    throw ConfigError(e.path(), e.message(), path.string());
  }
}

}  // namespace oamtomo::cli
