#include "cli/commands.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include "cli/config.hpp"
#include "oamtomo/angles.hpp"
#include "oamtomo/error.hpp"
#include "oamtomo/io.hpp"
#include "oamtomo/modes.hpp"
#include "oamtomo/phasecam.hpp"
#include "oamtomo/qudit.hpp"
#include "oamtomo/seed.hpp"
#include "oamtomo/tomo.hpp"

namespace oamtomo::cli {

namespace fs = std::filesystem;
using io::Json;

namespace {

constexpr std::uint64_t kCalibrationStream = 0;

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format = "text";
};

// Collects summary rows and prints them in the requested format.
class Summary {
 public:
  Summary(std::ostream& out, std::string format) : out_(out), format_(std::move(format)) {}

  void add(const std::string& text, Json row) {
    if (format_ == "text") out_ << text << '\n';
    rows_.push_back(std::move(row));
  }

  void finish() {
    if (format_ == "json") {
      out_ << rows_.dump(2) << '\n';
    } else if (format_ == "csv") {
      std::vector<std::string> cols;
      for (const auto& r : rows_)
        for (const auto& [k, v] : r.items())
          if (std::find(cols.begin(), cols.end(), k) == cols.end()) cols.push_back(k);
      for (std::size_t i = 0; i < cols.size(); ++i) out_ << (i ? "," : "") << cols[i];
      out_ << '\n';
      for (const auto& r : rows_) {
        for (std::size_t i = 0; i < cols.size(); ++i) {
          if (i) out_ << ',';
          if (!r.contains(cols[i])) continue;
          const Json& v = r.at(cols[i]);
          out_ << (v.is_string() ? v.get<std::string>() : v.dump());
        }
        out_ << '\n';
      }
    }
  }

 private:
  std::ostream& out_;
  std::string format_;
  Json rows_ = Json::array();
};

std::string provenance_line(const io::Provenance& prov) {
  return "config_hash=" + prov.config_hash + " seed=" + std::to_string(prov.seed);
}

Json provenance_json(const io::Provenance& prov) {
  return {{"config_hash", prov.config_hash}, {"seed", prov.seed}};
}

void write_json(const fs::path& path, const Json& j) { io::write_text(path, j.dump(2) + "\n"); }

fs::path prepare_dir(const std::string& override_dir, const fs::path& fallback) {
  const fs::path dir = override_dir.empty() ? fallback : fs::path(override_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

std::string fixed(double v, int digits) { return io::format_fixed(v, digits); }

// Intensity image of an input state on a 128-point grid.
phasecam::PhaseFrame mode_image(const InputSpec& in) {
  const modes::BeamGeometry beam(330e-6, 852e-9);
  modes::GridSpec grid = modes::reference_grid(beam, 3);
  grid.n = 128;
  std::vector<std::pair<int, modes::Complex>> terms;
  if (in.qubit) {
    terms = {{+1, in.qubit->alpha()}, {-1, in.qubit->beta()}};
  } else {
    for (int i = 0; i < 4; ++i) terms.push_back({qudit::kModes[i], (*in.qudit)[i]});
  }
  std::vector<modes::Complex> sum(grid.n * grid.n);
  for (const auto& [l, c] : terms) {
    if (c == modes::Complex(0.0)) continue;
    const auto f = modes::lg_field(modes::ModeIndex(l, 0), beam, grid);
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += c * f.samples()[i];
  }
  return io::field_to_frame(
      modes::ComplexField(grid.n, grid.pitch(), grid.center_x, grid.center_y, std::move(sum)));
}

Json calibration_json(const tomo::CalibrationReport& rep, const ExperimentConfig& cfg,
                      const io::Provenance& prov) {
  Json probes = Json::array();
  for (const auto& p : rep.probes)
    probes.push_back({{"mode", std::string(1, p.mode)},
                      {"theta_deg", rad_to_deg(p.fit.theta)},
                      {"theta_theory_deg", rad_to_deg(p.theta_theory)},
                      {"deviation_deg", rad_to_deg(p.deviation)},
                      {"visibility", p.fit.visibility},
                      {"offset", p.fit.offset},
                      {"residual", p.fit.residual},
                      {"misaligned", p.misaligned}});
  return {{"device", cfg.calibration_device_name},
          {"probes", probes},
          {"mean_abs_deviation_deg", rad_to_deg(rep.mean_abs_deviation)},
          {"deviation_std_deg", rad_to_deg(rep.deviation_std)},
          {"cross_rotation_deg", rad_to_deg(rep.cross_rotation)},
          {"cross_residual_deg", rad_to_deg(rep.cross_residual)},
          {"mean_visibility", rep.mean_visibility},
          {"visibility_threshold", cfg.calibration.visibility_threshold},
          {"misaligned", rep.misaligned},
          {"provenance", provenance_json(prov)}};
}

struct ExperimentParts {
  bool calibration = false;
  bool qubits = false;
  bool qudits = false;
  bool images = false;
};

int run_experiment(const std::string& config_path, const Globals& g, ExperimentParts parts,
                   std::ostream& out) {
  const ExperimentConfig cfg = load_config(config_path, g.seed);
  const bool any_qudit = std::any_of(cfg.inputs.begin(), cfg.inputs.end(),
                                     [](const InputSpec& in) { return in.qudit.has_value(); });
  if (parts.qudits && !parts.qubits && !any_qudit)
    throw ConfigError("/inputs", "no 4-dimensional input state is listed");
  const fs::path dir = prepare_dir(g.out, cfg.output_dir);
  const io::Provenance prov{cfg.hash, cfg.seed};
  Summary summary(out, g.format);

  if (parts.calibration && cfg.calibration_enabled) {
    const auto rep = tomo::calibrate(cfg.calibration_device, cfg.detection,
                                     child_seed(cfg.seed, kCalibrationStream), cfg.calibration);
    write_json(dir / "calibration.json", calibration_json(rep, cfg, prov));
    summary.add("calibration: mean |deviation| " + fixed(rad_to_deg(rep.mean_abs_deviation), 2) +
                    " deg (spread " + fixed(rad_to_deg(rep.deviation_std), 2) +
                    " deg), visibility " + fixed(rep.mean_visibility, 3) +
                    (rep.misaligned ? ", MISALIGNED" : ""),
                {{"input", "calibration"},
                 {"mean_abs_deviation_deg", rad_to_deg(rep.mean_abs_deviation)},
                 {"deviation_std_deg", rad_to_deg(rep.deviation_std)},
                 {"visibility", rep.mean_visibility}});
  }

  const auto bounds = tomo::fidelity_bounds(
      tomo::ErrorBudget::of(cfg.device, cfg.tomography.calibration_offset));
  std::vector<apparatus::CountRecord> qubit_counts;
  std::vector<qudit::QuditCount> qudit_counts;
  std::optional<qudit::ProjectorSet> set;

  for (std::size_t i = 0; i < cfg.inputs.size(); ++i) {
    const InputSpec& in = cfg.inputs[i];
    const std::uint64_t seed = child_seed(cfg.seed, i + 1);
    if (in.qubit && parts.qubits) {
      const auto res = tomo::run_tomography(*in.qubit, cfg.schedule, cfg.device, cfg.detection,
                                            seed, cfg.tomography);
      for (auto rec : res.counts) {
        rec.configuration_id = in.name + "/" + rec.configuration_id;
        qubit_counts.push_back(rec);
      }
      const double bound = tomo::fidelity_bound_for(*in.qubit, bounds);
      Json j = io::density_to_json(res.rho, prov);
      j["input"] = in.name;
      j["fidelity"] = res.fidelity;
      j["fidelity_sigma"] = res.fidelity_sigma;
      j["fidelity_bound"] = bound;
      const auto& p = res.probabilities;
      j["probabilities"] = {{"R", p.p0}, {"L", p.p1}, {"H", p.pH},
                            {"V", p.pV}, {"D", p.pD}, {"A", p.pA}};
      write_json(dir / ("density_" + in.name + ".json"), j);
      summary.add(in.name + ": F = " + fixed(res.fidelity, 4) + " +- " +
                      fixed(res.fidelity_sigma, 4) + " (bound " + fixed(bound, 4) + ")",
                  {{"input", in.name},
                   {"fidelity", res.fidelity},
                   {"fidelity_sigma", res.fidelity_sigma},
                   {"fidelity_bound", bound}});
    }
    if (in.qudit && parts.qudits) {
      if (!set) set = qudit::ProjectorSet::standard(cfg.network);
      const auto counts = qudit::simulate(in.qudit->density(), *set, cfg.qudit_detection, seed);
      for (auto c : counts) {
        c.configuration_id = in.name + "/" + c.configuration_id;
        qudit_counts.push_back(c);
      }
      const auto rec = qudit::reconstruct_qudit(
          *set, qudit::expectation_estimates(counts, cfg.qudit_detection),
          cfg.tomography.physical_projection);
      const double f = qubit::fidelity(rec.rho, in.qudit->amplitudes());
      Json j = io::density_to_json(rec.rho, prov);
      j["input"] = in.name;
      j["network"] = cfg.network_name;
      j["fidelity"] = f;
      j["residual"] = rec.residual;
      j["condition_number"] = rec.condition_number;
      write_json(dir / ("density_" + in.name + ".json"), j);
      summary.add(in.name + ": F = " + fixed(f, 4) + " (dim 4, condition number " +
                      fixed(rec.condition_number, 2) + ")",
                  {{"input", in.name}, {"fidelity", f}, {"condition_number", rec.condition_number}});
    }
    if (parts.images && cfg.write_pgm && ((in.qubit && parts.qubits) || (in.qudit && parts.qudits)))
      io::write_pgm(dir / ("mode_" + in.name + ".pgm"), mode_image(in),
                    {provenance_line(prov), "input=" + in.name});
  }

  if (!qubit_counts.empty()) {
    std::ostringstream csv;
    csv << "# " << provenance_line(prov) << '\n';
    io::write_counts_csv(csv, qubit_counts, cfg.tomography.readout.bins);
    io::write_text(dir / "counts.csv", csv.str());
  }
  if (!qudit_counts.empty()) {
    std::ostringstream csv;
    csv << "# " << provenance_line(prov) << '\n';
    io::write_counts_csv(csv, qudit_counts);
    io::write_text(dir / "qudit_counts.csv", csv.str());
  }
  summary.finish();
  return kExitOk;
}

struct FrameOptions {
  int count = 360;
  double offset = 0.0;
  double offset_angle_deg = 0.0;
  double tilt = 0.0;
  double tilt_angle_deg = 0.0;
  double imbalance = 1.0;
  double peak = 200.0;
  double background = 0.0;
  bool shot_noise = false;
  int bit_depth = 8;
  int width = 330;
  double waist = 60.0;
};

int gen_frames(const FrameOptions& o, const Globals& g, std::ostream& out) {
  if (!g.seed) throw ConfigError("--seed", "is required for gen-frames");
  if (o.count < 1) throw ConfigError("--count", "must be positive");
  if (o.bit_depth != 8 && o.bit_depth != 16) throw ConfigError("--bit-depth", "must be 8 or 16");

  phasecam::FrameGeometry geom;
  geom.width = geom.height = o.width;
  geom.center_x = geom.center_y = o.width / 2.0;
  geom.waist_px = o.waist;
  geom.bit_depth = o.bit_depth;
  phasecam::Defects def;
  def.offset = o.offset;
  def.offset_angle = deg_to_rad(o.offset_angle_deg);
  def.tilt = o.tilt;
  def.tilt_angle = deg_to_rad(o.tilt_angle_deg);
  def.lobe_imbalance = o.imbalance;
  phasecam::Noise noise;
  noise.peak_counts = o.peak;
  noise.background = o.background;
  noise.shot_noise = o.shot_noise;

  const nlohmann::json options = {
      {"count", o.count},         {"offset", o.offset},     {"offset_angle_deg", o.offset_angle_deg},
      {"tilt", o.tilt},           {"tilt_angle_deg", o.tilt_angle_deg},
      {"imbalance", o.imbalance}, {"peak", o.peak},         {"background", o.background},
      {"shot_noise", o.shot_noise}, {"bit_depth", o.bit_depth}, {"width", o.width},
      {"waist", o.waist}};
  const io::Provenance prov{io::config_hash(options), *g.seed};

  std::optional<phasecam::FrameSynthesizer> synth;
  try {
    synth.emplace(geom, def, noise);
  } catch (const InvalidArgument& e) {
    throw ConfigError("", e.what());
  }
  const fs::path dir = prepare_dir(g.out, "frames");
  Rng phases(child_seed(*g.seed, 0));
  Json frames = Json::array();
  for (int i = 0; i < o.count; ++i) {
    const double phi = phases.uniform(0.0, kTwoPi);
    char name[32];
    std::snprintf(name, sizeof name, "frame_%04d", i);
    const auto frame = synth->render(phi, child_seed(*g.seed, static_cast<std::uint64_t>(i) + 1));
    io::write_pgm(dir / (std::string(name) + ".pgm"), frame,
                  {provenance_line(prov), "phi_true_deg=" + fixed(rad_to_deg(phi), 6)});
    frames.push_back({{"id", name}, {"phi_true_deg", rad_to_deg(phi)}});
  }
  Json truth = {{"geometry",
                 {{"width", geom.width},
                  {"height", geom.height},
                  {"center_x", geom.center_x},
                  {"center_y", geom.center_y},
                  {"waist_px", geom.waist_px},
                  {"bit_depth", geom.bit_depth}}},
                {"options", Json::parse(options.dump())},
                {"frames", frames},
                {"provenance", provenance_json(prov)}};
  write_json(dir / "truth.json", truth);
  out << "wrote " << o.count << " frames to " << dir.string() << '\n';
  return kExitOk;
}

phasecam::RingFit read_ring(const fs::path& path) {
  Json j;
  try {
    j = Json::parse(io::read_text(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("", std::string("ring fit is not valid JSON: ") + e.what(), path.string());
  } catch (const DataError&) {
    throw ConfigError("", "cannot read the ring fit", path.string());
  }
  phasecam::RingFit r;
  try {
    r.center_x = j.at("center_x").get<double>();
    r.center_y = j.at("center_y").get<double>();
    r.width = j.value("width", 0.0);
    r.radius_of_interest = j.at("radius_of_interest").get<double>();
    r.residual = j.value("residual", 0.0);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("", std::string("malformed ring fit: ") + e.what(), path.string());
  }
  if (!(r.radius_of_interest > 0.0))
    throw ConfigError("/radius_of_interest", "must be positive", path.string());
  return r;
}

struct AnalyzeOptions {
  std::string dir;
  std::string ring;
  bool fit = false;
  int bins = 120;
};

int analyze_frames(const AnalyzeOptions& o, const Globals& g, std::ostream& out) {
  if (o.ring.empty() && !o.fit)
    throw ConfigError("", "no ring fit given: pass --ring FILE or --fit");
  if (o.bins < 8 || o.bins % 8 != 0) throw ConfigError("--bins", "must be a multiple of 8");
  if (!fs::is_directory(o.dir)) throw ConfigError("", "frame directory not found: " + o.dir);

  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(o.dir))
    if (e.is_regular_file() && e.path().extension() == ".pgm") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ConfigError("", "no .pgm frames in " + o.dir);

  std::vector<phasecam::PhaseFrame> frames;
  for (const auto& f : files) frames.push_back(io::read_pgm(f));

  std::map<std::string, double> truth;
  const fs::path truth_path = fs::path(o.dir) / "truth.json";
  if (fs::exists(truth_path)) {
    const Json t = Json::parse(io::read_text(truth_path));
    for (const auto& f : t.at("frames")) truth[f.at("id")] = f.at("phi_true_deg").get<double>();
  }

  nlohmann::json options = {{"bins", o.bins}, {"fit", o.fit}, {"frames", files.size()}};
  phasecam::RingFit ring;
  if (o.fit) {
    ring = phasecam::fit_ring(frames);
  } else {
    ring = read_ring(o.ring);
    options["ring"] = {ring.center_x, ring.center_y, ring.radius_of_interest};
  }
  const fs::path dir = prepare_dir(g.out, "analysis");
  const io::Provenance prov{io::config_hash(options), g.seed.value_or(0)};
  if (o.fit)
    write_json(dir / "ringfit.json", {{"center_x", ring.center_x},
                                      {"center_y", ring.center_y},
                                      {"width", ring.width},
                                      {"radius_of_interest", ring.radius_of_interest},
                                      {"residual", ring.residual},
                                      {"provenance", provenance_json(prov)}});

  const phasecam::PhaseAnalyzer analyzer(ring, frames[0].width(), frames[0].height(), o.bins);
  std::ostringstream csv;
  csv << "# " << provenance_line(prov) << '\n'
      << "frame_id,alpha_d_deg,phi_deg,min_bin_index,residual,phi_true_deg,error_deg\n";
  double max_error = 0.0;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const std::string id = files[i].stem().string();
    const auto est = analyzer.analyze(frames[i]);
    csv << id << ',' << fixed(rad_to_deg(est.alpha_d), 3) << ',' << fixed(rad_to_deg(est.phi), 3)
        << ',' << est.min_bin << ',' << fixed(est.residual, 6) << ',';
    const auto it = truth.find(id);
    if (it != truth.end()) {
      const double err = rad_to_deg(wrap_signed(est.phi - deg_to_rad(it->second)));
      max_error = std::max(max_error, std::abs(err));
      csv << fixed(it->second, 3) << ',' << fixed(err, 3);
    } else {
      csv << ',';
    }
    csv << '\n';
  }
  io::write_text(dir / "phases.csv", csv.str());
  out << "analyzed " << frames.size() << " frames";
  if (!truth.empty()) out << ", max |error| " << fixed(max_error, 3) << " deg";
  out << '\n';
  return kExitOk;
}

struct BudgetOptions {
  double dl = 1.0;
  double dnu = 1.0;
  std::optional<double> dl_fiber;
  std::string preset;
};

int budget(const BudgetOptions& o, const Globals& g, std::ostream& out) {
  std::vector<qudit::ExtensionBudget> rows;
  if (o.preset.empty()) {
    rows = qudit::extension_budgets();
  } else {
    try {
      rows = {qudit::extension_budget(o.preset)};
    } catch (const InvalidArgument& e) {
      throw ConfigError("--preset", e.what());
    }
  }
  const auto stages = tomo::device_efficiency_stages();
  const double total = tomo::efficiency_budget(stages);
  const double dl_fiber = o.dl_fiber.value_or(o.dl);
  const double geometric = apparatus::phase_sensitivity_geometric(o.dl, o.dnu);
  const double dispersion = apparatus::phase_sensitivity_dispersion(dl_fiber, o.dnu);

  if (g.format == "json") {
    Json j;
    Json st = Json::array();
    for (const auto& s : stages) st.push_back({{"stage", s.name}, {"efficiency", s.value}});
    j["efficiency"] = {{"stages", st}, {"total", total}};
    j["phase_sensitivity"] = {{"delta_length_cm", o.dl},
                              {"delta_fiber_cm", dl_fiber},
                              {"delta_nu_ghz", o.dnu},
                              {"geometric_deg", geometric},
                              {"dispersion_deg", dispersion}};
    Json ext = Json::array();
    for (const auto& r : rows)
      ext.push_back({{"device", r.device},
                     {"dimension", r.dimension},
                     {"loss", r.loss},
                     {"crosstalk_suppression_db", r.crosstalk_db}});
    j["extensions"] = ext;
    out << j.dump(2) << '\n';
  } else if (g.format == "csv") {
    out << "section,item,value\n";
    for (const auto& s : stages) out << "efficiency," << s.name << ',' << s.value << '\n';
    out << "efficiency,total," << fixed(total, 6) << '\n';
    out << "phase,geometric_deg," << fixed(geometric, 6) << '\n';
    out << "phase,dispersion_deg," << fixed(dispersion, 6) << '\n';
    for (const auto& r : rows) {
      out << "extension," << r.device << "_dimension," << r.dimension << '\n';
      out << "extension," << r.device << "_loss," << r.loss << '\n';
      out << "extension," << r.device << "_crosstalk_db," << r.crosstalk_db << '\n';
    }
  } else {
    out << "detection efficiency (detectors excluded)\n";
    for (const auto& s : stages) out << "  " << s.name << ": " << fixed(s.value, 2) << '\n';
    out << "  total: " << fixed(100.0 * total, 1) << "%\n";
    out << "  mode preparation overlap: HG 64%, LG 78%\n";
    out << "phase sensitivity (dL = " << fixed(o.dl, 3) << " cm, dnu = " << fixed(o.dnu, 3)
        << " GHz, dLfib = " << fixed(dl_fiber, 3) << " cm)\n";
    out << "  geometric: " << fixed(geometric, 3) << " deg (12 deg/(cm GHz))\n";
    out << "  dispersion: " << fixed(dispersion, 3) << " deg (-0.1 deg/(cm GHz))\n";
    out << "extension budgets\n";
    for (const auto& r : rows)
      out << "  " << r.device << ": dimension " << r.dimension << ", losses "
          << fixed(100.0 * r.loss, 0) << "%, crosstalk suppression >" << fixed(r.crosstalk_db, 0)
          << " dB\n";
  }
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Simulation and analysis tools for OAM qubit and qudit state tomography",
               "oamtomo"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Master seed (overrides the config)");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--format", g.format, "Summary format")
      ->check(CLI::IsMember({"text", "json", "csv"}));

  std::string config_path;
  auto* simulate = app.add_subcommand("simulate", "Calibration, tomography, qudit runs and images");
  auto* tomograph = app.add_subcommand("tomograph", "Qubit tomography of the configured inputs");
  auto* calibrate = app.add_subcommand("calibrate", "Fringe calibration with the probe modes");
  auto* qudit_cmd = app.add_subcommand("qudit", "Four-mode reconstruction of qudit inputs");
  for (auto* sc : {simulate, tomograph, calibrate, qudit_cmd})
    sc->add_option("config", config_path, "Experiment config (JSON)")->required();

  AnalyzeOptions ao;
  auto* analyze = app.add_subcommand("analyze-frames", "Dark-axis phase of stored PGM frames");
  analyze->add_option("dir", ao.dir, "Directory of PGM frames")->required();
  analyze->add_option("--ring", ao.ring, "Ring fit JSON");
  analyze->add_flag("--fit", ao.fit, "Fit the ring on the stack average first");
  analyze->add_option("--bins", ao.bins, "Angular bins (multiple of 8)");

  FrameOptions fo;
  auto* gen = app.add_subcommand("gen-frames", "Synthetic reference-camera frames");
  gen->add_option("--count", fo.count, "Number of frames");
  gen->add_option("--offset", fo.offset, "Lateral offset of LG-1, fraction of the waist");
  gen->add_option("--offset-angle-deg", fo.offset_angle_deg, "Direction of the offset");
  gen->add_option("--tilt", fo.tilt, "Angle between the beams, rad");
  gen->add_option("--tilt-angle-deg", fo.tilt_angle_deg, "Azimuth of the tilt");
  gen->add_option("--imbalance", fo.imbalance, "Lobe intensity factor");
  gen->add_option("--peak", fo.peak, "Ideal lobe maximum in gray levels");
  gen->add_option("--background", fo.background, "Uniform background, fraction of peak");
  gen->add_flag("--shot-noise", fo.shot_noise, "Add Poisson noise");
  gen->add_option("--bit-depth", fo.bit_depth, "8 or 16");
  gen->add_option("--width", fo.width, "Square frame size in pixels");
  gen->add_option("--waist", fo.waist, "Beam waist in pixels");

  BudgetOptions bo;
  double dl_fiber = 0.0;
  auto* budget_cmd = app.add_subcommand("budget", "Efficiency, phase sensitivity, extensions");
  budget_cmd->add_option("--dL", bo.dl, "Arm length difference, cm");
  budget_cmd->add_option("--dnu", bo.dnu, "Frequency difference, GHz");
  auto* dlf = budget_cmd->add_option("--dLfib", dl_fiber, "Fiber length difference, cm");
  budget_cmd->add_option("--preset", bo.preset, "Current, 3BS or OAM-sorter");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (simulate->parsed()) return run_experiment(config_path, g, {true, true, true, true}, out);
    if (tomograph->parsed()) return run_experiment(config_path, g, {false, true, false, false}, out);
    if (calibrate->parsed()) return run_experiment(config_path, g, {true, false, false, false}, out);
    if (qudit_cmd->parsed()) return run_experiment(config_path, g, {false, false, true, false}, out);
    if (analyze->parsed()) return analyze_frames(ao, g, out);
    if (gen->parsed()) return gen_frames(fo, g, out);
    if (budget_cmd->parsed()) {
      if (dlf->count()) bo.dl_fiber = dl_fiber;
      return budget(bo, g, out);
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitConfig;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace oamtomo::cli
