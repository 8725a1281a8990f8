#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "oamtomo/apparatus.hpp"
#include "oamtomo/qubit.hpp"
#include "oamtomo/qudit.hpp"
#include "oamtomo/tomo.hpp"

namespace oamtomo::cli {

/// Rejected configuration; `path` is the JSON pointer of the offending value
/// (empty for syntax errors, which carry line and column in the message).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& path, const std::string& message, const std::string& file = {})
      : std::runtime_error((file.empty() ? "" : file + ": ") + (path.empty() ? "" : path + ": ") +
                           message),
        path_(path),
        message_(message) {}

  const std::string& path() const { return path_; }
  const std::string& message() const { return message_; }

 private:
  std::string path_;
  std::string message_;
};

struct InputSpec {
  std::string name;
  std::optional<qubit::PureQubit> qubit;
  std::optional<qudit::QuditState> qudit;
};

struct ExperimentConfig {
  nlohmann::json raw;
  std::string hash;
  std::uint64_t seed = 0;

  std::string device_name;
  apparatus::InterferometerConfig device;
  apparatus::DetectionConfig detection;
  std::vector<InputSpec> inputs;
  tomo::MeasurementSchedule schedule;
  tomo::TomographyOptions tomography;

  bool calibration_enabled = true;
  std::string calibration_device_name;
  apparatus::InterferometerConfig calibration_device;
  tomo::CalibrationOptions calibration;

  std::string network_name;
  qudit::NetworkConfig network;
  apparatus::DetectionConfig qudit_detection;

  std::filesystem::path output_dir = "out";
  bool write_pgm = true;
};

/// Parses and validates a JSON text. `seed_override` replaces the "seed"
/// member; one of the two is required.
ExperimentConfig parse_config(const std::string& text,
                              std::optional<std::uint64_t> seed_override = std::nullopt);
ExperimentConfig load_config(const std::filesystem::path& path,
                             std::optional<std::uint64_t> seed_override = std::nullopt);

/// 1-based line and column of a byte offset.
std::pair<int, int> line_column(const std::string& text, std::size_t offset);

}  // namespace oamtomo::cli
