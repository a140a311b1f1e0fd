#pragma once

// Run configuration: one INI-style file with sections, every key registered
// and typed; unknown sections or keys are errors.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "heraldx/daq.hpp"
#include "heraldx/montecarlo.hpp"
#include "heraldx/spdc.hpp"
#include "heraldx/splitter.hpp"

namespace heraldx::config {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ModelConfig {
  spdc::GridSpec grid;
  double sweep_lo_deg = 5.0;
  double sweep_hi_deg = 45.0;
  int sweep_points = 81;
  double width_scale = 100.0;  // b multiplier for the wide-acceptance comparison
};

struct AnalysisConfig {
  double bin_kev = 0.5;
  std::vector<double> sigma_windows_ns{100, 200, 300, 400, 500, 600, 700, 800};
  double baseline_rate = 0.0583;   // heralded rate without the splitter, counts/s
  double baseline_error = 0.0099;
};

struct RunConfig {
  spdc::SpdcConfig spdc;
  splitter::SplitterSpec splitter;
  std::string splitter_material = "graphite";
  std::string air_material = "air";
  mc::SourceConfig source;
  double calibrate_ref_rate = 0.0093;  // target heralded Ref rate; 0 keeps source.pair_rate
  bool write_photons = false;
  mc::DetectorSet detectors{};
  daq::DaqConfig daq;
  ModelConfig model;
  AnalysisConfig analysis;
  std::optional<std::uint64_t> seed;
  std::string output_dir = "out";

  /// Component invariants; throws ConfigError.
  void validate() const;
};

RunConfig parse(std::istream& in);
RunConfig load(const std::filesystem::path& path);

/// Canonical INI text covering every registered key; parse(dump(c)) == c.
std::string dump(const RunConfig& c);

/// "section.key" names of every accepted key, in canonical order.
std::vector<std::string> known_keys();

}  // namespace heraldx::config
