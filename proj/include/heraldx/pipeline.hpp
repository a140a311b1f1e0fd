#pragma once

// End-to-end runs behind the command-line verbs: model curves, Monte Carlo
// event generation through the DAQ, and event-file analysis.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "heraldx/config.hpp"
#include "heraldx/daq.hpp"
#include "heraldx/spdc.hpp"
#include "heraldx/stats.hpp"

namespace heraldx::pipeline {

struct ModelResult {
  double pm_heralded_deg = 0.0;  // window centre
  double pm_trigger_deg = 0.0;
  double reference_rate = 0.0;  // no splitter, relative units
  double reflect_rate = 0.0;
  double transmit_rate = 0.0;
  double r_reflect = 0.0;
  double r_transmit = 0.0;
  double wide_reflect_rate = 0.0;  // b scaled by model.width_scale
  double width_gain = 0.0;
  std::vector<spdc::SweepPoint> sweep;
  std::vector<double> energies;
  std::vector<double> reference_profile;
  std::vector<double> reflect_profile;
  std::vector<double> transmit_profile;
  double reflect_fwhm_kev = 0.0;
  double transmit_fwhm_kev = 0.0;
  std::vector<double> transmit_minima_kev;
};

/// Shared physics objects for one configuration.
class Setup {
 public:
  explicit Setup(const config::RunConfig& cfg, spdc::Backend backend = spdc::Backend::Parallel);

  const config::RunConfig& config() const { return cfg_; }
  const spdc::JointAmplitude& amplitude() const { return amp_; }
  const xoptics::AttenuationTable& splitter_material() const { return splitter_material_; }
  const xoptics::AttenuationTable& air() const { return air_; }
  /// Air transmittance over the configured path for both pair photons.
  spdc::LossFn pair_loss() const;

  /// Expected heralded Ref detections per generated pair.
  double ref_yield_per_pair() const;
  /// pair_rate after calibration (or the configured value when calibration is off).
  double pair_rate() const;

 private:
  config::RunConfig cfg_;
  xoptics::AttenuationTable splitter_material_;
  xoptics::AttenuationTable air_;
  spdc::JointAmplitude amp_;
};

ModelResult run_model(const Setup& setup, spdc::Backend backend = spdc::Backend::Parallel);
std::vector<spdc::SweepPoint> run_sweep(const Setup& setup, double width_scale,
                                        spdc::Backend backend = spdc::Backend::Parallel);
void write_model(const ModelResult& m, const std::filesystem::path& dir);
void write_sweep(const std::vector<spdc::SweepPoint>& base, const std::vector<spdc::SweepPoint>& wide,
                 const std::filesystem::path& path);

struct SimulationResult {
  std::vector<daq::EventRecord> events;
  std::uint64_t pulses = 0;
  std::uint64_t triggers = 0;
  std::uint64_t dropped = 0;
  double pair_rate = 0.0;
  double live_s = 0.0;
};

struct SimulationOptions {
  spdc::Backend backend = spdc::Backend::Parallel;
  std::optional<std::filesystem::path> out_dir;  // events.csv, run_metadata.txt, run_config.ini
  std::size_t slices_per_batch = 16;
};

/// Seed must be set in the config.
SimulationResult simulate(const Setup& setup, const SimulationOptions& opts = {});

struct AnalysisResult {
  stats::Histogram trans_spectrum{7.0, 17.0, 0.5};
  stats::Histogram ref_spectrum{7.0, 17.0, 0.5};
  std::vector<stats::SigmaPoint> sigma;
  std::vector<std::pair<stats::Selection, stats::CoincCounts>> counts;
  std::vector<std::pair<stats::Selection, stats::PortHistogram>> port_histograms;
  std::uint64_t heralded_trans = 0;
  std::uint64_t heralded_ref = 0;
  std::optional<stats::PortRates> rates;
};

/// Re-applies the configured energy selection to `events` before analysing.
AnalysisResult analyze(std::vector<daq::EventRecord>& events, const config::RunConfig& cfg,
                       std::optional<double> live_s);
void write_analysis(const AnalysisResult& a, const std::filesystem::path& dir);

std::string alpha_report(const std::vector<std::pair<std::string, stats::CoincCounts>>& rows);

/// live_s recorded in run_metadata.txt next to an events file, if present.
std::optional<double> read_live_time(const std::filesystem::path& metadata);

}  // namespace heraldx::pipeline
