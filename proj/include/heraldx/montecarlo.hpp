#pragma once

// Seeded photon-stream generation (SPDC pairs routed through the splitter,
// stray background) and the detector front end that turns photons into
// analog/logic pulses. Runs are cut into time slices; every slice draws from
// its own substream derived from (seed, slice, stream), so slices can be
// generated in any order or in parallel and still merge bit-identically.

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "heraldx/spdc.hpp"
#include "heraldx/splitter.hpp"
#include "heraldx/xoptics.hpp"

namespace heraldx::mc {

enum class Detector : std::uint8_t { Trig = 0, Trans = 1, Ref = 2 };
inline constexpr std::array<Detector, 3> kDetectors{Detector::Trig, Detector::Trans, Detector::Ref};
inline constexpr std::size_t index_of(Detector d) { return static_cast<std::size_t>(d); }
std::string_view to_string(Detector d);
Detector parse_detector(std::string_view s);

enum class Origin : std::uint8_t { Pair = 0, Stray = 1 };
std::string_view to_string(Origin o);
Origin parse_origin(std::string_view s);

struct PhotonState {
  double time_ns = 0.0;
  double true_energy_kev = 0.0;
  double measured_energy_kev = 0.0;
  Detector detector = Detector::Trig;
  Origin origin = Origin::Pair;
};

struct PulseRecord {
  double start_ns = 0.0;
  double energy_kev = 0.0;  // measured; the analog height is proportional to it
  double true_energy_kev = 0.0;
  Detector detector = Detector::Trig;
  Origin origin = Origin::Pair;
  double analog_width_ns = 200.0;
  double logic_width_ns = 0.0;  // zero: outside the SCA window, no logic pulse

  bool has_logic() const { return logic_width_ns > 0.0; }
  double logic_end() const { return start_ns + logic_width_ns; }
  double peak_ns() const { return start_ns + 0.5 * analog_width_ns; }
};

using Rng = std::mt19937_64;

/// Independent generator for (seed, slice, stream).
Rng substream(std::uint64_t seed, std::uint64_t slice, std::uint32_t stream);

struct TimeSpan {
  double begin_ns = 0.0;
  double end_ns = 0.0;
};

/// Mixture of flat bands and (zero-width) lines, keV.
struct StrayComponent {
  double lo_kev = 0.0;
  double hi_kev = 0.0;  // == lo_kev for a line
  double weight = 0.0;
};

class StraySpectrum {
 public:
  explicit StraySpectrum(std::vector<StrayComponent> components);
  /// Flat 7–17 keV continuum (weight 0.9) plus a 21 keV elastic line (0.1).
  static StraySpectrum default_profile();

  double sample(Rng& rng) const;
  const std::vector<StrayComponent>& components() const { return components_; }

 private:
  std::vector<StrayComponent> components_;
  std::vector<double> cumulative_;
};

struct SourceConfig {
  double pair_rate = 0.0;                  // pairs/s leaving the SPDC crystal
  std::array<double, 3> stray_rate{};      // photons/s per detector
  StraySpectrum stray_spectrum = StraySpectrum::default_profile();
  double duration_s = 1.0;
  std::uint64_t seed = 0;
  double air_path_cm = 10.0;               // applied to both pair photons
  double slice_s = 10.0;

  void validate() const;
};

struct DetectorSpec {
  double efficiency = 1.0;
  double fwhm_ev = 300.0;       // at reference_kev, scaled ∝ √E
  double reference_kev = 10.5;
  double analog_width_ns = 200.0;
  double logic_width_ns = 1000.0;
  double sca_lo_kev = 7.0;
  double sca_hi_kev = 17.0;

  void validate() const;
  double sigma_kev(double energy_kev) const;
};

using DetectorSet = std::array<DetectorSpec, 3>;

/// Inverse-CDF sampler over the flattened |amp|²·cell-volume grid.
class PairSampler {
 public:
  explicit PairSampler(const spdc::JointAmplitude& amp);

  struct Draw {
    double energy_kev;
    double theta_x;
    double theta_y;
  };
  Draw operator()(Rng& rng) const;

  /// Probability mass of energy row ie.
  double energy_mass(int ie) const;

 private:
  const spdc::JointAmplitude* amp_;
  std::vector<double> cdf_;
};

struct PairOptics {
  splitter::SplitterSpec splitter;
  xoptics::AttenuationTable splitter_material;
  std::optional<xoptics::AttenuationTable> air;
  double pump_energy_kev = 21.0;
};

/// Correlated pair photons in `span`: creation times Poisson at `pair_rate`
/// (pairs/s), heralded state drawn ∝ |amp|², heralded photon routed to Ref
/// (R²), Trans (T) or absorbed; the trigger always heads for Trig. Both
/// photons share the creation time. Air losses remove photons individually.
std::vector<PhotonState> generate_pairs(const PairSampler& sampler, const PairOptics& optics,
                                        double pair_rate, double air_path_cm, TimeSpan span, Rng& rng);

/// Independent Poisson stray photons per detector in `span`.
std::vector<PhotonState> generate_stray(const SourceConfig& source, TimeSpan span, Rng& rng);

/// Efficiency thinning, Gaussian energy smearing and pulse emission. Output is
/// sorted by (start, detector).
std::vector<PulseRecord> detect(std::span<const PhotonState> photons, const DetectorSet& detectors, Rng& rng);

/// Stable merge order for pulse streams.
void sort_pulses(std::vector<PulseRecord>& pulses);

/// Produces the pulses of one time slice. Thread-safe for concurrent `slice`.
class SliceSource {
 public:
  SliceSource(SourceConfig source, DetectorSet detectors, const PairSampler* sampler,
              const PairOptics* optics);

  std::size_t slice_count() const { return slices_; }
  TimeSpan slice_span(std::size_t k) const;
  std::vector<PulseRecord> slice(std::size_t k) const;
  std::vector<PhotonState> slice_photons(std::size_t k) const;
  /// Slices [first, first + count) in order.
  std::vector<std::vector<PulseRecord>> batch(std::size_t first, std::size_t count,
                                              spdc::Backend backend) const;

  const SourceConfig& source() const { return source_; }

 private:
  SourceConfig source_;
  DetectorSet detectors_;
  const PairSampler* sampler_;
  const PairOptics* optics_;
  std::size_t slices_;
};

}  // namespace heraldx::mc
