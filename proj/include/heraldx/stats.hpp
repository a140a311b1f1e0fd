#pragma once

// Counting-experiment estimators: coincidence counts and the anticorrelation
// parameter α, the normalised count-difference variance σ, energy histograms,
// and count rates / ratios with Poisson errors.

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "heraldx/daq.hpp"

namespace heraldx::stats {

using daq::EventRecord;
using mc::Detector;

/// 84.1% Poisson upper limit on a zero observation, in counts.
inline constexpr double kZeroCountUpper = 1.841;

class EmptyEnsemble : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CoincCounts {
  std::uint64_t n_trig = 0;      // Trig and at least one output
  std::uint64_t n_trig_t = 0;    // Trig and Trans
  std::uint64_t n_trig_r = 0;    // Trig and Ref
  std::uint64_t n_trig_t_r = 0;  // Trig, Trans and Ref

  void validate() const;
  CoincCounts& operator+=(const CoincCounts& o);
  bool operator==(const CoincCounts&) const = default;
};

struct AlphaResult {
  bool defined = false;    // false when N_Trig-T or N_Trig-R is zero
  double alpha = 0.0;
  double error = 0.0;
  bool one_sided = false;  // N_Trig-T-R = 0: error is an upper bound
};

AlphaResult alpha(const CoincCounts& c);

enum class Selection {
  Heralded,    // photons in a passing energy-sum pairing
  Acceptance,  // photons inside the per-detector energy acceptance
  Open,        // every registered photon
};
std::string_view to_string(Selection s);

/// Registered photons of `event` at detector `d` that the selection admits.
std::size_t selected_count(const EventRecord& event, Detector d, Selection s, const daq::DaqConfig& cfg);

CoincCounts coinc_counts(std::span<const EventRecord> events, Selection s, const daq::DaqConfig& cfg);

/// Per-event photon multiplicity at each output, over events with at least
/// one selected Trig photon. Index k >= 1 holds the events with k photons at
/// that output; index 0 holds, in both vectors, the events where only Trig
/// has selected photons.
struct PortHistogram {
  std::vector<std::uint64_t> trans{0};
  std::vector<std::uint64_t> ref{0};
  std::uint64_t both = 0;  // events with photons at both outputs

  std::uint64_t trig_only() const { return trans.front(); }
  std::uint64_t events() const;
  bool operator==(const PortHistogram&) const = default;
};

PortHistogram port_histogram(std::span<const EventRecord> events, Selection s, const daq::DaqConfig& cfg);

enum class EnergyMode {
  SumWindow,  // only photons taking part in a pump-energy sum are counted
  Open,
};
std::string_view to_string(EnergyMode m);

/// Exact integer accumulator for Var(N_t − N_h) / Mean(N_t + N_h).
struct SigmaAccumulator {
  std::uint64_t n = 0;
  std::int64_t sum_diff = 0;
  std::uint64_t sum_diff_sq = 0;
  std::uint64_t sum_total = 0;

  void add(std::uint64_t n_t, std::uint64_t n_h);
  SigmaAccumulator& operator+=(const SigmaAccumulator& o);
  bool operator==(const SigmaAccumulator&) const = default;
  /// Throws EmptyEnsemble below two samples.
  double sigma() const;
};

struct SigmaPoint {
  double window_ns = 0.0;
  EnergyMode mode = EnergyMode::SumWindow;
  Detector output = Detector::Trans;
  double sigma = 0.0;
  double error = 0.0;  // batch-means standard error
  std::uint64_t samples = 0;
};

/// σ over the ensemble of trigger events: N_t = Trig photons, N_h = photons at
/// `output`, both within ±window_ns of the trigger. In SumWindow mode a photon
/// counts only if its energy, alone or added to a windowed photon on the other
/// side, lies in the pump-energy window. Events where both are zero are skipped.
SigmaPoint sigma(std::span<const EventRecord> events, double window_ns, EnergyMode mode, Detector output,
                 const daq::DaqConfig& cfg, std::size_t batches = 20);

std::vector<SigmaPoint> sigma_curve(std::span<const EventRecord> events, std::span<const double> windows_ns,
                                    EnergyMode mode, Detector output, const daq::DaqConfig& cfg);

/// Left-closed uniform bins on [lo, hi) with explicit under/overflow.
class Histogram {
 public:
  Histogram(double lo, double hi, double width);

  void fill(double x);
  std::size_t bins() const { return counts_.size(); }
  double lo() const { return lo_; }
  double width() const { return width_; }
  double bin_lo(std::size_t i) const { return lo_ + static_cast<double>(i) * width_; }
  double bin_center(std::size_t i) const { return bin_lo(i) + 0.5 * width_; }
  const std::vector<std::uint64_t>& counts() const { return counts_; }
  std::uint64_t underflow() const { return underflow_; }
  std::uint64_t overflow() const { return overflow_; }
  std::uint64_t total() const;
  void set(std::vector<std::uint64_t> counts, std::uint64_t underflow, std::uint64_t overflow);

 private:
  double lo_;
  double width_;
  std::vector<std::uint64_t> counts_;
  std::uint64_t underflow_ = 0;
  std::uint64_t overflow_ = 0;
};

/// Energies of heralded photons at `d`.
Histogram spectra(std::span<const EventRecord> events, Detector d, double bin_kev, double lo_kev = 7.0,
                  double hi_kev = 17.0);

/// Full width at half maximum of a sampled curve around its global maximum,
/// with linear interpolation of the half-maximum crossings. Zero if flat.
double fwhm(std::span<const double> x, std::span<const double> y);
double fwhm(const Histogram& h);

/// Local minima strictly below both neighbours, returned as x positions.
std::vector<double> local_minima(std::span<const double> x, std::span<const double> y);

struct Measured {
  double value = 0.0;
  double error = 0.0;
  bool one_sided = false;
};

Measured rate(std::uint64_t count, double live_s);
Measured ratio(std::uint64_t count, double live_s, Measured baseline);

struct PortRates {
  Measured n_r, n_t, r_r, r_t;
};

PortRates rates_and_ratios(std::uint64_t ref_count, std::uint64_t trans_count, double live_s, Measured baseline);

}  // namespace heraldx::stats
