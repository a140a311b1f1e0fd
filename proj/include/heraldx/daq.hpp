#pragma once

// Coincidence electronics: Trig AND (Trans OR Ref) logic-pulse overlap
// triggering, rate-capped digitizer, software time window on analog peaks and
// offline energy post-selection.

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "heraldx/montecarlo.hpp"

namespace heraldx::daq {

using mc::Detector;
using mc::Origin;
using mc::PulseRecord;

struct EnergyWindow {
  double lo_kev = 7.0;
  double hi_kev = 17.0;
  bool contains(double e) const { return e >= lo_kev && e <= hi_kev; }
};

enum class SumPolicy {
  AnyPair,     // an event passes if any Trig/output pairing passes
  AllOutputs,  // every output detector holding accepted photons needs a passing pairing
};

struct DaqConfig {
  double half_window_ns = 800.0;
  double max_rate = 200.0;  // triggers per bucket
  double bucket_s = 1.0;
  std::array<EnergyWindow, 3> acceptance{};
  double sum_window_kev = 1.0;  // full width about the pump energy
  double pump_energy_kev = 21.0;
  SumPolicy sum_policy = SumPolicy::AnyPair;

  void validate() const;
  bool sum_ok(double total_kev) const;
};

struct Trigger {
  double time_ns = 0.0;
  Detector partner = Detector::Trans;  // output detector whose logic opened the gate
};

struct TriggerScan {
  std::vector<Trigger> triggers;
  std::size_t dropped = 0;
};

/// Batch trigger finder over one time-sorted pulse stream.
TriggerScan find_triggers(std::span<const PulseRecord> pulses, const DaqConfig& cfg);

struct RegisteredPhoton {
  double energy_kev = 0.0;
  double offset_ns = 0.0;  // analog peak minus trigger time
  Detector detector = Detector::Trig;
  Origin origin = Origin::Pair;
  bool heralded = false;  // member of a passing Trig/output energy pairing
};

struct EventRecord {
  double trigger_time_ns = 0.0;
  Detector partner = Detector::Trans;
  std::vector<RegisteredPhoton> photons;
  bool passes_acceptance = false;
  bool passes_sum = false;

  std::size_t count(Detector d) const;
};

/// Registers every pulse whose analog peak lies within ±half_window of the
/// trigger. `max_analog_ns` bounds the analog widths in `pulses` and only
/// narrows the search.
EventRecord software_filter(const Trigger& trigger, std::span<const PulseRecord> pulses, const DaqConfig& cfg,
                            double max_analog_ns);

/// Sets passes_acceptance, passes_sum and the per-photon heralded marks.
void energy_select(EventRecord& event, const DaqConfig& cfg);

struct Partition {
  std::vector<std::size_t> acceptance;  // indices into the event list
  std::vector<std::size_t> heralded;
};

Partition energy_select(std::vector<EventRecord>& events, const DaqConfig& cfg);

/// Streaming form of find_triggers + software_filter + energy_select. Pulses
/// arrive in time-sorted chunks; `complete_until` promises that no later
/// chunk holds a pulse starting before it.
class CoincidenceUnit {
 public:
  explicit CoincidenceUnit(DaqConfig cfg);

  void push(std::span<const PulseRecord> chunk, double complete_until_ns);
  void finish();

  /// Moves out the events committed so far.
  std::vector<EventRecord> take_events();

  std::size_t triggers() const { return triggers_; }
  std::size_t dropped() const { return dropped_; }
  std::size_t buffered() const { return buffer_.size(); }

 private:
  void process(double complete_until_ns);
  bool admit(double time_ns);

  DaqConfig cfg_;
  std::vector<PulseRecord> buffer_;
  std::size_t scan_ = 0;  // first buffer index not yet folded into a committed episode
  double max_logic_ = 0.0;
  double max_analog_ = 0.0;
  double last_start_ = -1.0e300;
  std::int64_t bucket_ = std::numeric_limits<std::int64_t>::min();
  double bucket_count_ = 0.0;
  std::size_t triggers_ = 0;
  std::size_t dropped_ = 0;
  std::vector<EventRecord> events_;
};

/// Runs a whole pulse stream through a CoincidenceUnit.
struct DaqResult {
  std::vector<EventRecord> events;
  std::size_t triggers = 0;
  std::size_t dropped = 0;
};
DaqResult run_daq(std::span<const PulseRecord> pulses, const DaqConfig& cfg);

}  // namespace heraldx::daq
