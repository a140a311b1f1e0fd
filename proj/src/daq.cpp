#include "heraldx/daq.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>

namespace heraldx::daq {

using xoptics::DomainError;

void DaqConfig::validate() const {
  if (!(half_window_ns > 0.0)) throw DomainError("software half-window must be positive");
  if (!(max_rate > 0.0)) throw DomainError("digitizer rate cap must be positive");
  if (!(bucket_s > 0.0)) throw DomainError("digitizer bucket must be positive");
  for (const auto& w : acceptance)
    if (!(w.lo_kev < w.hi_kev)) throw DomainError("energy acceptance needs lo < hi");
  if (!(sum_window_kev > 0.0)) throw DomainError("energy-sum window must be positive");
  if (!(pump_energy_kev > 0.0)) throw DomainError("pump energy must be positive");
}

bool DaqConfig::sum_ok(double total_kev) const {
  return std::abs(total_kev - pump_energy_kev) <= 0.5 * sum_window_kev;
}

std::size_t EventRecord::count(Detector d) const {
  return static_cast<std::size_t>(
      std::count_if(photons.begin(), photons.end(), [d](const RegisteredPhoton& p) { return p.detector == d; }));
}

namespace {

std::size_t first_start_at_or_after(std::span<const PulseRecord> pulses, double t) {
  auto it = std::lower_bound(pulses.begin(), pulses.end(), t,
                             [](const PulseRecord& p, double v) { return p.start_ns < v; });
  return static_cast<std::size_t>(it - pulses.begin());
}

// Earliest point inside the Trig episode [a, b) covered by an output logic pulse.
std::optional<Trigger> episode_overlap(std::span<const PulseRecord> pulses, std::size_t from, double a, double b) {
  std::optional<Trigger> best;
  for (std::size_t i = from; i < pulses.size() && pulses[i].start_ns < b; ++i) {
    const auto& p = pulses[i];
    if (p.detector == Detector::Trig || !p.has_logic() || p.logic_end() <= a) continue;
    const double t = std::max(a, p.start_ns);
    if (!best || t < best->time_ns || (t == best->time_ns && p.detector < best->partner)) best = Trigger{t, p.detector};
  }
  return best;
}

bool opens_episode(const PulseRecord& p) { return p.detector == Detector::Trig && p.has_logic(); }

// Extends the episode opened at index i; returns one past the last pulse starting inside it.
std::size_t extend_episode(std::span<const PulseRecord> pulses, std::size_t i, double& b) {
  std::size_t j = i + 1;
  b = pulses[i].logic_end();
  for (; j < pulses.size() && pulses[j].start_ns < b; ++j)
    if (opens_episode(pulses[j])) b = std::max(b, pulses[j].logic_end());
  return j;
}

class RateCap {
 public:
  explicit RateCap(const DaqConfig& cfg) : cfg_(cfg) {}
  bool admit(double t) {
    const auto bucket = static_cast<std::int64_t>(std::floor(t / (cfg_.bucket_s * 1e9)));
    if (bucket != bucket_) {
      bucket_ = bucket;
      count_ = 0.0;
    }
    if (count_ < cfg_.max_rate) {
      count_ += 1.0;
      return true;
    }
    return false;
  }
  std::int64_t bucket_ = std::numeric_limits<std::int64_t>::min();
  double count_ = 0.0;

 private:
  const DaqConfig& cfg_;
};

double max_logic_width(std::span<const PulseRecord> pulses) {
  double w = 0.0;
  for (const auto& p : pulses) w = std::max(w, p.logic_width_ns);
  return w;
}

}  // namespace

TriggerScan find_triggers(std::span<const PulseRecord> pulses, const DaqConfig& cfg) {
  cfg.validate();
  TriggerScan scan;
  RateCap cap(cfg);
  const double lookback = max_logic_width(pulses);
  std::size_t i = 0;
  while (i < pulses.size()) {
    if (!opens_episode(pulses[i])) {
      ++i;
      continue;
    }
    const double a = pulses[i].start_ns;
    double b = 0.0;
    const std::size_t j = extend_episode(pulses, i, b);
    if (auto trig = episode_overlap(pulses, first_start_at_or_after(pulses, a - lookback), a, b)) {
      if (cap.admit(trig->time_ns))
        scan.triggers.push_back(*trig);
      else
        ++scan.dropped;
    }
    i = j;
  }
  return scan;
}

EventRecord software_filter(const Trigger& trigger, std::span<const PulseRecord> pulses, const DaqConfig& cfg,
                            double max_analog_ns) {
  EventRecord ev;
  ev.trigger_time_ns = trigger.time_ns;
  ev.partner = trigger.partner;
  const double t = trigger.time_ns;
  const double hw = cfg.half_window_ns;
  const std::size_t from = std::isfinite(max_analog_ns) ? first_start_at_or_after(pulses, t - hw - max_analog_ns) : 0;
  for (std::size_t i = from; i < pulses.size() && pulses[i].start_ns <= t + hw; ++i) {
    const auto& p = pulses[i];
    const double offset = p.peak_ns() - t;
    if (std::abs(offset) <= hw) ev.photons.push_back({p.energy_kev, offset, p.detector, p.origin, false});
  }
  return ev;
}

void energy_select(EventRecord& event, const DaqConfig& cfg) {
  auto accepted = [&](const RegisteredPhoton& p) { return cfg.acceptance[mc::index_of(p.detector)].contains(p.energy_kev); };
  bool trig_in = false;
  bool out_in = false;
  for (auto& p : event.photons) {
    p.heralded = false;
    if (!accepted(p)) continue;
    (p.detector == Detector::Trig ? trig_in : out_in) = true;
  }
  event.passes_acceptance = trig_in && out_in;
  event.passes_sum = false;
  if (!event.passes_acceptance) return;

  std::array<bool, 3> has_accepted{};
  std::array<bool, 3> has_pair{};
  for (auto& o : event.photons) {
    if (o.detector == Detector::Trig || !accepted(o)) continue;
    has_accepted[mc::index_of(o.detector)] = true;
    for (auto& t : event.photons) {
      if (t.detector != Detector::Trig || !accepted(t)) continue;
      if (cfg.sum_ok(t.energy_kev + o.energy_kev)) {
        t.heralded = o.heralded = true;
        has_pair[mc::index_of(o.detector)] = true;
      }
    }
  }
  const bool any = has_pair[1] || has_pair[2];
  if (cfg.sum_policy == SumPolicy::AnyPair) {
    event.passes_sum = any;
  } else {
    event.passes_sum = any && (!has_accepted[1] || has_pair[1]) && (!has_accepted[2] || has_pair[2]);
  }
  if (!event.passes_sum)
    for (auto& p : event.photons) p.heralded = false;
}

Partition energy_select(std::vector<EventRecord>& events, const DaqConfig& cfg) {
  Partition part;
  for (std::size_t i = 0; i < events.size(); ++i) {
    energy_select(events[i], cfg);
    if (events[i].passes_acceptance) part.acceptance.push_back(i);
    if (events[i].passes_sum) part.heralded.push_back(i);
  }
  return part;
}

CoincidenceUnit::CoincidenceUnit(DaqConfig cfg) : cfg_(cfg) { cfg_.validate(); }

void CoincidenceUnit::push(std::span<const PulseRecord> chunk, double complete_until_ns) {
  for (const auto& p : chunk) {
    if (p.start_ns < last_start_) throw std::invalid_argument("coincidence unit: pulses out of time order");
    last_start_ = p.start_ns;
    max_logic_ = std::max(max_logic_, p.logic_width_ns);
    max_analog_ = std::max(max_analog_, p.analog_width_ns);
    buffer_.push_back(p);
  }
  if (complete_until_ns < last_start_) throw std::invalid_argument("coincidence unit: completion mark precedes data");
  process(complete_until_ns);
}

void CoincidenceUnit::finish() { process(std::numeric_limits<double>::infinity()); }

bool CoincidenceUnit::admit(double t) {
  const auto bucket = static_cast<std::int64_t>(std::floor(t / (cfg_.bucket_s * 1e9)));
  if (bucket != bucket_) {
    bucket_ = bucket;
    bucket_count_ = 0.0;
  }
  if (bucket_count_ < cfg_.max_rate) {
    bucket_count_ += 1.0;
    return true;
  }
  return false;
}

void CoincidenceUnit::process(double complete_until_ns) {
  const std::span<const PulseRecord> pulses(buffer_);
  const double hw = cfg_.half_window_ns;
  std::size_t i = scan_;
  while (i < pulses.size()) {
    if (!opens_episode(pulses[i])) {
      ++i;
      continue;
    }
    double b = 0.0;
    const double a = pulses[i].start_ns;
    if (!(pulses[i].logic_end() + hw <= complete_until_ns)) break;
    const std::size_t j = extend_episode(pulses, i, b);
    if (!(b + hw <= complete_until_ns)) break;
    if (auto trig = episode_overlap(pulses, first_start_at_or_after(pulses, a - max_logic_), a, b)) {
      ++triggers_;
      if (admit(trig->time_ns)) {
        auto ev = software_filter(*trig, pulses, cfg_, max_analog_);
        energy_select(ev, cfg_);
        events_.push_back(std::move(ev));
      } else {
        ++dropped_;
      }
    }
    i = j;
  }
  scan_ = i;

  const double anchor = scan_ < buffer_.size() ? buffer_[scan_].start_ns : complete_until_ns;
  const double keep_from = anchor - (max_logic_ + hw + max_analog_);
  const std::size_t cut = first_start_at_or_after(buffer_, keep_from);
  if (cut > 0) {
    buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(cut));
    scan_ -= cut;
  }
}

std::vector<EventRecord> CoincidenceUnit::take_events() {
  std::vector<EventRecord> out;
  out.swap(events_);
  return out;
}

DaqResult run_daq(std::span<const PulseRecord> pulses, const DaqConfig& cfg) {
  CoincidenceUnit unit(cfg);
  unit.push(pulses, pulses.empty() ? 0.0 : pulses.back().start_ns);
  unit.finish();
  return {unit.take_events(), unit.triggers(), unit.dropped()};
}

}  // namespace heraldx::daq
