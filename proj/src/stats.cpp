#include "heraldx/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace heraldx::stats {

using xoptics::DomainError;

void CoincCounts::validate() const {
  if (n_trig_t_r > std::min(n_trig_t, n_trig_r))
    throw DomainError("N_Trig-T-R cannot exceed N_Trig-T or N_Trig-R");
}

CoincCounts& CoincCounts::operator+=(const CoincCounts& o) {
  n_trig += o.n_trig;
  n_trig_t += o.n_trig_t;
  n_trig_r += o.n_trig_r;
  n_trig_t_r += o.n_trig_t_r;
  return *this;
}

AlphaResult alpha(const CoincCounts& c) {
  c.validate();
  AlphaResult r;
  if (c.n_trig_t == 0 || c.n_trig_r == 0) return r;
  r.defined = true;
  const auto n = static_cast<double>(c.n_trig);
  const auto nt = static_cast<double>(c.n_trig_t);
  const auto nr = static_cast<double>(c.n_trig_r);
  const auto ntr = static_cast<double>(c.n_trig_t_r);
  if (c.n_trig_t_r == 0) {
    r.alpha = 0.0;
    r.error = n * kZeroCountUpper / (nt * nr);
    r.one_sided = true;
    return r;
  }
  r.alpha = n * ntr / (nt * nr);
  const double rel2 = (n > 0 ? 1.0 / n : 0.0) + 1.0 / nt + 1.0 / nr + 1.0 / ntr;
  r.error = r.alpha * std::sqrt(rel2);
  return r;
}

std::string_view to_string(Selection s) {
  switch (s) {
    case Selection::Heralded: return "heralded";
    case Selection::Acceptance: return "acceptance";
    case Selection::Open: return "open";
  }
  return "?";
}

std::string_view to_string(EnergyMode m) { return m == EnergyMode::SumWindow ? "sum_window" : "open"; }

std::size_t selected_count(const EventRecord& event, Detector d, Selection s, const daq::DaqConfig& cfg) {
  std::size_t n = 0;
  for (const auto& p : event.photons) {
    if (p.detector != d) continue;
    switch (s) {
      case Selection::Heralded: n += p.heralded ? 1 : 0; break;
      case Selection::Acceptance: n += cfg.acceptance[mc::index_of(d)].contains(p.energy_kev) ? 1 : 0; break;
      case Selection::Open: ++n; break;
    }
  }
  return n;
}

CoincCounts coinc_counts(std::span<const EventRecord> events, Selection s, const daq::DaqConfig& cfg) {
  CoincCounts c;
  for (const auto& ev : events) {
    const bool t = selected_count(ev, Detector::Trig, s, cfg) > 0;
    const bool tr = selected_count(ev, Detector::Trans, s, cfg) > 0;
    const bool rf = selected_count(ev, Detector::Ref, s, cfg) > 0;
    if (!t || !(tr || rf)) continue;
    ++c.n_trig;
    c.n_trig_t += tr;
    c.n_trig_r += rf;
    c.n_trig_t_r += tr && rf;
  }
  return c;
}

std::uint64_t PortHistogram::events() const {
  std::uint64_t n = trans.front() - both;
  for (std::size_t k = 1; k < trans.size(); ++k) n += trans[k];
  for (std::size_t k = 1; k < ref.size(); ++k) n += ref[k];
  return n;
}

PortHistogram port_histogram(std::span<const EventRecord> events, Selection s, const daq::DaqConfig& cfg) {
  PortHistogram h;
  auto bump = [](std::vector<std::uint64_t>& v, std::size_t k) {
    if (v.size() <= k) v.resize(k + 1, 0);
    ++v[k];
  };
  for (const auto& ev : events) {
    if (selected_count(ev, Detector::Trig, s, cfg) == 0) continue;
    const auto t = selected_count(ev, Detector::Trans, s, cfg);
    const auto r = selected_count(ev, Detector::Ref, s, cfg);
    if (t == 0 && r == 0) {
      ++h.trans[0];
      ++h.ref[0];
      continue;
    }
    if (t > 0) bump(h.trans, t);
    if (r > 0) bump(h.ref, r);
    h.both += t > 0 && r > 0;
  }
  const auto width = std::max(h.trans.size(), h.ref.size());
  h.trans.resize(width, 0);
  h.ref.resize(width, 0);
  return h;
}

void SigmaAccumulator::add(std::uint64_t n_t, std::uint64_t n_h) {
  const auto d = static_cast<std::int64_t>(n_t) - static_cast<std::int64_t>(n_h);
  ++n;
  sum_diff += d;
  sum_diff_sq += static_cast<std::uint64_t>(d * d);
  sum_total += n_t + n_h;
}

SigmaAccumulator& SigmaAccumulator::operator+=(const SigmaAccumulator& o) {
  n += o.n;
  sum_diff += o.sum_diff;
  sum_diff_sq += o.sum_diff_sq;
  sum_total += o.sum_total;
  return *this;
}

double SigmaAccumulator::sigma() const {
  if (n < 2) throw EmptyEnsemble("sigma needs at least two qualifying events");
  const __int128 nn = n;
  const __int128 var_num = nn * sum_diff_sq - static_cast<__int128>(sum_diff) * sum_diff;
  const __int128 mean_num = nn * sum_total;
  if (mean_num == 0) throw EmptyEnsemble("sigma: ensemble holds no counted photons");
  return static_cast<double>(var_num) / static_cast<double>(mean_num);
}

namespace {

bool in_window(const daq::RegisteredPhoton& p, double window_ns) { return std::abs(p.offset_ns) <= window_ns; }

// Photons of `side` in the window that carry the pump energy alone or with a
// windowed photon of `other`.
std::uint64_t conserving(const std::vector<const daq::RegisteredPhoton*>& side,
                         const std::vector<const daq::RegisteredPhoton*>& other, const daq::DaqConfig& cfg) {
  std::uint64_t n = 0;
  for (const auto* p : side) {
    bool ok = cfg.sum_ok(p->energy_kev);
    for (std::size_t i = 0; !ok && i < other.size(); ++i) ok = cfg.sum_ok(p->energy_kev + other[i]->energy_kev);
    n += ok;
  }
  return n;
}

}  // namespace

SigmaPoint sigma(std::span<const EventRecord> events, double window_ns, EnergyMode mode, Detector output,
                 const daq::DaqConfig& cfg, std::size_t batches) {
  if (!(window_ns > 0.0)) throw DomainError("sigma time window must be positive");
  if (output == Detector::Trig) throw DomainError("sigma output detector must be Trans or Ref");
  std::vector<std::pair<std::uint64_t, std::uint64_t>> samples;
  samples.reserve(events.size());
  std::vector<const daq::RegisteredPhoton*> trig, out;
  for (const auto& ev : events) {
    trig.clear();
    out.clear();
    for (const auto& p : ev.photons) {
      if (!in_window(p, window_ns)) continue;
      if (p.detector == Detector::Trig)
        trig.push_back(&p);
      else if (p.detector == output)
        out.push_back(&p);
    }
    std::uint64_t nt = trig.size(), nh = out.size();
    if (mode == EnergyMode::SumWindow) {
      nt = conserving(trig, out, cfg);
      nh = conserving(out, trig, cfg);
    }
    if (nt == 0 && nh == 0) continue;
    samples.emplace_back(nt, nh);
  }

  SigmaAccumulator all;
  for (const auto& [nt, nh] : samples) all.add(nt, nh);
  SigmaPoint pt{window_ns, mode, output, all.sigma(), 0.0, all.n};

  const std::size_t b = std::min(batches, samples.size() / 2);
  if (b >= 2) {
    std::vector<double> per;
    for (std::size_t k = 0; k < b; ++k) {
      SigmaAccumulator acc;
      const std::size_t lo = k * samples.size() / b, hi = (k + 1) * samples.size() / b;
      for (std::size_t i = lo; i < hi; ++i) acc.add(samples[i].first, samples[i].second);
      try {
        per.push_back(acc.sigma());
      } catch (const EmptyEnsemble&) {
      }
    }
    if (per.size() >= 2) {
      double mean = 0.0;
      for (double v : per) mean += v;
      mean /= static_cast<double>(per.size());
      double ss = 0.0;
      for (double v : per) ss += (v - mean) * (v - mean);
      pt.error = std::sqrt(ss / static_cast<double>(per.size() - 1) / static_cast<double>(per.size()));
    }
  }
  return pt;
}

std::vector<SigmaPoint> sigma_curve(std::span<const EventRecord> events, std::span<const double> windows_ns,
                                    EnergyMode mode, Detector output, const daq::DaqConfig& cfg) {
  std::vector<SigmaPoint> out;
  for (double w : windows_ns) out.push_back(sigma(events, w, mode, output, cfg));
  return out;
}

Histogram::Histogram(double lo, double hi, double width) : lo_(lo), width_(width) {
  if (!(width > 0.0)) throw DomainError("histogram bin width must be positive");
  if (!(hi > lo)) throw DomainError("histogram range needs lo < hi");
  counts_.assign(static_cast<std::size_t>(std::ceil((hi - lo) / width - 1e-9)), 0);
}

void Histogram::fill(double x) {
  if (x < lo_) {
    ++underflow_;
    return;
  }
  const auto i = static_cast<std::size_t>(std::floor((x - lo_) / width_));
  if (i >= counts_.size())
    ++overflow_;
  else
    ++counts_[i];
}

std::uint64_t Histogram::total() const {
  std::uint64_t t = underflow_ + overflow_;
  for (auto c : counts_) t += c;
  return t;
}

void Histogram::set(std::vector<std::uint64_t> counts, std::uint64_t underflow, std::uint64_t overflow) {
  if (counts.size() != counts_.size()) throw DomainError("histogram bin count mismatch");
  counts_ = std::move(counts);
  underflow_ = underflow;
  overflow_ = overflow;
}

Histogram spectra(std::span<const EventRecord> events, Detector d, double bin_kev, double lo_kev, double hi_kev) {
  Histogram h(lo_kev, hi_kev, bin_kev);
  for (const auto& ev : events) {
    if (!ev.passes_sum) continue;
    for (const auto& p : ev.photons)
      if (p.detector == d && p.heralded) h.fill(p.energy_kev);
  }
  return h;
}

double fwhm(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("fwhm needs matching x/y with two or more samples");
  const auto peak = static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin());
  const double half = 0.5 * y[peak];
  if (!(half > 0.0)) return 0.0;
  auto cross = [&](std::size_t i, std::size_t j) {
    const double t = (half - y[i]) / (y[j] - y[i]);
    return x[i] + t * (x[j] - x[i]);
  };
  double left = x.front();
  for (std::size_t i = peak; i > 0; --i)
    if (y[i - 1] < half) {
      left = cross(i - 1, i);
      break;
    }
  double right = x.back();
  for (std::size_t i = peak; i + 1 < y.size(); ++i)
    if (y[i + 1] < half) {
      right = cross(i + 1, i);
      break;
    }
  return right - left;
}

double fwhm(const Histogram& h) {
  std::vector<double> x, y;
  for (std::size_t i = 0; i < h.bins(); ++i) {
    x.push_back(h.bin_center(i));
    y.push_back(static_cast<double>(h.counts()[i]));
  }
  return fwhm(x, y);
}

std::vector<double> local_minima(std::span<const double> x, std::span<const double> y) {
  std::vector<double> out;
  for (std::size_t i = 1; i + 1 < y.size(); ++i)
    if (y[i] < y[i - 1] && y[i] < y[i + 1]) out.push_back(x[i]);
  return out;
}

Measured rate(std::uint64_t count, double live_s) {
  if (!(live_s > 0.0)) throw DomainError("live time must be positive");
  if (count == 0) return {0.0, kZeroCountUpper / live_s, true};
  const auto n = static_cast<double>(count);
  return {n / live_s, std::sqrt(n) / live_s, false};
}

Measured ratio(std::uint64_t count, double live_s, Measured baseline) {
  if (!(baseline.value > 0.0)) throw DomainError("baseline rate must be positive");
  const Measured n = rate(count, live_s);
  if (count == 0) return {0.0, n.error / baseline.value, true};
  const double r = n.value / baseline.value;
  const double rb = baseline.error / baseline.value;
  return {r, r * std::sqrt(1.0 / static_cast<double>(count) + rb * rb), false};
}

PortRates rates_and_ratios(std::uint64_t ref_count, std::uint64_t trans_count, double live_s, Measured baseline) {
  return {rate(ref_count, live_s), rate(trans_count, live_s), ratio(ref_count, live_s, baseline),
          ratio(trans_count, live_s, baseline)};
}

}  // namespace heraldx::stats
