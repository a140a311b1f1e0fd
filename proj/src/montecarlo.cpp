#include "heraldx/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <tuple>

namespace heraldx::mc {

using xoptics::DomainError;

std::string_view to_string(Detector d) {
  switch (d) {
    case Detector::Trig: return "trig";
    case Detector::Trans: return "trans";
    case Detector::Ref: return "ref";
  }
  return "?";
}

Detector parse_detector(std::string_view s) {
  if (s == "trig") return Detector::Trig;
  if (s == "trans") return Detector::Trans;
  if (s == "ref") return Detector::Ref;
  throw std::invalid_argument("unknown detector '" + std::string(s) + "'");
}

std::string_view to_string(Origin o) { return o == Origin::Pair ? "pair" : "stray"; }

Origin parse_origin(std::string_view s) {
  if (s == "pair") return Origin::Pair;
  if (s == "stray") return Origin::Stray;
  throw std::invalid_argument("unknown origin '" + std::string(s) + "'");
}

Rng substream(std::uint64_t seed, std::uint64_t slice, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(slice), static_cast<std::uint32_t>(slice >> 32), stream};
  return Rng(seq);
}

StraySpectrum::StraySpectrum(std::vector<StrayComponent> components) : components_(std::move(components)) {
  double total = 0.0;
  for (const auto& c : components_) {
    if (!(c.lo_kev > 0.0) || c.hi_kev < c.lo_kev || c.weight < 0.0)
      throw DomainError("stray spectrum components need 0 < lo <= hi and weight >= 0");
    total += c.weight;
    cumulative_.push_back(total);
  }
  if (!(total > 0.0)) throw DomainError("stray spectrum has no weight");
}

StraySpectrum StraySpectrum::default_profile() {
  return StraySpectrum({{7.0, 17.0, 0.9}, {21.0, 21.0, 0.1}});
}

double StraySpectrum::sample(Rng& rng) const {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double pick = unit(rng) * cumulative_.back();
  const double where = unit(rng);
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), pick);
  if (it == cumulative_.end()) --it;
  const auto& c = components_[static_cast<std::size_t>(it - cumulative_.begin())];
  return c.lo_kev + where * (c.hi_kev - c.lo_kev);
}

void SourceConfig::validate() const {
  if (pair_rate < 0.0) throw DomainError("pair rate must be non-negative");
  for (double r : stray_rate)
    if (r < 0.0) throw DomainError("stray rates must be non-negative");
  if (!(duration_s > 0.0)) throw DomainError("run duration must be positive");
  if (!(slice_s > 0.0)) throw DomainError("slice length must be positive");
  if (air_path_cm < 0.0) throw DomainError("air path must be non-negative");
}

void DetectorSpec::validate() const {
  if (!(efficiency >= 0.0 && efficiency <= 1.0)) throw DomainError("detector efficiency must lie in [0, 1]");
  if (fwhm_ev < 0.0) throw DomainError("detector resolution must be non-negative");
  if (!(reference_kev > 0.0)) throw DomainError("detector reference energy must be positive");
  if (!(analog_width_ns > 0.0) || !(logic_width_ns > 0.0)) throw DomainError("pulse widths must be positive");
  if (!(sca_lo_kev < sca_hi_kev)) throw DomainError("SCA window needs lo < hi");
}

double DetectorSpec::sigma_kev(double energy_kev) const {
  constexpr double kFwhmPerSigma = 2.354820045030949;
  return 1e-3 * fwhm_ev / kFwhmPerSigma * std::sqrt(std::max(energy_kev, 0.0) / reference_kev);
}

PairSampler::PairSampler(const spdc::JointAmplitude& amp) : amp_(&amp) {
  cdf_.reserve(amp.size());
  const int nx = amp.detuning_points();
  const auto values = amp.values();
  double total = 0.0;
  for (std::size_t r = 0; r < amp.rows(); ++r) {
    const double vol = amp.row_volume(r);
    for (int ix = 0; ix < nx; ++ix) {
      total += std::norm(values[r * nx + ix]) * vol;
      cdf_.push_back(total);
    }
  }
  if (!(total > 0.0)) throw DomainError("pair sampler: amplitude carries no weight");
}

PairSampler::Draw PairSampler::operator()(Rng& rng) const {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double pick = unit(rng) * cdf_.back();
  const double jitter = unit(rng);
  auto it = std::upper_bound(cdf_.begin(), cdf_.end(), pick);
  if (it == cdf_.end()) --it;
  const auto cell = static_cast<std::size_t>(it - cdf_.begin());
  const int nx = amp_->detuning_points();
  const int ny = amp_->theta_y_axis().points;
  const auto row = cell / nx;
  const int ix = static_cast<int>(cell % nx);
  const int ie = static_cast<int>(row / ny);
  const int iy = static_cast<int>(row % ny);
  const auto& e = amp_->energy_axis();
  return {e.center(ie) + (jitter - 0.5) * e.step(), amp_->theta_x(ie, iy, ix), amp_->theta_y(iy)};
}

double PairSampler::energy_mass(int ie) const {
  const std::size_t per_energy = static_cast<std::size_t>(amp_->theta_y_axis().points) * amp_->detuning_points();
  const std::size_t end = (ie + 1) * per_energy - 1;
  const double before = ie == 0 ? 0.0 : cdf_[ie * per_energy - 1];
  return (cdf_[end] - before) / cdf_.back();
}

std::vector<PhotonState> generate_pairs(const PairSampler& sampler, const PairOptics& optics, double pair_rate,
                                        double air_path_cm, TimeSpan span, Rng& rng) {
  std::vector<PhotonState> out;
  if (!(pair_rate > 0.0)) return out;
  std::exponential_distribution<double> gap(pair_rate * 1e-9);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  auto air_survives = [&](double energy, double u) {
    if (!optics.air || air_path_cm == 0.0) return true;
    return u < xoptics::transmittance(xoptics::PhotonEnergy(energy), *optics.air, air_path_cm);
  };

  for (double t = span.begin_ns + gap(rng); t < span.end_ns; t += gap(rng)) {
    const auto draw = sampler(rng);
    const double u_trig_air = unit(rng);
    const double u_heral_air = unit(rng);
    const double u_route = unit(rng);
    const double trig_energy = optics.pump_energy_kev - draw.energy_kev;

    if (air_survives(trig_energy, u_trig_air))
      out.push_back({t, trig_energy, trig_energy, Detector::Trig, Origin::Pair});
    if (!air_survives(draw.energy_kev, u_heral_air)) continue;

    const auto branch = splitter::route(optics.splitter, draw.energy_kev,
                                        splitter::incidence_deviation_deg(optics.splitter, draw.theta_x),
                                        optics.splitter_material);
    if (u_route < branch.reflect)
      out.push_back({t, draw.energy_kev, draw.energy_kev, Detector::Ref, Origin::Pair});
    else if (u_route < branch.reflect + branch.transmit)
      out.push_back({t, draw.energy_kev, draw.energy_kev, Detector::Trans, Origin::Pair});
  }
  return out;
}

std::vector<PhotonState> generate_stray(const SourceConfig& source, TimeSpan span, Rng& rng) {
  std::vector<PhotonState> out;
  for (Detector d : kDetectors) {
    const double rate = source.stray_rate[index_of(d)];
    if (!(rate > 0.0)) continue;
    std::exponential_distribution<double> gap(rate * 1e-9);
    for (double t = span.begin_ns + gap(rng); t < span.end_ns; t += gap(rng)) {
      const double e = source.stray_spectrum.sample(rng);
      out.push_back({t, e, e, d, Origin::Stray});
    }
  }
  return out;
}

void sort_pulses(std::vector<PulseRecord>& pulses) {
  std::sort(pulses.begin(), pulses.end(), [](const PulseRecord& a, const PulseRecord& b) {
    return std::tie(a.start_ns, a.detector, a.energy_kev, a.origin) <
           std::tie(b.start_ns, b.detector, b.energy_kev, b.origin);
  });
}

std::vector<PulseRecord> detect(std::span<const PhotonState> photons, const DetectorSet& detectors, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<PulseRecord> out;
  out.reserve(photons.size());
  for (const auto& p : photons) {
    const auto& spec = detectors[index_of(p.detector)];
    const double u = unit(rng);
    const double z = noise(rng);
    if (u >= spec.efficiency) continue;
    const double measured = std::max(1e-3, p.true_energy_kev + spec.sigma_kev(p.true_energy_kev) * z);
    PulseRecord pulse;
    pulse.start_ns = p.time_ns;
    pulse.energy_kev = measured;
    pulse.true_energy_kev = p.true_energy_kev;
    pulse.detector = p.detector;
    pulse.origin = p.origin;
    pulse.analog_width_ns = spec.analog_width_ns;
    pulse.logic_width_ns = (measured >= spec.sca_lo_kev && measured <= spec.sca_hi_kev) ? spec.logic_width_ns : 0.0;
    out.push_back(pulse);
  }
  sort_pulses(out);
  return out;
}

SliceSource::SliceSource(SourceConfig source, DetectorSet detectors, const PairSampler* sampler,
                         const PairOptics* optics)
    : source_(std::move(source)), detectors_(detectors), sampler_(sampler), optics_(optics) {
  source_.validate();
  for (const auto& d : detectors_) d.validate();
  if (source_.pair_rate > 0.0 && (!sampler_ || !optics_))
    throw DomainError("pair generation needs an amplitude sampler and splitter optics");
  slices_ = static_cast<std::size_t>(std::ceil(source_.duration_s / source_.slice_s));
  if (slices_ == 0) slices_ = 1;
}

TimeSpan SliceSource::slice_span(std::size_t k) const {
  const double begin = static_cast<double>(k) * source_.slice_s * 1e9;
  const double end = std::min(static_cast<double>(k + 1) * source_.slice_s, source_.duration_s) * 1e9;
  return {begin, end};
}

std::vector<PhotonState> SliceSource::slice_photons(std::size_t k) const {
  const auto span = slice_span(k);
  std::vector<PhotonState> photons;
  if (source_.pair_rate > 0.0) {
    auto rng = substream(source_.seed, k, 0);
    photons = generate_pairs(*sampler_, *optics_, source_.pair_rate, source_.air_path_cm, span, rng);
  }
  auto rng = substream(source_.seed, k, 1);
  auto stray = generate_stray(source_, span, rng);
  photons.insert(photons.end(), stray.begin(), stray.end());
  return photons;
}

std::vector<PulseRecord> SliceSource::slice(std::size_t k) const {
  const auto photons = slice_photons(k);
  auto rng = substream(source_.seed, k, 2);
  return detect(photons, detectors_, rng);
}

std::vector<std::vector<PulseRecord>> SliceSource::batch(std::size_t first, std::size_t count,
                                                         spdc::Backend backend) const {
  count = std::min(count, slices_ - std::min(first, slices_));
  std::vector<std::vector<PulseRecord>> out(count);
  if (backend == spdc::Backend::Parallel) {
    const auto n = static_cast<std::int64_t>(count);
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t i = 0; i < n; ++i) out[i] = slice(first + static_cast<std::size_t>(i));
  } else {
    for (std::size_t i = 0; i < count; ++i) out[i] = slice(first + i);
  }
  return out;
}

}  // namespace heraldx::mc
