#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "heraldx/montecarlo.hpp"

using namespace heraldx;
using namespace heraldx::mc;

namespace {

spdc::GridSpec small_grid() {
  spdc::GridSpec g;
  g.energy_points = 41;
  g.theta_y_points = 9;
  g.detuning_points = 21;
  return g;
}

const spdc::JointAmplitude& shared_amp() {
  static const auto amp = spdc::biphoton_amplitude(spdc::SpdcConfig{}, small_grid(), spdc::Backend::Serial);
  return amp;
}

PairOptics optics(bool with_air) {
  PairOptics o{splitter::SplitterSpec{}, xoptics::load_material("graphite"), std::nullopt, 21.0};
  if (with_air) o.air = xoptics::load_material("air");
  return o;
}

DetectorSet ideal_detectors() {
  DetectorSet d{};
  for (auto& s : d) s.fwhm_ev = 1e-6;
  return d;
}

bool same(const PulseRecord& a, const PulseRecord& b) {
  return a.start_ns == b.start_ns && a.energy_kev == b.energy_kev && a.true_energy_kev == b.true_energy_kev &&
         a.detector == b.detector && a.origin == b.origin && a.logic_width_ns == b.logic_width_ns &&
         a.analog_width_ns == b.analog_width_ns;
}

bool same(const std::vector<PulseRecord>& a, const std::vector<PulseRecord>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!same(a[i], b[i])) return false;
  return true;
}

}  // namespace

TEST_CASE("detector and origin names round-trip") {
  for (Detector d : kDetectors) CHECK(parse_detector(to_string(d)) == d);
  CHECK(parse_origin(to_string(Origin::Pair)) == Origin::Pair);
  CHECK(parse_origin(to_string(Origin::Stray)) == Origin::Stray);
  CHECK_THROWS(parse_detector("left"));
  CHECK_THROWS(parse_origin("cosmic"));
}

TEST_CASE("substreams are reproducible and distinct") {
  auto a = substream(42, 3, 1), b = substream(42, 3, 1);
  for (int i = 0; i < 100; ++i) CHECK(a() == b());
  auto c = substream(42, 4, 1), d = substream(42, 3, 2), e = substream(43, 3, 1);
  auto f = substream(42, 3, 1);
  const auto x = f();
  CHECK(c() != x);
  CHECK(d() != x);
  CHECK(e() != x);
}

TEST_CASE("stray photons form Poisson streams") {
  SourceConfig src;
  src.stray_rate = {1000.0, 500.0, 0.0};
  auto rng = substream(1, 0, 0);
  const auto photons = generate_stray(src, {0.0, 100e9}, rng);
  std::array<std::vector<double>, 3> times;
  for (const auto& p : photons) {
    CHECK(p.origin == Origin::Stray);
    times[index_of(p.detector)].push_back(p.time_ns);
  }
  CHECK(times[2].empty());
  for (std::size_t k : {0u, 1u}) {
    const double expect = src.stray_rate[k] * 100.0;
    CHECK(std::abs(static_cast<double>(times[k].size()) - expect) < 5.0 * std::sqrt(expect));
    // Kolmogorov-Smirnov on the gaps against the exponential law
    auto& t = times[k];
    std::sort(t.begin(), t.end());
    std::vector<double> gaps;
    for (std::size_t i = 1; i < t.size(); ++i) gaps.push_back(t[i] - t[i - 1]);
    std::sort(gaps.begin(), gaps.end());
    const double lambda = src.stray_rate[k] * 1e-9;
    double dmax = 0.0;
    const auto n = static_cast<double>(gaps.size());
    for (std::size_t i = 0; i < gaps.size(); ++i) {
      const double cdf = 1.0 - std::exp(-lambda * gaps[i]);
      dmax = std::max({dmax, std::abs(cdf - i / n), std::abs(cdf - (i + 1) / n)});
    }
    CHECK(dmax < 1.95 / std::sqrt(n));
  }
}

TEST_CASE("default stray spectrum mixes a continuum and the elastic line") {
  const auto s = StraySpectrum::default_profile();
  auto rng = substream(2, 0, 0);
  int line = 0, band = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double e = s.sample(rng);
    if (e == 21.0)
      ++line;
    else if (e >= 7.0 && e <= 17.0)
      ++band;
  }
  CHECK(line + band == n);
  CHECK(std::abs(line - 0.1 * n) < 5.0 * std::sqrt(0.09 * n));
  CHECK_THROWS(StraySpectrum({{5.0, 4.0, 1.0}}));
  CHECK_THROWS(StraySpectrum({{0.0, 4.0, 1.0}}));
  CHECK_THROWS(StraySpectrum({{5.0, 6.0, -1.0}}));
  CHECK_THROWS(StraySpectrum({}));
}

TEST_CASE("pair sampler reproduces the energy marginal") {
  const auto& amp = shared_amp();
  const PairSampler sampler(amp);
  const int rows = amp.energy_axis().points;
  double mass = 0.0;
  for (int ie = 0; ie < rows; ++ie) mass += sampler.energy_mass(ie);
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));

  auto rng = substream(3, 0, 0);
  const int n = 200000;
  std::vector<double> counts(rows, 0.0);
  const auto& ax = amp.energy_axis();
  for (int i = 0; i < n; ++i) {
    const auto d = sampler(rng);
    REQUIRE(d.energy_kev >= ax.lo);
    REQUIRE(d.energy_kev < ax.hi);
    CHECK(std::abs(d.theta_x) <= amp.half_aperture() + 1e-12);
    ++counts[static_cast<int>((d.energy_kev - ax.lo) / ax.step())];
  }
  double chi2 = 0.0;
  int dof = -1;
  for (int ie = 0; ie < rows; ++ie) {
    const double expect = n * sampler.energy_mass(ie);
    if (expect < 5.0) continue;
    chi2 += (counts[ie] - expect) * (counts[ie] - expect) / expect;
    ++dof;
  }
  // upper 0.1% point, Wilson-Hilferty
  const double z = 3.09;
  const double crit = dof * std::pow(1.0 - 2.0 / (9.0 * dof) + z * std::sqrt(2.0 / (9.0 * dof)), 3);
  CHECK(chi2 < crit);
}

TEST_CASE("heralded routing follows the model reflect and transmit fractions") {
  const auto& amp = shared_amp();
  const PairSampler sampler(amp);
  const auto opt = optics(false);
  auto rng = substream(4, 0, 0);
  const auto photons = generate_pairs(sampler, opt, 2000.0, 0.0, {0.0, 100e9}, rng);
  double trig = 0, ref = 0, trans = 0;
  for (const auto& p : photons) {
    CHECK(p.origin == Origin::Pair);
    trig += p.detector == Detector::Trig;
    ref += p.detector == Detector::Ref;
    trans += p.detector == Detector::Trans;
  }
  CHECK(std::abs(trig - 2e5) < 5.0 * std::sqrt(2e5));
  const double pr = spdc::coincidence_rate(amp, spdc::reflect_filter(opt.splitter), spdc::no_loss());
  const double pt =
      spdc::coincidence_rate(amp, spdc::transmit_filter(opt.splitter, opt.splitter_material), spdc::no_loss());
  CHECK(std::abs(ref / trig - pr) < 5.0 * std::sqrt(pr * (1 - pr) / trig));
  CHECK(std::abs(trans / trig - pt) < 5.0 * std::sqrt(pt * (1 - pt) / trig));
}

TEST_CASE("pair photons share their creation time and conserve energy") {
  const PairSampler sampler(shared_amp());
  const auto opt = optics(false);
  auto rng = substream(5, 0, 0);
  const auto photons = generate_pairs(sampler, opt, 1000.0, 0.0, {0.0, 1e9}, rng);
  for (std::size_t i = 0; i + 1 < photons.size(); ++i) {
    if (photons[i].detector != Detector::Trig || photons[i + 1].detector == Detector::Trig) continue;
    CHECK(photons[i + 1].time_ns == photons[i].time_ns);
    CHECK(photons[i].true_energy_kev + photons[i + 1].true_energy_kev == doctest::Approx(21.0));
  }
}

TEST_CASE("air removes trigger photons with the air transmittance") {
  const auto& amp = shared_amp();
  const PairSampler sampler(amp);
  const auto opt = optics(true);
  auto rng = substream(6, 0, 0);
  const double rate = 2000.0, seconds = 50.0;
  const auto photons = generate_pairs(sampler, opt, rate, 10.0, {0.0, seconds * 1e9}, rng);
  double trig = 0;
  for (const auto& p : photons) trig += p.detector == Detector::Trig;
  const auto air = *opt.air;
  const double survive = spdc::coincidence_rate(amp, spdc::SpectralAngularFilter::constant(1.0), [&](double e) {
    return xoptics::transmittance(xoptics::PhotonEnergy(21.0 - e), air, 10.0);
  });
  const double expect = rate * seconds * survive;
  CHECK(std::abs(trig - expect) < 5.0 * std::sqrt(expect));
}

TEST_CASE("detector efficiency, resolution and SCA logic") {
  DetectorSet dets{};
  dets[0].efficiency = 0.6;
  std::vector<PhotonState> photons;
  for (int i = 0; i < 100000; ++i) photons.push_back({i * 10.0, 10.0, 10.0, Detector::Trig, Origin::Stray});
  auto rng = substream(7, 0, 0);
  const auto pulses = detect(photons, dets, rng);
  const double n = static_cast<double>(pulses.size());
  CHECK(std::abs(n - 6e4) < 5.0 * std::sqrt(1e5 * 0.24));
  double sum = 0.0, sum2 = 0.0;
  for (const auto& p : pulses) {
    sum += p.energy_kev;
    sum2 += p.energy_kev * p.energy_kev;
    CHECK(p.has_logic() == (p.energy_kev >= 7.0 && p.energy_kev <= 17.0));
    CHECK(p.peak_ns() == p.start_ns + 100.0);
  }
  const double mean = sum / n, sd = std::sqrt(sum2 / n - mean * mean);
  const double sigma = 0.3 / (2.0 * std::sqrt(2.0 * std::log(2.0))) * std::sqrt(10.0 / 10.5);
  CHECK(dets[0].sigma_kev(10.0) == doctest::Approx(sigma).epsilon(1e-4));
  CHECK(std::abs(mean - 10.0) < 5.0 * sigma / std::sqrt(n));
  CHECK(sd == doctest::Approx(sigma).epsilon(0.02));

  std::vector<PhotonState> edge{{0.0, 21.0, 21.0, Detector::Ref, Origin::Stray}};
  const auto high = detect(edge, ideal_detectors(), rng);
  REQUIRE(high.size() == 1);
  CHECK_FALSE(high[0].has_logic());
}

TEST_CASE("detected pulses are sorted by start then detector") {
  std::vector<PhotonState> photons{{50.0, 10.0, 10.0, Detector::Ref, Origin::Stray},
                                   {50.0, 10.0, 10.0, Detector::Trig, Origin::Stray},
                                   {10.0, 10.0, 10.0, Detector::Trans, Origin::Stray}};
  auto rng = substream(8, 0, 0);
  const auto pulses = detect(photons, ideal_detectors(), rng);
  REQUIRE(pulses.size() == 3);
  CHECK(pulses[0].start_ns == 10.0);
  CHECK(pulses[1].detector == Detector::Trig);
  CHECK(pulses[2].detector == Detector::Ref);
}

TEST_CASE("slices are deterministic, independent and backend-agnostic") {
  const PairSampler sampler(shared_amp());
  const auto opt = optics(true);
  SourceConfig src;
  src.pair_rate = 500.0;
  src.stray_rate = {50.0, 40.0, 60.0};
  src.duration_s = 2.5;
  src.slice_s = 0.5;
  src.seed = 99;
  const SliceSource source(src, DetectorSet{}, &sampler, &opt);
  REQUIRE(source.slice_count() == 5);
  CHECK(source.slice_span(4).end_ns == doctest::Approx(2.5e9));

  const auto serial = source.batch(0, 5, spdc::Backend::Serial);
  const auto parallel = source.batch(0, 5, spdc::Backend::Parallel);
  for (std::size_t k = 0; k < 5; ++k) {
    CHECK(same(serial[k], parallel[k]));
    CHECK(same(serial[k], source.slice(k)));
    const auto span = source.slice_span(k);
    for (const auto& p : serial[k]) {
      CHECK(p.start_ns >= span.begin_ns);
      CHECK(p.start_ns < span.end_ns);
    }
    CHECK(std::is_sorted(serial[k].begin(), serial[k].end(),
                         [](const PulseRecord& a, const PulseRecord& b) { return a.start_ns < b.start_ns; }));
  }
  // out-of-order generation gives the same slice
  CHECK(same(source.batch(3, 1, spdc::Backend::Serial)[0], serial[3]));

  auto other = src;
  other.seed = 100;
  const SliceSource source2(other, DetectorSet{}, &sampler, &opt);
  CHECK_FALSE(same(source2.slice(0), serial[0]));
}

TEST_CASE("source and detector validation") {
  SourceConfig s;
  CHECK_NOTHROW(s.validate());
  auto bad = s;
  bad.pair_rate = -1.0;
  CHECK_THROWS(bad.validate());
  bad = s;
  bad.duration_s = 0.0;
  CHECK_THROWS(bad.validate());
  bad = s;
  bad.stray_rate[1] = -2.0;
  CHECK_THROWS(bad.validate());
  DetectorSpec d;
  d.efficiency = 1.2;
  CHECK_THROWS(d.validate());
  d = DetectorSpec{};
  d.sca_lo_kev = 20.0;
  CHECK_THROWS(d.validate());
  SourceConfig pairs;
  pairs.pair_rate = 1.0;
  CHECK_THROWS(SliceSource(pairs, DetectorSet{}, nullptr, nullptr));
}
