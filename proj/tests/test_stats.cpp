#include <doctest.h>

#include <cmath>
#include <random>
#include <tuple>

#include "heraldx/stats.hpp"

using namespace heraldx;
using namespace heraldx::stats;
using daq::RegisteredPhoton;

namespace {

EventRecord make_event(int n_t, int n_h, Detector out = Detector::Trans, double e_t = 10.5, double e_h = 10.5) {
  EventRecord ev;
  for (int i = 0; i < n_t; ++i) ev.photons.push_back({e_t, 100.0, Detector::Trig});
  for (int i = 0; i < n_h; ++i) ev.photons.push_back({e_h, 100.0, out});
  return ev;
}

double alpha_oracle(double n, double nt, double nr, double ntr) { return n * ntr / (nt * nr); }

}  // namespace

TEST_CASE("alpha for the two stray-light tables") {
  const auto a = alpha({2264, 897, 1356, 11});
  REQUIRE(a.defined);
  CHECK(a.alpha == doctest::Approx(alpha_oracle(2264, 897, 1356, 11)).epsilon(1e-14));
  CHECK(a.alpha == doctest::Approx(0.02048).epsilon(1e-3));
  CHECK(std::abs(a.error - 0.006) < 0.0005);
  const auto b = alpha({226400, 89798, 135698, 904});
  CHECK(b.alpha == doctest::Approx(0.01680).epsilon(1e-3));
  CHECK(std::abs(b.error - 0.0006) < 0.00005);
  CHECK_FALSE(b.one_sided);
}

TEST_CASE("alpha error follows first-order Poisson propagation") {
  const CoincCounts c{500, 120, 200, 30};
  const auto a = alpha(c);
  const double rel = std::sqrt(1.0 / 500 + 1.0 / 120 + 1.0 / 200 + 1.0 / 30);
  CHECK(a.error == doctest::Approx(a.alpha * rel).epsilon(1e-14));
}

TEST_CASE("alpha is invariant under uniform rescaling") {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<std::uint64_t> d(1, 1000);
  for (int i = 0; i < 200; ++i) {
    const std::uint64_t nt = d(rng), nr = d(rng);
    const std::uint64_t ntr = std::min(nt, nr) / 2 + 1;
    const std::uint64_t n = nt + nr;
    const CoincCounts c{n, nt, nr, ntr};
    for (std::uint64_t k : {2u, 7u, 100u}) {
      const CoincCounts s{k * n, k * nt, k * nr, k * ntr};
      CHECK(alpha(s).alpha == alpha(c).alpha);
    }
  }
}

TEST_CASE("alpha edge cases") {
  const auto zero = alpha({100, 40, 60, 0});
  CHECK(zero.defined);
  CHECK(zero.alpha == 0.0);
  CHECK(zero.one_sided);
  CHECK(zero.error == doctest::Approx(100 * kZeroCountUpper / (40.0 * 60.0)));
  CHECK_FALSE(alpha({100, 0, 60, 0}).defined);
  CHECK_FALSE(alpha({100, 40, 0, 0}).defined);
  CHECK_THROWS(alpha({100, 5, 60, 6}));
}

TEST_CASE("coincidence counts by selection") {
  std::vector<EventRecord> evs;
  evs.push_back(make_event(1, 1, Detector::Trans));
  evs.push_back(make_event(1, 1, Detector::Ref));
  auto both = make_event(1, 1, Detector::Trans);
  both.photons.push_back({12.0, 100.0, Detector::Ref});
  evs.push_back(both);
  evs.push_back(make_event(1, 0));
  auto out_of_range = make_event(1, 1, Detector::Ref, 10.5, 18.0);
  evs.push_back(out_of_range);
  daq::DaqConfig cfg;
  daq::energy_select(evs, cfg);

  const auto open = coinc_counts(evs, Selection::Open, cfg);
  CHECK(open == CoincCounts{4, 2, 3, 1});
  const auto acc = coinc_counts(evs, Selection::Acceptance, cfg);
  CHECK(acc == CoincCounts{3, 2, 2, 1});
  const auto her = coinc_counts(evs, Selection::Heralded, cfg);
  CHECK(her == CoincCounts{3, 2, 1, 0});
  CoincCounts sum = open;
  sum += acc;
  CHECK(sum.n_trig == 7);
}

TEST_CASE("per-event port histograms") {
  std::vector<EventRecord> evs;
  evs.push_back(make_event(1, 0));
  evs.push_back(make_event(1, 1, Detector::Trans));
  evs.push_back(make_event(1, 2, Detector::Trans));
  auto both = make_event(1, 1, Detector::Trans);
  both.photons.push_back({10.0, 100.0, Detector::Ref});
  evs.push_back(both);
  evs.push_back(make_event(0, 1, Detector::Ref));
  const auto h = port_histogram(evs, Selection::Open, daq::DaqConfig{});
  CHECK(h.trans == std::vector<std::uint64_t>{1, 2, 1});
  CHECK(h.ref == std::vector<std::uint64_t>{1, 1, 0});
  CHECK(h.trig_only() == 1);
  CHECK(h.both == 1);
  CHECK(h.events() == 4);
}

TEST_CASE("sigma of unit pairs is exactly zero") {
  std::vector<EventRecord> evs(500, make_event(1, 1));
  const auto p = sigma(evs, 800.0, EnergyMode::SumWindow, Detector::Trans, daq::DaqConfig{});
  CHECK(p.sigma == 0.0);
  CHECK(p.samples == 500);
  CHECK(p.error == 0.0);
}

TEST_CASE("sigma against the Bernoulli closed form") {
  std::mt19937_64 rng(2);
  std::bernoulli_distribution b(0.5);
  std::vector<EventRecord> evs;
  for (int i = 0; i < 400000; ++i) evs.push_back(make_event(1, b(rng) ? 1 : 0));
  const auto p = sigma(evs, 800.0, EnergyMode::Open, Detector::Trans, daq::DaqConfig{});
  const double oracle = 0.5 * 0.5 / 1.5;
  CHECK(oracle == doctest::Approx(0.1667).epsilon(1e-3));
  CHECK(std::abs(p.sigma - oracle) < 5.0 * p.error);
  CHECK(std::abs(p.sigma - oracle) < 0.005);
}

TEST_CASE("two independent Poisson counters give sigma near one") {
  std::mt19937_64 rng(3);
  std::poisson_distribution<int> pois(2.0);
  std::vector<EventRecord> evs;
  while (evs.size() < 1000000) {
    const int nt = pois(rng), nh = pois(rng);
    if (nt == 0 && nh == 0) continue;
    evs.push_back(make_event(nt, nh));
  }
  const auto p = sigma(evs, 800.0, EnergyMode::Open, Detector::Trans, daq::DaqConfig{});
  CHECK(std::abs(p.sigma - 1.0) < 0.05);
}

TEST_CASE("sigma is symmetric under output relabelling") {
  std::mt19937_64 rng(4);
  std::poisson_distribution<int> pois(1.0);
  std::vector<EventRecord> evs;
  for (int i = 0; i < 200000; ++i) {
    EventRecord ev = make_event(1 + pois(rng), 0);
    for (int k = pois(rng); k > 0; --k) ev.photons.push_back({10.5, 50.0, Detector::Trans});
    for (int k = pois(rng); k > 0; --k) ev.photons.push_back({10.5, 50.0, Detector::Ref});
    evs.push_back(ev);
  }
  const auto t = sigma(evs, 800.0, EnergyMode::Open, Detector::Trans, daq::DaqConfig{});
  const auto r = sigma(evs, 800.0, EnergyMode::Open, Detector::Ref, daq::DaqConfig{});
  CHECK(std::abs(t.sigma - r.sigma) < 5.0 * std::hypot(t.error, r.error));
}

TEST_CASE("sigma time window and energy mode") {
  std::vector<EventRecord> evs;
  for (int i = 0; i < 50; ++i) {
    EventRecord ev = make_event(1, 0, Detector::Trans, 10.4);
    ev.photons.push_back({10.6, 500.0, Detector::Trans});
    evs.push_back(ev);
  }
  for (int i = 0; i < 50; ++i) evs.push_back(make_event(1, 1, Detector::Trans, 9.0, 9.0));
  for (int i = 0; i < 10; ++i) evs.push_back(make_event(1, 0, Detector::Trans, 21.2));
  for (int i = 0; i < 20; ++i) {
    EventRecord ev = make_event(1, 1);
    ev.photons.push_back({10.3, -500.0, Detector::Trig});
    ev.photons.push_back({10.5, 100.0, Detector::Ref});
    evs.push_back(ev);
  }
  auto oracle = [](std::initializer_list<std::tuple<int, int, int>> groups) {
    SigmaAccumulator acc;
    for (const auto& [n, nt, nh] : groups)
      for (int i = 0; i < n; ++i) acc.add(nt, nh);
    return acc;
  };
  const daq::DaqConfig cfg;
  const auto wide = sigma(evs, 800.0, EnergyMode::SumWindow, Detector::Trans, cfg);
  const auto wide_oracle = oracle({{50, 1, 1}, {10, 1, 0}, {20, 2, 1}});
  CHECK(wide.samples == wide_oracle.n);
  CHECK(wide.sigma == doctest::Approx(wide_oracle.sigma()).epsilon(1e-14));
  const auto narrow = sigma(evs, 200.0, EnergyMode::SumWindow, Detector::Trans, cfg);
  const auto narrow_oracle = oracle({{10, 1, 0}, {20, 1, 1}});
  CHECK(narrow.samples == narrow_oracle.n);
  CHECK(narrow.sigma == doctest::Approx(narrow_oracle.sigma()).epsilon(1e-14));
  CHECK(sigma(evs, 200.0, EnergyMode::Open, Detector::Trans, cfg).samples == 130);
  const auto open = sigma(evs, 800.0, EnergyMode::Open, Detector::Trans, cfg);
  CHECK(open.sigma == doctest::Approx(oracle({{100, 1, 1}, {10, 1, 0}, {20, 2, 1}}).sigma()).epsilon(1e-14));
  std::vector<EventRecord> one{make_event(1, 1)};
  CHECK_THROWS_AS(sigma(one, 800.0, EnergyMode::Open, Detector::Trans, cfg), EmptyEnsemble);
  CHECK_THROWS(sigma(evs, 0.0, EnergyMode::Open, Detector::Trans, cfg));
  CHECK_THROWS(sigma(evs, 100.0, EnergyMode::Open, Detector::Trig, cfg));
}

TEST_CASE("sigma accumulators merge exactly") {
  std::mt19937_64 rng(5);
  std::poisson_distribution<int> pois(3.0);
  SigmaAccumulator all, a, b;
  for (int i = 0; i < 10000; ++i) {
    const auto nt = static_cast<std::uint64_t>(pois(rng)), nh = static_cast<std::uint64_t>(pois(rng));
    all.add(nt, nh);
    (i % 3 == 0 ? a : b).add(nt, nh);
  }
  SigmaAccumulator ab = a, ba = b;
  ab += b;
  ba += a;
  CHECK(ab == all);
  CHECK(ba == all);
  CHECK(ab.sigma() == all.sigma());
  CHECK(all.sigma() >= 0.0);
}

TEST_CASE("histogram bins are left-closed with explicit overflow") {
  Histogram h(7.0, 17.0, 0.5);
  CHECK(h.bins() == 20);
  h.fill(7.0);
  h.fill(7.49);
  h.fill(7.5);
  h.fill(6.99);
  h.fill(17.0);
  CHECK(h.counts()[0] == 2);
  CHECK(h.counts()[1] == 1);
  CHECK(h.underflow() == 1);
  CHECK(h.overflow() == 1);
  CHECK(h.total() == 5);
  CHECK_THROWS(Histogram(7.0, 17.0, 0.0));
  CHECK_THROWS(Histogram(7.0, 7.0, 0.5));
}

TEST_CASE("spectra count heralded photons only") {
  std::vector<EventRecord> none;
  const auto empty = spectra(none, Detector::Ref, 0.5);
  CHECK(empty.total() == 0);

  std::vector<EventRecord> evs;
  for (int i = 0; i < 30; ++i) evs.push_back(make_event(1, 1, Detector::Ref, 10.5, 10.5));
  evs.push_back(make_event(1, 1, Detector::Ref, 9.0, 9.0));
  daq::energy_select(evs, daq::DaqConfig{});
  const auto h = spectra(evs, Detector::Ref, 0.5);
  CHECK(h.total() == 30);
  CHECK(h.counts()[7] == 30);
  CHECK(spectra(evs, Detector::Trans, 0.5).total() == 0);
}

TEST_CASE("full width at half maximum") {
  std::vector<double> x, y;
  for (int i = -100; i <= 100; ++i) {
    x.push_back(i * 0.01);
    y.push_back(std::exp(-0.5 * std::pow(i * 0.01 / 0.2, 2)));
  }
  CHECK(fwhm(x, y) == doctest::Approx(2.0 * std::sqrt(2.0 * std::log(2.0)) * 0.2).epsilon(1e-3));
  const std::vector<double> tri_x{0, 1, 2, 3, 4}, tri_y{0, 1, 2, 1, 0};
  CHECK(fwhm(tri_x, tri_y) == doctest::Approx(2.0));
  const std::vector<double> flat{0, 0, 0, 0, 0};
  CHECK(fwhm(tri_x, flat) == 0.0);
  CHECK(local_minima(tri_x, std::vector<double>{3, 1, 2, 0.5, 4}) == std::vector<double>{1, 3});
}

TEST_CASE("rates and ratios") {
  const auto n = rate(818, 88010.0);
  CHECK(n.value == doctest::Approx(0.0093).epsilon(1e-3));
  CHECK(n.error == doctest::Approx(std::sqrt(818.0) / 88010.0));
  const auto z = rate(0, 100.0);
  CHECK(z.value == 0.0);
  CHECK(z.one_sided);
  CHECK(z.error == doctest::Approx(kZeroCountUpper / 100.0));
  CHECK_THROWS(rate(5, 0.0));

  const auto r = ratio(818, 88010.0, {818.0 / 88010.0, 0.0, false});
  CHECK(r.value == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(r.error == doctest::Approx(1.0 / std::sqrt(818.0)));
  const auto rr = ratio(818, 88010.0, {0.0583, 0.0099, false});
  const double val = 818.0 / 88010.0 / 0.0583;
  CHECK(rr.value == doctest::Approx(val));
  CHECK(rr.error == doctest::Approx(val * std::sqrt(1.0 / 818 + std::pow(0.0099 / 0.0583, 2))));
  CHECK_THROWS(ratio(1, 1.0, {0.0, 0.0, false}));

  const auto ports = rates_and_ratios(818, 1443, 88010.0, {0.0583, 0.0099, false});
  CHECK(ports.n_t.value == doctest::Approx(0.0164).epsilon(1e-2));
  CHECK(ports.r_r.value == doctest::Approx(0.159).epsilon(1e-2));
  CHECK(ports.r_t.value == doctest::Approx(0.281).epsilon(1e-2));
}
