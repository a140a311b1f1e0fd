#include <doctest.h>

#include <array>
#include <cmath>
#include <complex>
#include <numbers>

#include "heraldx/spdc.hpp"

using namespace heraldx;
using namespace heraldx::spdc;
using cplx = std::complex<double>;

namespace {

double k_of(double kev) { return 2.0 * std::numbers::pi * kev / xoptics::kHcKevAngstrom; }

// RK4 on dA/ds = g·B·e^{iφs}, dB/ds = g·A·e^{-iφs}, s = z/L, from (A, B) = (0, 1).
// A(1) is the heralded amplitude generated by a unit trigger vacuum mode.
cplx coupled_ode(double g, double phi, int steps) {
  std::array<cplx, 2> y{0.0, 1.0};
  const double h = 1.0 / steps;
  auto f = [&](double s, const std::array<cplx, 2>& v) {
    const cplx e = std::polar(1.0, phi * s);
    return std::array<cplx, 2>{g * v[1] * e, g * v[0] * std::conj(e)};
  };
  for (int i = 0; i < steps; ++i) {
    const double s = i * h;
    const auto k1 = f(s, y);
    const auto k2 = f(s + 0.5 * h, {y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]});
    const auto k3 = f(s + 0.5 * h, {y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]});
    const auto k4 = f(s + h, {y[0] + h * k3[0], y[1] + h * k3[1]});
    for (int j = 0; j < 2; ++j) y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
  }
  return y[0];
}

GridSpec small_grid() {
  GridSpec g;
  g.energy_points = 41;
  g.theta_y_points = 9;
  g.detuning_points = 21;
  return g;
}

}  // namespace

TEST_CASE("first-order amplitude agrees with the integrated coupled equations at kappa L = 0.01") {
  SpdcConfig cfg;
  cfg.coupling = 0.01;
  const PairGeometry geo(cfg);
  const auto grid = small_grid();
  const auto amp = biphoton_amplitude(cfg, grid, Backend::Serial);
  double max_diff = 0.0, max_first = 0.0;
  for (int ie = 0; ie < grid.energy_points; ie += 4)
    for (int iy = 0; iy < grid.theta_y_points; iy += 2)
      for (int ix = 0; ix < grid.detuning_points; ++ix) {
        const Direction d{amp.center_theta + amp.theta_x(ie, iy, ix), amp.theta_y(iy)};
        const double phi = geo.mismatch(amp.energy(ie), d) * geo.length();
        const cplx first = first_order_amplitude(cfg.coupling, phi);
        const cplx ode = coupled_ode(cfg.coupling, phi, 4000);
        max_diff = std::max(max_diff, std::abs(ode - first));
        max_first = std::max(max_first, std::abs(first));
      }
  CHECK(max_first > 0.0);
  CHECK(max_diff / max_first < 1e-3);
}

TEST_CASE("coupled equations depart from first order at high gain") {
  const double g = 1.0, phi = 0.0;
  const double exact = std::sinh(g);
  CHECK(std::abs(coupled_ode(g, phi, 4000)) == doctest::Approx(exact).epsilon(1e-9));
  CHECK(std::abs(std::abs(first_order_amplitude(g, phi)) - exact) > 0.1);
}

TEST_CASE("sinc and its small-argument branch") {
  CHECK(sinc(0.0) == 1.0);
  CHECK(sinc(1e-9) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(sinc(1.0000001e-8) == doctest::Approx(std::sin(1.0000001e-8) / 1.0000001e-8).epsilon(1e-15));
  CHECK(sinc(std::numbers::pi) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(sinc(-2.0) == doctest::Approx(std::sin(2.0) / 2.0));
  const auto a = first_order_amplitude(0.01, 3.0);
  CHECK(std::abs(a) == doctest::Approx(0.01 * std::sin(1.5) / 1.5));
  CHECK(std::arg(a) == doctest::Approx(1.5));
}

TEST_CASE("phase mismatch equals the longitudinal wavevector balance") {
  SpdcConfig cfg;
  const PairGeometry geo(cfg);
  const double g = 2.0 * std::numbers::pi / cfg.crystal.d_spacing;
  for (double e : {9.7, 10.5, 11.3})
    for (double dtheta : {-2e-3, 0.0, 1.5e-3}) {
      const Direction h{geo.degenerate_heralded_angle() + dtheta, 0.0};
      const auto t = geo.trigger(e, h);
      const double kp = k_of(cfg.pump_energy_kev), kh = k_of(e), kt = k_of(cfg.pump_energy_kev - e);
      const double expect = kp * std::cos(geo.pump_angle()) - kh * std::cos(h.theta) - kt * std::cos(t.theta);
      CHECK(geo.mismatch(e, h) == doctest::Approx(expect).epsilon(1e-9));
      CHECK(kh * std::sin(h.theta) + kt * std::sin(t.theta) ==
            doctest::Approx(g - kp * std::sin(geo.pump_angle())).epsilon(1e-12));
    }
}

TEST_CASE("phase-matched directions of the degenerate pair") {
  SpdcConfig cfg;
  const PairGeometry geo(cfg);
  const double deg = 180.0 / std::numbers::pi;
  CHECK(geo.mismatch(10.5, {geo.degenerate_heralded_angle(), 0.0}) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(geo.degenerate_heralded_angle() * deg == doctest::Approx(45.5617).epsilon(1e-5));
  CHECK(geo.degenerate_trigger_angle() * deg == doctest::Approx(43.6469).epsilon(1e-5));
  CHECK(std::abs(geo.degenerate_heralded_angle() * deg - cfg.heralded_angle_deg) < 0.05);
  CHECK(std::abs(geo.degenerate_trigger_angle() * deg - cfg.trigger_angle_deg) < 0.05);
  for (double e : {9.6, 10.2, 11.4}) {
    const double th = geo.phase_matched_angle(e, 1e-3);
    CHECK(std::abs(geo.mismatch(e, {th, 1e-3})) * geo.length() < 1e-6);
  }
}

TEST_CASE("mismatch slope matches a finite difference") {
  SpdcConfig cfg;
  const PairGeometry geo(cfg);
  for (double e : {9.8, 10.5, 11.2}) {
    const Direction d{geo.phase_matched_angle(e, 0.0) + 5e-4, 1e-3};
    const double h = 1e-7;
    const double fd =
        (geo.mismatch(e, {d.theta + h, d.phi}) - geo.mismatch(e, {d.theta - h, d.phi})) / (2.0 * h);
    CHECK(geo.mismatch_slope(e, d) == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("joint amplitude is normalised over the grid") {
  const auto amp = biphoton_amplitude(SpdcConfig{}, small_grid(), Backend::Serial);
  double total = 0.0;
  for (std::size_t r = 0; r < amp.rows(); ++r) {
    double row = 0.0;
    for (int ix = 0; ix < amp.detuning_points(); ++ix) row += std::norm(amp.values()[r * amp.detuning_points() + ix]);
    total += row * amp.row_volume(r);
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(coincidence_rate(amp, SpectralAngularFilter::constant(1.0), no_loss(), Backend::Serial) ==
        doctest::Approx(1.0).epsilon(1e-12));
  for (int ie = 0; ie < amp.energy_axis().points; ++ie)
    for (int iy = 0; iy < amp.theta_y_axis().points; ++iy)
      for (int ix = 0; ix < amp.detuning_points(); ++ix)
        if (std::abs(amp.theta_x(ie, iy, ix)) > amp.half_aperture()) CHECK(amp.at(ie, iy, ix) == cplx(0.0));
}

TEST_CASE("serial and parallel backends agree") {
  const auto grid = small_grid();
  const auto s = biphoton_amplitude(SpdcConfig{}, grid, Backend::Serial);
  const auto p = biphoton_amplitude(SpdcConfig{}, grid, Backend::Parallel);
  REQUIRE(s.size() == p.size());
  for (std::size_t i = 0; i < s.size(); ++i) CHECK(s.values()[i] == p.values()[i]);

  const auto f = reflect_filter(splitter::SplitterSpec{});
  CHECK(coincidence_rate(s, f, no_loss(), Backend::Serial) ==
        doctest::Approx(coincidence_rate(s, f, no_loss(), Backend::Parallel)).epsilon(1e-12));
  const auto ps = spectral_profile(s, f, no_loss(), Backend::Serial);
  const auto pp = spectral_profile(s, f, no_loss(), Backend::Parallel);
  REQUIRE(ps.size() == pp.size());
  for (std::size_t i = 0; i < ps.size(); ++i) CHECK(ps[i] == doctest::Approx(pp[i]).epsilon(1e-12));
}

TEST_CASE("spectral profile integrates to the coincidence rate") {
  const auto amp = biphoton_amplitude(SpdcConfig{}, small_grid(), Backend::Serial);
  const auto f = reflect_filter(splitter::SplitterSpec{});
  const auto prof = spectral_profile(amp, f, no_loss(), Backend::Serial);
  double sum = 0.0;
  for (double v : prof) sum += v * amp.energy_axis().step();
  CHECK(sum == doctest::Approx(coincidence_rate(amp, f, no_loss(), Backend::Serial)).epsilon(1e-10));
}

TEST_CASE("filters must cover the amplitude window") {
  const auto amp = biphoton_amplitude(SpdcConfig{}, small_grid(), Backend::Serial);
  auto f = SpectralAngularFilter::constant(1.0);
  f.energy_lo = 10.0;
  CHECK_THROWS_AS(coincidence_rate(amp, f, no_loss()), GridMismatch);
  f = SpectralAngularFilter::constant(1.0);
  f.half_aperture = 1e-4;
  CHECK_THROWS_AS(spectral_profile(amp, f, no_loss()), GridMismatch);
  f = SpectralAngularFilter{};
  CHECK_THROWS_AS(coincidence_rate(amp, f, no_loss()), GridMismatch);
}

TEST_CASE("configuration and grid validation") {
  SpdcConfig cfg;
  cfg.coupling = 0.02;
  CHECK_THROWS_AS(cfg.validate(), xoptics::DomainError);
  cfg.coupling = 0.0;
  CHECK_THROWS_AS(cfg.validate(), xoptics::DomainError);
  cfg = SpdcConfig{};
  cfg.thickness_mm = -1.0;
  CHECK_THROWS_AS(PairGeometry{cfg}, xoptics::DomainError);
  GridSpec g;
  g.energy_hi_kev = g.energy_lo_kev;
  CHECK_THROWS_AS(g.validate(), xoptics::DomainError);
  g = GridSpec{};
  g.detuning_points = 0;
  CHECK_THROWS_AS(g.validate(), xoptics::DomainError);
  CHECK(GridSpec{}.refined(2).energy_points == 2 * GridSpec{}.energy_points);
}

TEST_CASE("air loss lowers the rate") {
  const auto amp = biphoton_amplitude(SpdcConfig{}, small_grid(), Backend::Serial);
  const auto air = xoptics::load_material("air");
  const auto one = SpectralAngularFilter::constant(1.0);
  const double lossy = coincidence_rate(amp, one, air_loss(air, 10.0), Backend::Serial);
  CHECK(lossy < 1.0);
  CHECK(lossy > 0.9);
}

TEST_CASE("constant-width sweep falls with the splitter Bragg angle") {
  const auto amp = biphoton_amplitude(SpdcConfig{}, small_grid(), Backend::Serial);
  std::vector<double> angles;
  for (double a = 5.0; a <= 45.0; a += 2.5) angles.push_back(a);
  const auto sweep = bragg_angle_sweep(amp, constant_width_family(splitter::SplitterSpec{}), angles, no_loss());
  REQUIRE(sweep.size() == angles.size());
  for (std::size_t i = 1; i < sweep.size(); ++i) CHECK(sweep[i].rate < sweep[i - 1].rate);
  const auto fam = constant_width_family(splitter::SplitterSpec{});
  CHECK(xoptics::bragg_angle_deg(xoptics::PhotonEnergy(10.5), fam(30.0).lattice) == doctest::Approx(30.0));
}
