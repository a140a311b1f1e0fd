#include <cmath>
#include <numbers>

#include "heraldx/spdc.hpp"

namespace heraldx::spdc {

using xoptics::DomainError;
using xoptics::PhotonEnergy;

void SpdcConfig::validate() const {
  if (!(coupling > 0.0) || coupling > kMaxCoupling)
    throw DomainError("coupling κL must lie in (0, 0.01]: the first-order solution is low-gain only");
  if (!(thickness_mm > 0.0)) throw DomainError("SPDC crystal thickness must be positive");
  (void)xoptics::bragg_angle(PhotonEnergy(pump_energy_kev), crystal);
}

PairGeometry::PairGeometry(const SpdcConfig& config)
    : pump_kev_(config.pump_energy_kev), length_(config.thickness_mm * 1e7) {
  config.validate();
  const PhotonEnergy pump(pump_kev_);
  pump_angle_ = xoptics::bragg_angle(pump, config.crystal) + xoptics::deg_to_rad(config.detune_deg);
  const double kp = pump.wavenumber();
  const double g = 2.0 * std::numbers::pi / config.crystal.d_spacing;
  qx_ = g - kp * std::sin(pump_angle_);
  qz_ = kp * std::cos(pump_angle_);
  q_angle_ = std::atan2(qx_, qz_);
  degenerate_theta_ = phase_matched_angle(0.5 * pump_kev_, 0.0);
}

double PairGeometry::mismatch(double heralded_kev, Direction h) const {
  const double kh = PhotonEnergy(heralded_kev).wavenumber();
  const double kt = PhotonEnergy(pump_kev_ - heralded_kev).wavenumber();
  const double khx = kh * std::sin(h.theta) * std::cos(h.phi);
  const double khy = kh * std::sin(h.phi);
  const double khz = kh * std::cos(h.theta) * std::cos(h.phi);
  const double ktx = qx_ - khx;
  const double kt_perp2 = ktx * ktx + khy * khy;
  if (kt_perp2 > kt * kt) throw DomainError("no trigger direction conserves transverse momentum");
  return qz_ - khz - std::sqrt(kt * kt - kt_perp2);
}

double PairGeometry::mismatch_slope(double heralded_kev, Direction h) const {
  const double kh = PhotonEnergy(heralded_kev).wavenumber();
  const double kt = PhotonEnergy(pump_kev_ - heralded_kev).wavenumber();
  const double cphi = std::cos(h.phi);
  const double khy = kh * std::sin(h.phi);
  const double ktx = qx_ - kh * std::sin(h.theta) * cphi;
  const double ktz = std::sqrt(kt * kt - ktx * ktx - khy * khy);
  return kh * std::sin(h.theta) * cphi - ktx * kh * std::cos(h.theta) * cphi / ktz;
}

Direction PairGeometry::trigger(double heralded_kev, Direction h) const {
  const double kh = PhotonEnergy(heralded_kev).wavenumber();
  const double kt = PhotonEnergy(pump_kev_ - heralded_kev).wavenumber();
  const double ktx = qx_ - kh * std::sin(h.theta) * std::cos(h.phi);
  const double kty = -kh * std::sin(h.phi);
  const double ktz2 = kt * kt - ktx * ktx - kty * kty;
  if (ktz2 < 0.0) throw DomainError("no trigger direction conserves transverse momentum");
  return Direction{std::atan2(ktx, std::sqrt(ktz2)), std::asin(kty / kt)};
}

double PairGeometry::phase_matched_angle(double heralded_kev, double phi) const {
  // Scan outward from the pump+G direction for the first sign change, then bisect.
  constexpr double kStep = 1e-3;
  constexpr int kMaxSteps = 400;
  double lo = q_angle_ + 1e-9;
  double f_lo = mismatch(heralded_kev, {lo, phi});
  double hi = lo;
  double f_hi = f_lo;
  int step = 0;
  for (; step < kMaxSteps; ++step) {
    hi = lo + kStep;
    f_hi = mismatch(heralded_kev, {hi, phi});
    if ((f_lo < 0.0) != (f_hi < 0.0)) break;
    lo = hi;
    f_lo = f_hi;
  }
  if (step == kMaxSteps)
    throw DomainError("no phase-matched direction for heralded energy " + std::to_string(heralded_kev));
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double f_mid = mismatch(heralded_kev, {mid, phi});
    if ((f_mid < 0.0) == (f_lo < 0.0)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double PairGeometry::degenerate_trigger_angle() const {
  return trigger(0.5 * pump_kev_, {degenerate_theta_, 0.0}).theta;
}

double sinc(double x) {
  if (std::abs(x) < 1e-8) return 1.0 - x * x / 6.0;
  return std::sin(x) / x;
}

std::complex<double> first_order_amplitude(double coupling, double mismatch_times_length) {
  const double half = 0.5 * mismatch_times_length;
  return coupling * sinc(half) * std::polar(1.0, half);
}

std::complex<double> raw_amplitude(const SpdcConfig& config, const PairGeometry& geometry,
                                   double heralded_kev, Direction heralded) {
  return first_order_amplitude(config.coupling,
                               geometry.mismatch(heralded_kev, heralded) * geometry.length());
}

}  // namespace heraldx::spdc
