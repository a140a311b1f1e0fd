#include "heraldx/splitter.hpp"

#include <algorithm>
#include <cmath>

namespace heraldx::splitter {

using xoptics::DomainError;
using xoptics::PhotonEnergy;

void SplitterSpec::validate() const {
  if (!(peak_reflectivity > 0.0 && peak_reflectivity <= 1.0))
    throw DomainError("splitter peak reflectivity must lie in (0, 1]");
  if (!(width_deg > 0.0)) throw DomainError("splitter width b must be positive");
  if (!(thickness_mm > 0.0)) throw DomainError("splitter thickness must be positive");
  if (dispersion_sign != 1 && dispersion_sign != -1)
    throw DomainError("splitter dispersion_sign must be +1 or -1");
  (void)nominal_bragg_angle();
}

double SplitterSpec::nominal_bragg_angle() const {
  return xoptics::bragg_angle(PhotonEnergy(nominal_energy_kev), lattice);
}

double reflectance(const SplitterSpec& spec, double energy_kev, double dtheta_deg) {
  const double matched = xoptics::rad_to_deg(spec.nominal_bragg_angle() -
                                             xoptics::bragg_angle(PhotonEnergy(energy_kev), spec.lattice));
  const double u = (dtheta_deg + matched) / spec.width_deg;
  return std::sqrt(spec.peak_reflectivity) * std::exp(-0.5 * u * u);
}

double rocking_argument(const SplitterSpec& spec, double energy_kev, double incidence_dev_deg) {
  if (spec.reference == DeviationReference::Nominal) return incidence_dev_deg;
  const double incidence = xoptics::rad_to_deg(spec.nominal_bragg_angle()) + incidence_dev_deg;
  return incidence - xoptics::bragg_angle_deg(PhotonEnergy(energy_kev), spec.lattice);
}

double reflectivity(const SplitterSpec& spec, double energy_kev, double incidence_dev_deg) {
  const double r = reflectance(spec, energy_kev, rocking_argument(spec, energy_kev, incidence_dev_deg));
  return r * r;
}

double transmission(const SplitterSpec& spec, double energy_kev, double incidence_dev_deg,
                    const xoptics::AttenuationTable& material) {
  const double incidence = spec.nominal_bragg_angle() + xoptics::deg_to_rad(incidence_dev_deg);
  if (!(incidence > 0.0)) throw DomainError("splitter incidence angle must be positive");
  const double path_cm = 0.1 * spec.thickness_mm / std::sin(incidence);
  const double absorbed = xoptics::transmittance(PhotonEnergy(energy_kev), material, path_cm);
  return (1.0 - reflectivity(spec, energy_kev, incidence_dev_deg)) * absorbed;
}

double incidence_deviation_deg(const SplitterSpec& spec, double theta_x) {
  return spec.mounting_offset_deg + spec.dispersion_sign * xoptics::rad_to_deg(theta_x);
}

double rocking_fwhm_deg(const SplitterSpec& spec) {
  return 2.0 * std::sqrt(std::log(2.0)) * spec.width_deg;
}

Routing route(const SplitterSpec& spec, double energy_kev, double incidence_dev_deg,
              const xoptics::AttenuationTable& material) {
  Routing r;
  r.reflect = reflectivity(spec, energy_kev, incidence_dev_deg);
  r.transmit = transmission(spec, energy_kev, incidence_dev_deg, material);
  r.absorb = std::max(0.0, 1.0 - r.reflect - r.transmit);
  return r;
}

}  // namespace heraldx::splitter
