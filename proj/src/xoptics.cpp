#include "heraldx/xoptics.hpp"

#include <cmath>
#include <numbers>

namespace heraldx::xoptics {

PhotonEnergy::PhotonEnergy(double kev) : kev_(kev) {
  if (!(kev > 0.0) || !std::isfinite(kev))
    throw DomainError("photon energy must be positive, got " + std::to_string(kev) + " keV");
}

double PhotonEnergy::wavenumber() const { return 2.0 * std::numbers::pi / wavelength(); }

LatticeSpec LatticeSpec::make(std::string name, double d_spacing) {
  if (!(d_spacing > 0.0) || !std::isfinite(d_spacing))
    throw DomainError("lattice spacing must be positive");
  return LatticeSpec{std::move(name), d_spacing};
}

LatticeSpec hopg_002() { return LatticeSpec::make("HOPG(002)", 3.354); }

LatticeSpec diamond_660() { return LatticeSpec::make("C(660)", 3.56712 / std::sqrt(72.0)); }

LatticeSpec lattice_for_bragg_angle(PhotonEnergy energy, double angle, std::string name) {
  if (!(angle > 0.0) || angle > std::numbers::pi / 2)
    throw DomainError("Bragg angle must lie in (0, 90] degrees");
  return LatticeSpec::make(std::move(name), energy.wavelength() / (2.0 * std::sin(angle)));
}

double bragg_angle(PhotonEnergy energy, const LatticeSpec& lattice) {
  const double s = energy.wavelength() / (2.0 * lattice.d_spacing);
  if (s > 1.0) {
    // λ = 2d computed through a round trip can land one ulp above 1.
    if (s - 1.0 < 1e-14) return std::numbers::pi / 2;
    throw DomainError("no Bragg reflection: wavelength " + std::to_string(energy.wavelength()) +
                      " Å exceeds 2d for " + lattice.name);
  }
  return std::asin(s);
}

PhotonEnergy energy_for_bragg_angle(double angle, const LatticeSpec& lattice) {
  if (!(angle > 0.0) || angle > std::numbers::pi / 2)
    throw DomainError("Bragg angle must lie in (0, 90] degrees");
  return PhotonEnergy(kHcKevAngstrom / (2.0 * lattice.d_spacing * std::sin(angle)));
}

double bragg_dispersion(PhotonEnergy energy, const LatticeSpec& lattice) {
  return -std::tan(bragg_angle(energy, lattice)) / energy.kev();
}

double transmittance(PhotonEnergy energy, const AttenuationTable& table, double path_cm) {
  if (path_cm < 0.0) throw DomainError("path length must be non-negative");
  if (path_cm == 0.0) return 1.0;
  return std::exp(-table.linear_mu(energy.kev()) * path_cm);
}

double phase_mismatch(PhotonEnergy pump, PhotonEnergy heralded, PhotonEnergy trigger,
                      const PlaneAngles& angles) {
  return pump.wavenumber() * std::cos(angles.pump) -
         heralded.wavenumber() * std::cos(angles.heralded) -
         trigger.wavenumber() * std::cos(angles.trigger);
}

}  // namespace heraldx::xoptics
