#pragma once

// Mosaic-crystal Bragg beam splitter with a Gaussian rocking curve.
//
// Two angles are in play and they are easy to confuse:
//  * the incidence deviation: how far the ray's glancing angle on the planes
//    sits from the nominal Bragg angle θ_B(E_nominal) (mounting offset plus the
//    photon's own in-plane direction);
//  * the rocking argument Δθ that enters the Gaussian
//        R(E, Δθ) = √A exp{−½[(Δθ + θ_B(E_nominal) − θ_B(E))/b]²}.
// DeviationReference selects how Δθ is derived from the incidence deviation.

#include "heraldx/xoptics.hpp"

namespace heraldx::splitter {

enum class DeviationReference {
  Nominal,        // Δθ = incidence deviation
  HeraldedBragg,  // Δθ = incidence angle − θ_B(E)
};

struct SplitterSpec {
  xoptics::LatticeSpec lattice = xoptics::hopg_002();
  double peak_reflectivity = 0.5;  // A
  double width_deg = 0.48;         // b
  double thickness_mm = 0.7;
  double nominal_energy_kev = 10.5;
  double mounting_offset_deg = 0.0;
  DeviationReference reference = DeviationReference::HeraldedBragg;
  int dispersion_sign = +1;  // orientation of the splitter's dispersion plane vs. photon θx

  void validate() const;
  double nominal_bragg_angle() const;  // rad
};

/// Amplitude reflectance, Δθ in degrees. Peak √A at the dispersion-matched locus.
double reflectance(const SplitterSpec& spec, double energy_kev, double dtheta_deg);

/// Δθ for the Gaussian given the incidence deviation (degrees).
double rocking_argument(const SplitterSpec& spec, double energy_kev, double incidence_dev_deg);

/// Intensity reflectivity R² for a ray at the given incidence deviation.
double reflectivity(const SplitterSpec& spec, double energy_kev, double incidence_dev_deg);

/// Transmitted intensity fraction (1 − R²)·exp(−μ t / sin θ_inc),
/// θ_inc = θ_B(nominal) + incidence deviation. Throws DomainError when θ_inc ≤ 0.
double transmission(const SplitterSpec& spec, double energy_kev, double incidence_dev_deg,
                    const xoptics::AttenuationTable& material);

/// Incidence deviation (degrees) of a photon whose in-plane direction is θx
/// radians away from the central ray.
double incidence_deviation_deg(const SplitterSpec& spec, double theta_x);

/// FWHM of R² versus Δθ: 2√(ln 2)·b.
double rocking_fwhm_deg(const SplitterSpec& spec);

struct Routing {
  double reflect = 0.0;
  double transmit = 0.0;
  double absorb = 0.0;
};

/// Per-photon branch probabilities; they sum to 1.
Routing route(const SplitterSpec& spec, double energy_kev, double incidence_dev_deg,
              const xoptics::AttenuationTable& material);

}  // namespace heraldx::splitter
