#pragma once

// X-ray optics primitives: photon energy, Bragg geometry, attenuation.
// Angles are radians throughout; degree helpers exist only for I/O.

#include <filesystem>
#include <iosfwd>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace heraldx::xoptics {

/// hc in keV·Å.
inline constexpr double kHcKevAngstrom = 12.39842;

inline constexpr double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
inline constexpr double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

/// Raised when no Bragg reflection exists or an angle leaves its domain.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raised when an attenuation lookup falls outside the tabulated range.
class ExtrapolationError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

class PhotonEnergy {
 public:
  explicit PhotonEnergy(double kev);

  double kev() const { return kev_; }
  double wavelength() const { return kHcKevAngstrom / kev_; }  // Å
  double wavenumber() const;                                   // 2π/λ, 1/Å

 private:
  double kev_;
};

struct LatticeSpec {
  std::string name;
  double d_spacing = 0.0;  // Å

  static LatticeSpec make(std::string name, double d_spacing);
};

/// HOPG (002), d = 3.354 Å.
LatticeSpec hopg_002();
/// Diamond (660), d = a/√72 with a = 3.56712 Å.
LatticeSpec diamond_660();
/// Lattice whose Bragg angle at `energy` equals `angle`.
LatticeSpec lattice_for_bragg_angle(PhotonEnergy energy, double angle, std::string name = "custom");

/// arcsin(λ/2d). Throws DomainError when λ > 2d.
double bragg_angle(PhotonEnergy energy, const LatticeSpec& lattice);
inline double bragg_angle_deg(PhotonEnergy energy, const LatticeSpec& lattice) {
  return rad_to_deg(bragg_angle(energy, lattice));
}

/// Inverse of bragg_angle; angle must lie in (0, π/2].
PhotonEnergy energy_for_bragg_angle(double angle, const LatticeSpec& lattice);

/// dθ_B/dE in rad/keV (negative).
double bragg_dispersion(PhotonEnergy energy, const LatticeSpec& lattice);

/// Mass attenuation table μ/ρ(E) for one material, log-log interpolated.
class AttenuationTable {
 public:
  AttenuationTable(std::string name, double density, std::vector<double> energies_kev,
                   std::vector<double> mu_over_rho);

  /// Two-column text (energy keV, μ/ρ cm²/g). '#' starts a comment;
  /// a comment line "# density: <g/cm3>" sets the density.
  static AttenuationTable parse(std::istream& in, std::string name);
  static AttenuationTable load(const std::filesystem::path& path);

  const std::string& name() const { return name_; }
  double density() const { return density_; }
  double min_energy() const { return energies_.front(); }
  double max_energy() const { return energies_.back(); }
  const std::vector<double>& energies() const { return energies_; }
  const std::vector<double>& values() const { return mu_over_rho_; }

  double mu_over_rho(double energy_kev) const;  // cm²/g
  double linear_mu(double energy_kev) const { return mu_over_rho(energy_kev) * density_; }  // 1/cm

 private:
  std::string name_;
  double density_;
  std::vector<double> energies_;
  std::vector<double> mu_over_rho_;
};

/// Directory of the bundled attenuation tables.
std::filesystem::path default_data_dir();
/// Loads <data_dir>/attenuation/<material>.dat.
AttenuationTable load_material(const std::string& material,
                               const std::filesystem::path& data_dir = default_data_dir());

/// exp(−μ·path). path_cm ≥ 0.
double transmittance(PhotonEnergy energy, const AttenuationTable& table, double path_cm);

/// Angles measured from the atomic planes, radians.
struct PlaneAngles {
  double pump = 0.0;
  double heralded = 0.0;
  double trigger = 0.0;
};

/// Δk_z = k_p cos θ_p − k_H cos θ_H − k_T cos θ_T in 1/Å, refractive index 1.
double phase_mismatch(PhotonEnergy pump, PhotonEnergy heralded, PhotonEnergy trigger,
                      const PlaneAngles& angles);

}  // namespace heraldx::xoptics
