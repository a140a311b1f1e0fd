#pragma once

// Biphoton amplitude of x-ray SPDC in the low-gain limit and the filtered
// coincidence-rate integrator built on it.
//
// Geometry: z runs along the atomic planes inside the scattering plane, x along
// the reciprocal lattice vector G (plane normal), y out of the scattering plane.
// A direction is (θ, φ): θ the glancing angle to the planes in the scattering
// plane, φ the out-of-plane tilt. Transverse momentum (x with G, and y) is
// conserved exactly, so the trigger direction is fixed by the heralded one;
// the residual mismatch Δk_z weights the pair through sinc(Δk_z L/2).

#include <complex>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <stdexcept>
#include <span>
#include <vector>

#include "heraldx/splitter.hpp"
#include "heraldx/xoptics.hpp"

namespace heraldx::spdc {

enum class Backend { Serial, Parallel };

inline constexpr double kMaxCoupling = 0.01;

struct SpdcConfig {
  double pump_energy_kev = 21.0;
  xoptics::LatticeSpec crystal = xoptics::diamond_660();
  double thickness_mm = 0.8;
  double detune_deg = 0.008;           // pump rotation away from the Bragg angle
  double heralded_angle_deg = 45.59;   // nominal detector/splitter arm, reported only
  double trigger_angle_deg = 43.63;    // nominal trigger arm, reported only
  double coupling = 0.01;              // κL

  void validate() const;
};

struct Direction {
  double theta = 0.0;  // rad, to the planes
  double phi = 0.0;    // rad, out of plane
};

class PairGeometry {
 public:
  explicit PairGeometry(const SpdcConfig& config);

  double pump_energy() const { return pump_kev_; }
  double pump_angle() const { return pump_angle_; }
  double length() const { return length_; }  // Å

  /// Δk_z for a heralded photon of the given energy and direction (1/Å).
  double mismatch(double heralded_kev, Direction heralded) const;
  /// ∂Δk_z/∂θ at fixed energy and φ.
  double mismatch_slope(double heralded_kev, Direction heralded) const;
  /// Trigger direction from transverse momentum conservation.
  Direction trigger(double heralded_kev, Direction heralded) const;
  /// Phase-matched θ on the heralded (larger-angle) branch of the emission cone.
  double phase_matched_angle(double heralded_kev, double phi) const;

  double degenerate_heralded_angle() const { return degenerate_theta_; }
  double degenerate_trigger_angle() const;

 private:
  double pump_kev_;
  double pump_angle_;
  double length_;
  double qx_, qz_;  // pump + G
  double q_angle_;
  double degenerate_theta_;
};

/// sin(x)/x with the series branch below |x| < 1e-8.
double sinc(double x);

/// κL·sinc(ΔkL/2)·exp(iΔkL/2): first-order output of the coupled equations.
std::complex<double> first_order_amplitude(double coupling, double mismatch_times_length);

struct GridSpec {
  double energy_lo_kev = 9.5;
  double energy_hi_kev = 11.5;
  int energy_points = 201;
  double aperture_mrad = 5.0;  // full angular window, both transverse axes
  int theta_y_points = 41;
  int detuning_points = 41;    // samples across the phase-matching shell
  double detuning_lobes = 4.0; // half-span of the shell axis in sinc lobes

  void validate() const;
  GridSpec refined(int factor) const;
};

/// Cell-centred uniform axis.
struct Axis {
  double lo = 0.0;
  double hi = 1.0;
  int points = 1;

  double step() const { return (hi - lo) / points; }
  double center(int i) const { return lo + (i + 0.5) * step(); }
};

/// Discretised two-photon amplitude over heralded energy × (θy, shell offset).
/// Each (energy, θy) row samples θx = center(row) + ξ with its own ξ spacing;
/// θx is measured from the degenerate phase-matching direction.
class JointAmplitude {
 public:
  JointAmplitude(Axis energy, Axis theta_y, int detuning_points, double half_aperture,
                 std::vector<double> row_center, std::vector<double> row_step,
                 std::vector<std::complex<double>> raw);

  const Axis& energy_axis() const { return energy_; }
  const Axis& theta_y_axis() const { return theta_y_; }
  int detuning_points() const { return nx_; }
  std::size_t rows() const { return row_center_.size(); }
  std::size_t size() const { return amp_.size(); }
  double half_aperture() const { return half_aperture_; }

  std::size_t row_index(int ie, int iy) const { return static_cast<std::size_t>(ie) * theta_y_.points + iy; }
  std::size_t index(int ie, int iy, int ix) const { return row_index(ie, iy) * nx_ + ix; }

  double energy(int ie) const { return energy_.center(ie); }
  double theta_y(int iy) const { return theta_y_.center(iy); }
  double theta_x(int ie, int iy, int ix) const;
  double row_volume(std::size_t row) const { return energy_.step() * theta_y_.step() * row_step_[row]; }

  std::complex<double> at(int ie, int iy, int ix) const { return amp_[index(ie, iy, ix)]; }
  std::span<const std::complex<double>> values() const { return amp_; }
  /// Multiplier that took raw amplitudes to the normalised ones.
  double normalization() const { return normalization_; }

  /// CSV rows (energy_kev, theta_x_rad, theta_y_rad, intensity).
  void write_csv(std::ostream& out) const;

  double center_theta = 0.0;   // absolute θ of the window centre, rad
  double trigger_theta = 0.0;  // absolute θ of the conjugate trigger direction

 private:
  Axis energy_;
  Axis theta_y_;
  int nx_;
  double half_aperture_;
  std::vector<double> row_center_;
  std::vector<double> row_step_;
  std::vector<std::complex<double>> amp_;
  double normalization_ = 1.0;
};

/// Raw (unnormalised) first-order amplitude at an arbitrary heralded state.
std::complex<double> raw_amplitude(const SpdcConfig& config, const PairGeometry& geometry,
                                   double heralded_kev, Direction heralded);

JointAmplitude biphoton_amplitude(const SpdcConfig& config, const GridSpec& grid,
                                  Backend backend = Backend::Parallel);

/// Amplitude transfer over the grid; θx, θy relative to the window centre.
struct SpectralAngularFilter {
  double energy_lo = -std::numeric_limits<double>::infinity();
  double energy_hi = std::numeric_limits<double>::infinity();
  double half_aperture = std::numeric_limits<double>::infinity();
  std::function<double(double energy_kev, double theta_x, double theta_y)> amplitude;

  static SpectralAngularFilter constant(double value);
};

using LossFn = std::function<double(double energy_kev)>;
LossFn no_loss();
LossFn air_loss(const xoptics::AttenuationTable& air, double path_cm);

class GridMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Σ|amp|²·|filter|²·loss·cell volume.
double coincidence_rate(const JointAmplitude& amp, const SpectralAngularFilter& filter,
                        const LossFn& loss, Backend backend = Backend::Parallel);

/// Same integrand, marginalised onto the energy axis (density per keV).
std::vector<double> spectral_profile(const JointAmplitude& amp, const SpectralAngularFilter& filter,
                                     const LossFn& loss, Backend backend = Backend::Parallel);

SpectralAngularFilter reflect_filter(const splitter::SplitterSpec& spec);
SpectralAngularFilter transmit_filter(const splitter::SplitterSpec& spec,
                                      const xoptics::AttenuationTable& material);

struct SweepPoint {
  double bragg_deg = 0.0;
  double rate = 0.0;
};

using SplitterFamily = std::function<splitter::SplitterSpec(double bragg_deg)>;

/// Keeps A, b and the nominal energy of `base`; picks the lattice spacing
/// that puts the nominal energy at the requested Bragg angle.
SplitterFamily constant_width_family(splitter::SplitterSpec base);

std::vector<SweepPoint> bragg_angle_sweep(const JointAmplitude& amp, const SplitterFamily& family,
                                          std::span<const double> bragg_deg, const LossFn& loss,
                                          Backend backend = Backend::Parallel);

}  // namespace heraldx::spdc
