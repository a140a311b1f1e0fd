#include <cmath>
#include <numbers>
#include <ostream>

#include "heraldx/spdc.hpp"

namespace heraldx::spdc {

using xoptics::DomainError;

void GridSpec::validate() const {
  if (!(energy_hi_kev > energy_lo_kev) || !(energy_lo_kev > 0.0))
    throw DomainError("grid energy window must satisfy 0 < lo < hi");
  if (energy_points < 1 || theta_y_points < 1 || detuning_points < 1)
    throw DomainError("grid point counts must be positive");
  if (!(aperture_mrad > 0.0)) throw DomainError("grid aperture must be positive");
  if (!(detuning_lobes > 0.0)) throw DomainError("grid shell span must be positive");
}

GridSpec GridSpec::refined(int factor) const {
  GridSpec g = *this;
  g.energy_points *= factor;
  g.theta_y_points *= factor;
  g.detuning_points *= factor;
  return g;
}

JointAmplitude::JointAmplitude(Axis energy, Axis theta_y, int detuning_points, double half_aperture,
                               std::vector<double> row_center, std::vector<double> row_step,
                               std::vector<std::complex<double>> raw)
    : energy_(energy),
      theta_y_(theta_y),
      nx_(detuning_points),
      half_aperture_(half_aperture),
      row_center_(std::move(row_center)),
      row_step_(std::move(row_step)),
      amp_(std::move(raw)) {
  const auto n_rows = static_cast<std::size_t>(energy_.points) * theta_y_.points;
  if (row_center_.size() != n_rows || row_step_.size() != n_rows ||
      amp_.size() != n_rows * static_cast<std::size_t>(nx_))
    throw GridMismatch("joint amplitude storage does not match its axes");
  for (double s : row_step_)
    if (!(s > 0.0)) throw GridMismatch("joint amplitude row spacing must be positive");

  double total = 0.0;
  for (std::size_t r = 0; r < n_rows; ++r) {
    double row = 0.0;
    for (int ix = 0; ix < nx_; ++ix) row += std::norm(amp_[r * nx_ + ix]);
    total += row * row_volume(r);
  }
  if (!(total > 0.0)) throw DomainError("joint amplitude vanishes over the declared window");
  normalization_ = 1.0 / std::sqrt(total);
  for (auto& a : amp_) a *= normalization_;
}

double JointAmplitude::theta_x(int ie, int iy, int ix) const {
  const auto r = row_index(ie, iy);
  return row_center_[r] + (ix + 0.5 - 0.5 * nx_) * row_step_[r];
}

void JointAmplitude::write_csv(std::ostream& out) const {
  out << "energy_kev,theta_x_rad,theta_y_rad,intensity\n";
  for (int ie = 0; ie < energy_.points; ++ie)
    for (int iy = 0; iy < theta_y_.points; ++iy)
      for (int ix = 0; ix < nx_; ++ix)
        out << energy(ie) << ',' << theta_x(ie, iy, ix) << ',' << theta_y(iy) << ','
            << std::norm(at(ie, iy, ix)) << '\n';
}

namespace {

struct RowFill {
  const SpdcConfig& config;
  const PairGeometry& geometry;
  const GridSpec& grid;
  Axis energy, theta_y;
  double center, half_aperture;
  std::vector<double>& row_center;
  std::vector<double>& row_step;
  std::vector<std::complex<double>>& amp;

  void operator()(std::size_t row) const {
    const int nx = grid.detuning_points;
    const int ie = static_cast<int>(row / theta_y.points);
    const int iy = static_cast<int>(row % theta_y.points);
    const double e = energy.center(ie);
    const double phi = theta_y.center(iy);
    const double matched = geometry.phase_matched_angle(e, phi);
    const double slope = std::abs(geometry.mismatch_slope(e, {matched, phi}));
    const double lobe = 2.0 * std::numbers::pi / (geometry.length() * slope);
    const double step = 2.0 * grid.detuning_lobes * lobe / nx;
    row_center[row] = matched - center;
    row_step[row] = step;
    for (int ix = 0; ix < nx; ++ix) {
      const double theta = matched + (ix + 0.5 - 0.5 * nx) * step;
      auto& cell = amp[row * nx + ix];
      if (std::abs(theta - center) > half_aperture) {
        cell = 0.0;
        continue;
      }
      cell = raw_amplitude(config, geometry, e, {theta, phi});
    }
  }
};

}  // namespace

JointAmplitude biphoton_amplitude(const SpdcConfig& config, const GridSpec& grid, Backend backend) {
  grid.validate();
  const PairGeometry geometry(config);
  const double half_aperture = 0.5e-3 * grid.aperture_mrad;
  const Axis energy{grid.energy_lo_kev, grid.energy_hi_kev, grid.energy_points};
  const Axis theta_y{-half_aperture, half_aperture, grid.theta_y_points};
  const double center = geometry.degenerate_heralded_angle();

  const auto n_rows = static_cast<std::size_t>(energy.points) * theta_y.points;
  std::vector<double> row_center(n_rows), row_step(n_rows);
  std::vector<std::complex<double>> amp(n_rows * grid.detuning_points);
  const RowFill fill{config, geometry, grid, energy, theta_y, center, half_aperture,
                     row_center, row_step, amp};

  if (backend == Backend::Parallel) {
    const auto n = static_cast<std::int64_t>(n_rows);
#pragma omp parallel for schedule(static)
    for (std::int64_t r = 0; r < n; ++r) fill(static_cast<std::size_t>(r));
  } else {
    for (std::size_t r = 0; r < n_rows; ++r) fill(r);
  }

  JointAmplitude result(energy, theta_y, grid.detuning_points, half_aperture, std::move(row_center),
                        std::move(row_step), std::move(amp));
  result.center_theta = center;
  result.trigger_theta = geometry.degenerate_trigger_angle();
  return result;
}

}  // namespace heraldx::spdc
