#include <cmath>

#include "heraldx/spdc.hpp"

namespace heraldx::spdc {

SpectralAngularFilter SpectralAngularFilter::constant(double value) {
  SpectralAngularFilter f;
  f.amplitude = [value](double, double, double) { return value; };
  return f;
}

LossFn no_loss() {
  return [](double) { return 1.0; };
}

LossFn air_loss(const xoptics::AttenuationTable& air, double path_cm) {
  return [air, path_cm](double e) { return xoptics::transmittance(xoptics::PhotonEnergy(e), air, path_cm); };
}

namespace {

void check_domain(const JointAmplitude& amp, const SpectralAngularFilter& filter) {
  if (!filter.amplitude) throw GridMismatch("filter has no transfer function");
  const auto& e = amp.energy_axis();
  if (filter.energy_lo > e.lo || filter.energy_hi < e.hi)
    throw GridMismatch("filter energy domain does not cover the amplitude window");
  if (filter.half_aperture < amp.half_aperture())
    throw GridMismatch("filter angular domain does not cover the amplitude window");
}

// Per-row weighted sums; rows are summed afterwards in a fixed order so the
// result does not depend on the thread count.
std::vector<double> row_sums(const JointAmplitude& amp, const SpectralAngularFilter& filter,
                             const LossFn& loss, Backend backend) {
  check_domain(amp, filter);
  const int ny = amp.theta_y_axis().points;
  const int nx = amp.detuning_points();
  std::vector<double> sums(amp.rows(), 0.0);
  const auto values = amp.values();

  auto one_row = [&](std::size_t row) {
    const int ie = static_cast<int>(row / ny);
    const int iy = static_cast<int>(row % ny);
    const double e = amp.energy(ie);
    const double ty = amp.theta_y(iy);
    double acc = 0.0;
    for (int ix = 0; ix < nx; ++ix) {
      const double w = std::norm(values[row * nx + ix]);
      if (w == 0.0) continue;
      const double f = filter.amplitude(e, amp.theta_x(ie, iy, ix), ty);
      acc += w * f * f;
    }
    sums[row] = acc * loss(e) * amp.row_volume(row);
  };

  if (backend == Backend::Parallel) {
    const auto n = static_cast<std::int64_t>(amp.rows());
#pragma omp parallel for schedule(dynamic, 16)
    for (std::int64_t r = 0; r < n; ++r) one_row(static_cast<std::size_t>(r));
  } else {
    for (std::size_t r = 0; r < amp.rows(); ++r) one_row(r);
  }
  return sums;
}

}  // namespace

double coincidence_rate(const JointAmplitude& amp, const SpectralAngularFilter& filter, const LossFn& loss,
                        Backend backend) {
  const auto sums = row_sums(amp, filter, loss, backend);
  double total = 0.0;
  for (double s : sums) total += s;
  return total;
}

std::vector<double> spectral_profile(const JointAmplitude& amp, const SpectralAngularFilter& filter,
                                     const LossFn& loss, Backend backend) {
  const auto sums = row_sums(amp, filter, loss, backend);
  const auto& e = amp.energy_axis();
  const int ny = amp.theta_y_axis().points;
  std::vector<double> profile(e.points, 0.0);
  for (int ie = 0; ie < e.points; ++ie) {
    double acc = 0.0;
    for (int iy = 0; iy < ny; ++iy) acc += sums[amp.row_index(ie, iy)];
    profile[ie] = acc / e.step();
  }
  return profile;
}

SpectralAngularFilter reflect_filter(const splitter::SplitterSpec& spec) {
  spec.validate();
  SpectralAngularFilter f;
  f.amplitude = [spec](double e, double tx, double) {
    return std::sqrt(splitter::reflectivity(spec, e, splitter::incidence_deviation_deg(spec, tx)));
  };
  return f;
}

SpectralAngularFilter transmit_filter(const splitter::SplitterSpec& spec,
                                      const xoptics::AttenuationTable& material) {
  spec.validate();
  SpectralAngularFilter f;
  f.energy_lo = material.min_energy();
  f.energy_hi = material.max_energy();
  f.amplitude = [spec, material](double e, double tx, double) {
    return std::sqrt(splitter::transmission(spec, e, splitter::incidence_deviation_deg(spec, tx), material));
  };
  return f;
}

SplitterFamily constant_width_family(splitter::SplitterSpec base) {
  return [base](double bragg_deg) {
    auto spec = base;
    spec.lattice = xoptics::lattice_for_bragg_angle(xoptics::PhotonEnergy(base.nominal_energy_kev),
                                                    xoptics::deg_to_rad(bragg_deg), "sweep");
    return spec;
  };
}

std::vector<SweepPoint> bragg_angle_sweep(const JointAmplitude& amp, const SplitterFamily& family,
                                          std::span<const double> bragg_deg, const LossFn& loss,
                                          Backend backend) {
  std::vector<SweepPoint> out;
  out.reserve(bragg_deg.size());
  for (double angle : bragg_deg) {
    if (!(angle > 0.0 && angle < 90.0)) throw xoptics::DomainError("sweep angles must lie in (0, 90) degrees");
    out.push_back({angle, coincidence_rate(amp, reflect_filter(family(angle)), loss, backend)});
  }
  return out;
}

}  // namespace heraldx::spdc
