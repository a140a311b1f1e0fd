#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "heraldx/xoptics.hpp"

namespace heraldx::xoptics {

AttenuationTable::AttenuationTable(std::string name, double density, std::vector<double> energies_kev,
                                   std::vector<double> mu_over_rho)
    : name_(std::move(name)),
      density_(density),
      energies_(std::move(energies_kev)),
      mu_over_rho_(std::move(mu_over_rho)) {
  if (!(density_ > 0.0)) throw DomainError(name_ + ": density must be positive");
  if (energies_.size() < 2 || energies_.size() != mu_over_rho_.size())
    throw DomainError(name_ + ": attenuation table needs at least two (energy, mu/rho) rows");
  for (std::size_t i = 0; i < energies_.size(); ++i) {
    if (!(energies_[i] > 0.0) || !(mu_over_rho_[i] > 0.0))
      throw DomainError(name_ + ": attenuation table values must be positive");
    if (i > 0 && !(energies_[i] > energies_[i - 1]))
      throw DomainError(name_ + ": attenuation energies must be strictly increasing");
  }
}

AttenuationTable AttenuationTable::parse(std::istream& in, std::string name) {
  double density = 0.0;
  std::vector<double> e, mu;
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) {
      auto comment = line.substr(hash + 1);
      auto key = comment.find("density:");
      if (key != std::string::npos) density = std::stod(comment.substr(key + 8));
      line.erase(hash);
    }
    std::istringstream row(line);
    double energy, value;
    if (!(row >> energy)) continue;
    if (!(row >> value)) throw DomainError(name + ": malformed attenuation row '" + line + "'");
    e.push_back(energy);
    mu.push_back(value);
  }
  return AttenuationTable(std::move(name), density, std::move(e), std::move(mu));
}

AttenuationTable AttenuationTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open attenuation table " + path.string());
  return parse(in, path.stem().string());
}

double AttenuationTable::mu_over_rho(double energy_kev) const {
  if (energy_kev < energies_.front() || energy_kev > energies_.back())
    throw ExtrapolationError(name_ + ": energy " + std::to_string(energy_kev) +
                             " keV outside tabulated range");
  auto hi = std::upper_bound(energies_.begin(), energies_.end(), energy_kev);
  if (hi == energies_.end()) return mu_over_rho_.back();
  const auto i = static_cast<std::size_t>(hi - energies_.begin());
  const double le0 = std::log(energies_[i - 1]), le1 = std::log(energies_[i]);
  const double lm0 = std::log(mu_over_rho_[i - 1]), lm1 = std::log(mu_over_rho_[i]);
  const double t = (std::log(energy_kev) - le0) / (le1 - le0);
  return std::exp(lm0 + t * (lm1 - lm0));
}

std::filesystem::path default_data_dir() {
  if (const char* env = std::getenv("HERALDX_DATA_DIR")) return env;
  return HERALDX_DATA_DIR;
}

AttenuationTable load_material(const std::string& material, const std::filesystem::path& data_dir) {
  return AttenuationTable::load(data_dir / "attenuation" / (material + ".dat"));
}

}  // namespace heraldx::xoptics
