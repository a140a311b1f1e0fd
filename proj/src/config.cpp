#include "heraldx/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "heraldx/io.hpp"

namespace heraldx::config {

namespace {

using Setter = std::function<void(RunConfig&, const std::string&)>;
using Getter = std::function<std::string(const RunConfig&)>;

struct Key {
  std::string section;
  std::string name;
  Setter set;
  Getter get;
};

double to_double(const std::string& s) {
  try {
    return io::parse_double(s);
  } catch (const io::SchemaError&) {
    throw ConfigError("expected a number, got '" + s + "'");
  }
}

template <class Field>
Key real(std::string section, std::string name, Field field) {
  return {std::move(section), std::move(name), [field](RunConfig& c, const std::string& v) { field(c) = to_double(v); },
          [field](const RunConfig& c) { return io::format_double(field(const_cast<RunConfig&>(c))); }};
}

template <class Field>
Key integer(std::string section, std::string name, Field field) {
  return {std::move(section), std::move(name),
          [field](RunConfig& c, const std::string& v) {
            const double d = to_double(v);
            if (d != static_cast<int>(d)) throw ConfigError("expected an integer, got '" + v + "'");
            field(c) = static_cast<int>(d);
          },
          [field](const RunConfig& c) { return std::to_string(field(const_cast<RunConfig&>(c))); }};
}

template <class Field>
Key text(std::string section, std::string name, Field field) {
  return {std::move(section), std::move(name), [field](RunConfig& c, const std::string& v) { field(c) = v; },
          [field](const RunConfig& c) { return field(const_cast<RunConfig&>(c)); }};
}

template <class Field>
Key flag(std::string section, std::string name, Field field) {
  return {std::move(section), std::move(name),
          [field](RunConfig& c, const std::string& v) {
            if (v == "true" || v == "1")
              field(c) = true;
            else if (v == "false" || v == "0")
              field(c) = false;
            else
              throw ConfigError("expected true/false, got '" + v + "'");
          },
          [field](const RunConfig& c) { return std::string(field(const_cast<RunConfig&>(c)) ? "true" : "false"); }};
}

template <class Field>
Key lattice(std::string section, std::string name, Field field) {
  return {std::move(section), std::move(name),
          [field](RunConfig& c, const std::string& v) {
            if (v == "diamond_660")
              field(c) = xoptics::diamond_660();
            else if (v == "hopg_002")
              field(c) = xoptics::hopg_002();
            else
              field(c) = xoptics::LatticeSpec::make("custom", to_double(v));
          },
          [field](const RunConfig& c) {
            const auto& l = field(const_cast<RunConfig&>(c));
            if (l.d_spacing == xoptics::diamond_660().d_spacing) return std::string("diamond_660");
            if (l.d_spacing == xoptics::hopg_002().d_spacing) return std::string("hopg_002");
            return io::format_double(l.d_spacing);
          }};
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t");
  const auto e = s.find_last_not_of(" \t");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

std::vector<double> parse_list(const std::string& v) {
  std::vector<double> out;
  for (auto part : io::split(v, ',')) {
    const auto t = trim(std::string(part));
    if (!t.empty()) out.push_back(to_double(t));
  }
  return out;
}

std::string format_list(const std::vector<double>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + io::format_double(xs[i]);
  return s;
}

// "lo:hi:weight" entries, comma separated; lo == hi is a line.
mc::StraySpectrum parse_stray(const std::string& v) {
  std::vector<mc::StrayComponent> comps;
  for (auto part : io::split(v, ',')) {
    const auto fields = io::split(trim(std::string(part)), ':');
    if (fields.size() != 3) throw ConfigError("stray spectrum entries are lo:hi:weight, got '" + std::string(part) + "'");
    comps.push_back({to_double(std::string(fields[0])), to_double(std::string(fields[1])),
                     to_double(std::string(fields[2]))});
  }
  try {
    return mc::StraySpectrum(std::move(comps));
  } catch (const xoptics::DomainError& e) {
    throw ConfigError(e.what());
  }
}

std::string format_stray(const mc::StraySpectrum& s) {
  std::string out;
  for (const auto& c : s.components()) {
    if (!out.empty()) out += ',';
    out += io::format_double(c.lo_kev) + ':' + io::format_double(c.hi_kev) + ':' + io::format_double(c.weight);
  }
  return out;
}

void add_detector(std::vector<Key>& keys, const std::string& section, std::size_t d) {
  auto spec = [d](RunConfig& c) -> mc::DetectorSpec& { return c.detectors[d]; };
  keys.push_back(real(section, "efficiency", [spec](RunConfig& c) -> double& { return spec(c).efficiency; }));
  keys.push_back(real(section, "fwhm_ev", [spec](RunConfig& c) -> double& { return spec(c).fwhm_ev; }));
  keys.push_back(real(section, "reference_kev", [spec](RunConfig& c) -> double& { return spec(c).reference_kev; }));
  keys.push_back(real(section, "analog_width_ns", [spec](RunConfig& c) -> double& { return spec(c).analog_width_ns; }));
  keys.push_back(real(section, "logic_width_ns", [spec](RunConfig& c) -> double& { return spec(c).logic_width_ns; }));
  keys.push_back(real(section, "sca_lo_kev", [spec](RunConfig& c) -> double& { return spec(c).sca_lo_kev; }));
  keys.push_back(real(section, "sca_hi_kev", [spec](RunConfig& c) -> double& { return spec(c).sca_hi_kev; }));
}

const std::vector<Key>& registry() {
  static const std::vector<Key> keys = [] {
    std::vector<Key> k;
    k.push_back(real("spdc", "pump_energy_kev", [](RunConfig& c) -> double& { return c.spdc.pump_energy_kev; }));
    k.push_back(lattice("spdc", "crystal", [](RunConfig& c) -> xoptics::LatticeSpec& { return c.spdc.crystal; }));
    k.push_back(real("spdc", "thickness_mm", [](RunConfig& c) -> double& { return c.spdc.thickness_mm; }));
    k.push_back(real("spdc", "detune_deg", [](RunConfig& c) -> double& { return c.spdc.detune_deg; }));
    k.push_back(real("spdc", "heralded_angle_deg", [](RunConfig& c) -> double& { return c.spdc.heralded_angle_deg; }));
    k.push_back(real("spdc", "trigger_angle_deg", [](RunConfig& c) -> double& { return c.spdc.trigger_angle_deg; }));
    k.push_back(real("spdc", "coupling", [](RunConfig& c) -> double& { return c.spdc.coupling; }));

    k.push_back(lattice("splitter", "lattice", [](RunConfig& c) -> xoptics::LatticeSpec& { return c.splitter.lattice; }));
    k.push_back(text("splitter", "material", [](RunConfig& c) -> std::string& { return c.splitter_material; }));
    k.push_back(real("splitter", "peak_reflectivity", [](RunConfig& c) -> double& { return c.splitter.peak_reflectivity; }));
    k.push_back(real("splitter", "width_deg", [](RunConfig& c) -> double& { return c.splitter.width_deg; }));
    k.push_back(real("splitter", "thickness_mm", [](RunConfig& c) -> double& { return c.splitter.thickness_mm; }));
    k.push_back(real("splitter", "nominal_energy_kev", [](RunConfig& c) -> double& { return c.splitter.nominal_energy_kev; }));
    k.push_back(real("splitter", "mounting_offset_deg", [](RunConfig& c) -> double& { return c.splitter.mounting_offset_deg; }));
    k.push_back({"splitter", "deviation_reference",
                 [](RunConfig& c, const std::string& v) {
                   if (v == "heralded_bragg")
                     c.splitter.reference = splitter::DeviationReference::HeraldedBragg;
                   else if (v == "nominal")
                     c.splitter.reference = splitter::DeviationReference::Nominal;
                   else
                     throw ConfigError("deviation_reference is heralded_bragg or nominal, got '" + v + "'");
                 },
                 [](const RunConfig& c) {
                   return std::string(c.splitter.reference == splitter::DeviationReference::Nominal ? "nominal"
                                                                                                   : "heralded_bragg");
                 }});
    k.push_back(integer("splitter", "dispersion_sign", [](RunConfig& c) -> int& { return c.splitter.dispersion_sign; }));

    k.push_back(real("source", "pair_rate", [](RunConfig& c) -> double& { return c.source.pair_rate; }));
    k.push_back(real("source", "calibrate_ref_rate", [](RunConfig& c) -> double& { return c.calibrate_ref_rate; }));
    k.push_back(real("source", "stray_rate_trig", [](RunConfig& c) -> double& { return c.source.stray_rate[0]; }));
    k.push_back(real("source", "stray_rate_trans", [](RunConfig& c) -> double& { return c.source.stray_rate[1]; }));
    k.push_back(real("source", "stray_rate_ref", [](RunConfig& c) -> double& { return c.source.stray_rate[2]; }));
    k.push_back({"source", "stray_spectrum",
                 [](RunConfig& c, const std::string& v) { c.source.stray_spectrum = parse_stray(v); },
                 [](const RunConfig& c) { return format_stray(c.source.stray_spectrum); }});
    k.push_back(real("source", "duration_s", [](RunConfig& c) -> double& { return c.source.duration_s; }));
    k.push_back(real("source", "air_path_cm", [](RunConfig& c) -> double& { return c.source.air_path_cm; }));
    k.push_back(text("source", "air_material", [](RunConfig& c) -> std::string& { return c.air_material; }));
    k.push_back(real("source", "slice_s", [](RunConfig& c) -> double& { return c.source.slice_s; }));
    k.push_back(flag("source", "write_photons", [](RunConfig& c) -> bool& { return c.write_photons; }));

    add_detector(k, "detector.trig", 0);
    add_detector(k, "detector.trans", 1);
    add_detector(k, "detector.ref", 2);

    k.push_back(real("daq", "half_window_ns", [](RunConfig& c) -> double& { return c.daq.half_window_ns; }));
    k.push_back(real("daq", "max_rate", [](RunConfig& c) -> double& { return c.daq.max_rate; }));
    k.push_back(real("daq", "bucket_s", [](RunConfig& c) -> double& { return c.daq.bucket_s; }));
    const char* names[] = {"trig", "trans", "ref"};
    for (std::size_t d = 0; d < 3; ++d) {
      k.push_back(real("daq", std::string("acceptance_lo_kev_") + names[d],
                       [d](RunConfig& c) -> double& { return c.daq.acceptance[d].lo_kev; }));
      k.push_back(real("daq", std::string("acceptance_hi_kev_") + names[d],
                       [d](RunConfig& c) -> double& { return c.daq.acceptance[d].hi_kev; }));
    }
    k.push_back(real("daq", "sum_window_kev", [](RunConfig& c) -> double& { return c.daq.sum_window_kev; }));
    k.push_back({"daq", "sum_policy",
                 [](RunConfig& c, const std::string& v) {
                   if (v == "any_pair")
                     c.daq.sum_policy = daq::SumPolicy::AnyPair;
                   else if (v == "all_outputs")
                     c.daq.sum_policy = daq::SumPolicy::AllOutputs;
                   else
                     throw ConfigError("sum_policy is any_pair or all_outputs, got '" + v + "'");
                 },
                 [](const RunConfig& c) {
                   return std::string(c.daq.sum_policy == daq::SumPolicy::AnyPair ? "any_pair" : "all_outputs");
                 }});

    k.push_back(real("model", "energy_lo_kev", [](RunConfig& c) -> double& { return c.model.grid.energy_lo_kev; }));
    k.push_back(real("model", "energy_hi_kev", [](RunConfig& c) -> double& { return c.model.grid.energy_hi_kev; }));
    k.push_back(integer("model", "energy_points", [](RunConfig& c) -> int& { return c.model.grid.energy_points; }));
    k.push_back(real("model", "aperture_mrad", [](RunConfig& c) -> double& { return c.model.grid.aperture_mrad; }));
    k.push_back(integer("model", "theta_y_points", [](RunConfig& c) -> int& { return c.model.grid.theta_y_points; }));
    k.push_back(integer("model", "detuning_points", [](RunConfig& c) -> int& { return c.model.grid.detuning_points; }));
    k.push_back(real("model", "detuning_lobes", [](RunConfig& c) -> double& { return c.model.grid.detuning_lobes; }));
    k.push_back(real("model", "sweep_lo_deg", [](RunConfig& c) -> double& { return c.model.sweep_lo_deg; }));
    k.push_back(real("model", "sweep_hi_deg", [](RunConfig& c) -> double& { return c.model.sweep_hi_deg; }));
    k.push_back(integer("model", "sweep_points", [](RunConfig& c) -> int& { return c.model.sweep_points; }));
    k.push_back(real("model", "width_scale", [](RunConfig& c) -> double& { return c.model.width_scale; }));

    k.push_back(real("analysis", "bin_kev", [](RunConfig& c) -> double& { return c.analysis.bin_kev; }));
    k.push_back({"analysis", "sigma_windows_ns",
                 [](RunConfig& c, const std::string& v) { c.analysis.sigma_windows_ns = parse_list(v); },
                 [](const RunConfig& c) { return format_list(c.analysis.sigma_windows_ns); }});
    k.push_back(real("analysis", "baseline_rate", [](RunConfig& c) -> double& { return c.analysis.baseline_rate; }));
    k.push_back(real("analysis", "baseline_error", [](RunConfig& c) -> double& { return c.analysis.baseline_error; }));

    k.push_back({"run", "seed",
                 [](RunConfig& c, const std::string& v) {
                   try {
                     c.seed = io::parse_uint(v);
                   } catch (const io::SchemaError&) {
                     throw ConfigError("seed must be a non-negative integer, got '" + v + "'");
                   }
                 },
                 [](const RunConfig& c) { return c.seed ? std::to_string(*c.seed) : std::string(); }});
    k.push_back(text("run", "output_dir", [](RunConfig& c) -> std::string& { return c.output_dir; }));
    return k;
  }();
  return keys;
}

}  // namespace

void RunConfig::validate() const {
  try {
    spdc.validate();
    splitter.validate();
    source.validate();
    for (const auto& d : detectors) d.validate();
    daq.validate();
    model.grid.validate();
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  if (calibrate_ref_rate < 0.0) throw ConfigError("calibrate_ref_rate must be non-negative");
  if (!(model.sweep_lo_deg > 0.0 && model.sweep_hi_deg < 90.0 && model.sweep_lo_deg < model.sweep_hi_deg))
    throw ConfigError("sweep range must satisfy 0 < lo < hi < 90 degrees");
  if (model.sweep_points < 2) throw ConfigError("sweep needs at least two points");
  if (!(model.width_scale > 0.0)) throw ConfigError("width_scale must be positive");
  if (!(analysis.bin_kev > 0.0)) throw ConfigError("bin_kev must be positive");
  for (double w : analysis.sigma_windows_ns)
    if (!(w > 0.0)) throw ConfigError("sigma windows must be positive");
  if (!(analysis.baseline_rate > 0.0) || analysis.baseline_error < 0.0)
    throw ConfigError("baseline rate must be positive with non-negative error");
  if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
}

RunConfig parse(std::istream& in) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  std::map<std::pair<std::string, std::string>, const Key*> index;
  for (const auto& k : registry()) index[{k.section, k.name}] = &k;

  RunConfig c;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError("key '" + section + "' outside any section");
    for (const auto& [name, value] : body) {
      const auto it = index.find({section, name});
      if (it == index.end()) throw ConfigError("unknown key '" + section + "." + name + "'");
      try {
        const auto& raw = value.data();
        it->second->set(c, trim(raw.substr(0, raw.find_first_of(";#"))));
      } catch (const ConfigError& e) {
        throw ConfigError(section + "." + name + ": " + e.what());
      }
    }
  }
  c.validate();
  return c;
}

RunConfig load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw io::IoError("cannot read config " + path.string());
  return parse(in);
}

std::string dump(const RunConfig& c) {
  std::ostringstream out;
  std::string current;
  for (const auto& k : registry()) {
    const auto value = k.get(c);
    if (value.empty()) continue;
    if (k.section != current) {
      out << (current.empty() ? "" : "\n") << '[' << k.section << "]\n";
      current = k.section;
    }
    out << k.name << " = " << value << '\n';
  }
  return out.str();
}

std::vector<std::string> known_keys() {
  std::vector<std::string> out;
  for (const auto& k : registry()) out.push_back(k.section + "." + k.name);
  return out;
}

}  // namespace heraldx::config
