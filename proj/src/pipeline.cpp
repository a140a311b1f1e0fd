#include "heraldx/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "heraldx/io.hpp"
#include "heraldx/montecarlo.hpp"

namespace heraldx::pipeline {

using mc::Detector;

Setup::Setup(const config::RunConfig& cfg, spdc::Backend backend)
    : cfg_((cfg.validate(), cfg)),
      splitter_material_(xoptics::load_material(cfg.splitter_material)),
      air_(xoptics::load_material(cfg.air_material)),
      amp_(spdc::biphoton_amplitude(cfg.spdc, cfg.model.grid, backend)) {}

spdc::LossFn Setup::pair_loss() const {
  const double path = cfg_.source.air_path_cm;
  const double pump = cfg_.spdc.pump_energy_kev;
  if (path == 0.0) return spdc::no_loss();
  return [air = air_, path, pump](double e) {
    return xoptics::transmittance(xoptics::PhotonEnergy(e), air, path) *
           xoptics::transmittance(xoptics::PhotonEnergy(pump - e), air, path);
  };
}

double Setup::ref_yield_per_pair() const {
  const auto& trig = cfg_.detectors[mc::index_of(Detector::Trig)];
  const auto& ref = cfg_.detectors[mc::index_of(Detector::Ref)];
  const double reflected = spdc::coincidence_rate(amp_, spdc::reflect_filter(cfg_.splitter), pair_loss());
  const double e_h = cfg_.splitter.nominal_energy_kev;
  const double sigma_sum = std::hypot(trig.sigma_kev(cfg_.spdc.pump_energy_kev - e_h), ref.sigma_kev(e_h));
  const double half = 0.5 * cfg_.daq.sum_window_kev;
  const double sum_pass = sigma_sum > 0.0 ? std::erf(half / (std::sqrt(2.0) * sigma_sum)) : 1.0;
  return reflected * trig.efficiency * ref.efficiency * sum_pass;
}

double Setup::pair_rate() const {
  if (cfg_.calibrate_ref_rate == 0.0) return cfg_.source.pair_rate;
  const double y = ref_yield_per_pair();
  if (!(y > 0.0)) throw config::ConfigError("cannot calibrate pair rate: no heralded Ref yield");
  return cfg_.calibrate_ref_rate / y;
}

std::vector<spdc::SweepPoint> run_sweep(const Setup& setup, double width_scale, spdc::Backend backend) {
  const auto& cfg = setup.config();
  const auto loss = setup.pair_loss();
  const double reference = spdc::coincidence_rate(setup.amplitude(), spdc::SpectralAngularFilter::constant(1.0),
                                                   loss, backend);
  std::vector<double> angles(cfg.model.sweep_points);
  for (int i = 0; i < cfg.model.sweep_points; ++i)
    angles[i] = cfg.model.sweep_lo_deg +
                (cfg.model.sweep_hi_deg - cfg.model.sweep_lo_deg) * i / (cfg.model.sweep_points - 1);
  auto base = cfg.splitter;
  base.width_deg *= width_scale;
  auto points = spdc::bragg_angle_sweep(setup.amplitude(), spdc::constant_width_family(base), angles, loss, backend);
  for (auto& p : points) p.rate /= reference;
  return points;
}

ModelResult run_model(const Setup& setup, spdc::Backend backend) {
  const auto& cfg = setup.config();
  const auto& amp = setup.amplitude();
  const auto loss = setup.pair_loss();
  ModelResult m;
  m.pm_heralded_deg = xoptics::rad_to_deg(amp.center_theta);
  m.pm_trigger_deg = xoptics::rad_to_deg(amp.trigger_theta);

  const auto none = spdc::SpectralAngularFilter::constant(1.0);
  const auto refl = spdc::reflect_filter(cfg.splitter);
  const auto trans = spdc::transmit_filter(cfg.splitter, setup.splitter_material());
  m.reference_rate = spdc::coincidence_rate(amp, none, loss, backend);
  m.reflect_rate = spdc::coincidence_rate(amp, refl, loss, backend);
  m.transmit_rate = spdc::coincidence_rate(amp, trans, loss, backend);
  m.r_reflect = m.reflect_rate / m.reference_rate;
  m.r_transmit = m.transmit_rate / m.reference_rate;

  auto wide = cfg.splitter;
  wide.width_deg *= cfg.model.width_scale;
  m.wide_reflect_rate = spdc::coincidence_rate(amp, spdc::reflect_filter(wide), loss, backend);
  m.width_gain = m.wide_reflect_rate / m.reflect_rate;

  m.sweep = run_sweep(setup, 1.0, backend);

  for (int ie = 0; ie < amp.energy_axis().points; ++ie) m.energies.push_back(amp.energy(ie));
  m.reference_profile = spdc::spectral_profile(amp, none, loss, backend);
  m.reflect_profile = spdc::spectral_profile(amp, refl, loss, backend);
  m.transmit_profile = spdc::spectral_profile(amp, trans, loss, backend);
  m.reflect_fwhm_kev = stats::fwhm(m.energies, m.reflect_profile);
  m.transmit_fwhm_kev = stats::fwhm(m.energies, m.transmit_profile);
  m.transmit_minima_kev = stats::local_minima(m.energies, m.transmit_profile);
  return m;
}

void write_sweep(const std::vector<spdc::SweepPoint>& base, const std::vector<spdc::SweepPoint>& wide,
                 const std::filesystem::path& path) {
  io::Table t;
  t.columns = {"bragg_deg", "rate", "wide_rate"};
  for (std::size_t i = 0; i < base.size(); ++i)
    t.rows.push_back({io::format_double(base[i].bragg_deg), io::format_double(base[i].rate),
                      i < wide.size() ? io::format_double(wide[i].rate) : std::string()});
  auto out = io::open_output(path);
  io::write_table(out, "sweep", t);
}

void write_model(const ModelResult& m, const std::filesystem::path& dir) {
  write_sweep(m.sweep, {}, dir / "bragg_sweep.csv");

  io::Table spectra;
  spectra.columns = {"energy_keV", "reference", "reflected", "transmitted"};
  for (std::size_t i = 0; i < m.energies.size(); ++i)
    spectra.rows.push_back({io::format_double(m.energies[i]), io::format_double(m.reference_profile[i]),
                            io::format_double(m.reflect_profile[i]), io::format_double(m.transmit_profile[i])});
  {
    auto out = io::open_output(dir / "model_spectra.csv");
    io::write_table(out, "model-spectra", spectra);
  }

  auto out = io::open_output(dir / "model_summary.txt");
  out << "# heraldx-model v1\n"
      << "pm_heralded_deg = " << io::format_double(m.pm_heralded_deg) << '\n'
      << "pm_trigger_deg = " << io::format_double(m.pm_trigger_deg) << '\n'
      << "reference_rate = " << io::format_double(m.reference_rate) << '\n'
      << "reflect_rate = " << io::format_double(m.reflect_rate) << '\n'
      << "transmit_rate = " << io::format_double(m.transmit_rate) << '\n'
      << "r_R = " << io::format_double(m.r_reflect) << '\n'
      << "r_T = " << io::format_double(m.r_transmit) << '\n'
      << "wide_reflect_rate = " << io::format_double(m.wide_reflect_rate) << '\n'
      << "width_gain = " << io::format_double(m.width_gain) << '\n'
      << "reflect_fwhm_keV = " << io::format_double(m.reflect_fwhm_kev) << '\n'
      << "transmit_fwhm_keV = " << io::format_double(m.transmit_fwhm_kev) << '\n'
      << "transmit_minima_keV =";
  for (double e : m.transmit_minima_kev) out << ' ' << io::format_double(e);
  out << '\n';
}

SimulationResult simulate(const Setup& setup, const SimulationOptions& opts) {
  const auto& cfg = setup.config();
  if (!cfg.seed) throw config::ConfigError("a seed is required for simulation");

  auto source = cfg.source;
  source.seed = *cfg.seed;
  source.pair_rate = setup.pair_rate();

  const mc::PairSampler sampler(setup.amplitude());
  mc::PairOptics optics{cfg.splitter, setup.splitter_material(), std::nullopt, cfg.spdc.pump_energy_kev};
  if (source.air_path_cm > 0.0) optics.air = setup.air();
  const mc::SliceSource src(source, cfg.detectors, &sampler, &optics);

  std::optional<std::ofstream> events_file, pulses_file;
  std::optional<io::EventWriter> events_out;
  std::optional<io::PulseWriter> pulses_out;
  if (opts.out_dir) {
    events_file = io::open_output(*opts.out_dir / "events.csv");
    events_out.emplace(*events_file);
    if (cfg.write_photons) {
      pulses_file = io::open_output(*opts.out_dir / "photons.csv");
      pulses_out.emplace(*pulses_file);
    }
  }

  SimulationResult res;
  res.pair_rate = source.pair_rate;
  res.live_s = source.duration_s;
  daq::CoincidenceUnit unit(cfg.daq);
  auto drain = [&] {
    for (auto& ev : unit.take_events()) {
      if (events_out) events_out->write(ev);
      res.events.push_back(std::move(ev));
    }
  };

  const std::size_t per_batch = std::max<std::size_t>(1, opts.slices_per_batch);
  for (std::size_t first = 0; first < src.slice_count(); first += per_batch) {
    const auto batch = src.batch(first, per_batch, opts.backend);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      res.pulses += batch[i].size();
      if (pulses_out) pulses_out->write(batch[i]);
      unit.push(batch[i], src.slice_span(first + i).end_ns);
      drain();
    }
  }
  unit.finish();
  drain();
  res.triggers = unit.triggers();
  res.dropped = unit.dropped();

  if (opts.out_dir) {
    if (!*events_file) throw io::IoError("failed writing events.csv");
    auto meta = io::open_output(*opts.out_dir / "run_metadata.txt");
    meta << "# heraldx-run v1\n"
         << "seed = " << source.seed << '\n'
         << "pair_rate = " << io::format_double(res.pair_rate) << '\n'
         << "live_s = " << io::format_double(res.live_s) << '\n'
         << "pulses = " << res.pulses << '\n'
         << "triggers = " << res.triggers << '\n'
         << "dropped_triggers = " << res.dropped << '\n'
         << "events = " << res.events.size() << '\n';
    auto conf = io::open_output(*opts.out_dir / "run_config.ini");
    conf << config::dump(cfg);
  }
  return res;
}

AnalysisResult analyze(std::vector<daq::EventRecord>& events, const config::RunConfig& cfg,
                       std::optional<double> live_s) {
  daq::energy_select(events, cfg.daq);
  AnalysisResult a;
  a.trans_spectrum = stats::spectra(events, Detector::Trans, cfg.analysis.bin_kev);
  a.ref_spectrum = stats::spectra(events, Detector::Ref, cfg.analysis.bin_kev);

  for (Detector out : {Detector::Trans, Detector::Ref})
    for (auto mode : {stats::EnergyMode::SumWindow, stats::EnergyMode::Open})
      for (double w : cfg.analysis.sigma_windows_ns) {
        try {
          a.sigma.push_back(stats::sigma(events, w, mode, out, cfg.daq));
        } catch (const stats::EmptyEnsemble&) {
        }
      }

  for (auto s : {stats::Selection::Heralded, stats::Selection::Acceptance, stats::Selection::Open}) {
    a.counts.emplace_back(s, stats::coinc_counts(events, s, cfg.daq));
    a.port_histograms.emplace_back(s, stats::port_histogram(events, s, cfg.daq));
  }

  for (const auto& ev : events) {
    if (!ev.passes_sum) continue;
    bool t = false, r = false;
    for (const auto& p : ev.photons) {
      if (!p.heralded) continue;
      t |= p.detector == Detector::Trans;
      r |= p.detector == Detector::Ref;
    }
    a.heralded_trans += t;
    a.heralded_ref += r;
  }
  if (live_s && *live_s > 0.0)
    a.rates = stats::rates_and_ratios(a.heralded_ref, a.heralded_trans, *live_s,
                                      {cfg.analysis.baseline_rate, cfg.analysis.baseline_error, false});
  return a;
}

std::string alpha_report(const std::vector<std::pair<std::string, stats::CoincCounts>>& rows) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%-12s %10s %10s %10s %10s %10s %10s\n", "selection", "N_Trig", "N_Trig-T",
                "N_Trig-R", "N_Trig-T-R", "alpha", "error");
  out << line;
  for (const auto& [name, c] : rows) {
    const auto a = stats::alpha(c);
    std::string alpha = "undefined", err = "-";
    if (a.defined) {
      std::snprintf(line, sizeof line, "%.4f", a.alpha);
      alpha = line;
      std::snprintf(line, sizeof line, a.one_sided ? "<%.4f" : "%.4f", a.error);
      err = line;
    }
    std::snprintf(line, sizeof line, "%-12s %10llu %10llu %10llu %10llu %10s %10s\n", name.c_str(),
                  static_cast<unsigned long long>(c.n_trig), static_cast<unsigned long long>(c.n_trig_t),
                  static_cast<unsigned long long>(c.n_trig_r), static_cast<unsigned long long>(c.n_trig_t_r),
                  alpha.c_str(), err.c_str());
    out << line;
  }
  return out.str();
}

void write_analysis(const AnalysisResult& a, const std::filesystem::path& dir) {
  {
    auto out = io::open_output(dir / "spectrum_trans.csv");
    io::write_histogram(out, a.trans_spectrum);
  }
  {
    auto out = io::open_output(dir / "spectrum_ref.csv");
    io::write_histogram(out, a.ref_spectrum);
  }
  {
    auto out = io::open_output(dir / "sigma_curves.csv");
    io::write_sigma(out, a.sigma);
  }
  std::vector<io::NamedCounts> named;
  std::vector<std::pair<std::string, stats::CoincCounts>> rows;
  for (const auto& [s, c] : a.counts) {
    named.push_back({std::string(stats::to_string(s)), c});
    rows.emplace_back(std::string(stats::to_string(s)), c);
  }
  {
    auto out = io::open_output(dir / "counts.csv");
    io::write_counts(out, named);
  }
  {
    std::vector<io::NamedPortHistogram> hists;
    for (const auto& [s, h] : a.port_histograms) hists.push_back({std::string(stats::to_string(s)), h});
    auto out = io::open_output(dir / "port_histograms.csv");
    io::write_port_histograms(out, hists);
  }
  {
    auto out = io::open_output(dir / "alpha_table.txt");
    out << alpha_report(rows);
  }
  auto out = io::open_output(dir / "analysis_summary.txt");
  out << "# heraldx-analysis v1\n"
      << "heralded_trans = " << a.heralded_trans << '\n'
      << "heralded_ref = " << a.heralded_ref << '\n'
      << "trans_fwhm_keV = " << io::format_double(stats::fwhm(a.trans_spectrum)) << '\n'
      << "ref_fwhm_keV = " << io::format_double(stats::fwhm(a.ref_spectrum)) << '\n';
  if (a.rates) {
    auto put = [&](const char* name, const stats::Measured& m) {
      out << name << " = " << io::format_double(m.value) << " +- " << io::format_double(m.error)
          << (m.one_sided ? " (upper)" : "") << '\n';
    };
    put("n_R", a.rates->n_r);
    put("n_T", a.rates->n_t);
    put("r_R", a.rates->r_r);
    put("r_T", a.rates->r_t);
  }
}

std::optional<double> read_live_time(const std::filesystem::path& metadata) {
  std::ifstream in(metadata);
  if (!in) return std::nullopt;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto key = line.substr(0, eq);
    key.erase(key.find_last_not_of(' ') + 1);
    if (key != "live_s") continue;
    auto value = line.substr(eq + 1);
    value.erase(0, value.find_first_not_of(' '));
    return io::parse_double(value);
  }
  return std::nullopt;
}

}  // namespace heraldx::pipeline
