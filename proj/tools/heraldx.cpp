#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "heraldx/config.hpp"
#include "heraldx/io.hpp"
#include "heraldx/pipeline.hpp"

namespace fs = std::filesystem;
using namespace heraldx;

namespace {

enum Exit { kOk = 0, kOther = 1, kConfig = 2, kIo = 3, kSchema = 4 };

struct Common {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
};

config::RunConfig resolve(const Common& c) {
  config::RunConfig cfg;
  if (!c.config_path.empty()) cfg = config::load(c.config_path);
  if (c.seed) cfg.seed = *c.seed;
  if (!c.out_dir.empty()) cfg.output_dir = c.out_dir;
  cfg.validate();
  return cfg;
}

void add_common(CLI::App* app, Common& c, bool with_seed) {
  app->add_option("-c,--config", c.config_path, "run configuration (INI)");
  app->add_option("-o,--out", c.out_dir, "output directory");
  if (with_seed) app->add_option("-s,--seed", c.seed, "RNG seed (overrides [run] seed)");
}

int cmd_model(const Common& c) {
  const auto cfg = resolve(c);
  const pipeline::Setup setup(cfg);
  const auto m = pipeline::run_model(setup);
  pipeline::write_model(m, cfg.output_dir);
  std::printf("r_R = %.4f  r_T = %.4f  (phase matching %.4f / %.4f deg)\n", m.r_reflect, m.r_transmit,
              m.pm_heralded_deg, m.pm_trigger_deg);
  return kOk;
}

int cmd_sweep(const Common& c, double width_scale) {
  const auto cfg = resolve(c);
  const pipeline::Setup setup(cfg);
  const auto base = pipeline::run_sweep(setup, 1.0);
  const auto wide = pipeline::run_sweep(setup, width_scale);
  pipeline::write_sweep(base, wide, fs::path(cfg.output_dir) / "bragg_sweep.csv");
  std::printf("%zu sweep points written to %s\n", base.size(), (fs::path(cfg.output_dir) / "bragg_sweep.csv").c_str());
  return kOk;
}

int cmd_simulate(const Common& c) {
  const auto cfg = resolve(c);
  const pipeline::Setup setup(cfg);
  pipeline::SimulationOptions opts;
  opts.out_dir = cfg.output_dir;
  const auto res = pipeline::simulate(setup, opts);
  std::printf("pair_rate = %.6g /s, %llu pulses, %zu events, %llu dropped triggers\n", res.pair_rate,
              static_cast<unsigned long long>(res.pulses), res.events.size(),
              static_cast<unsigned long long>(res.dropped));
  return kOk;
}

std::optional<stats::CoincCounts> parse_counts(const std::string& text) {
  if (text.empty()) return std::nullopt;
  const auto parts = io::split(text, ',');
  if (parts.size() != 4) throw config::ConfigError("--counts expects N,NT,NR,NTR");
  try {
    return stats::CoincCounts{io::parse_uint(parts[0]), io::parse_uint(parts[1]), io::parse_uint(parts[2]),
                              io::parse_uint(parts[3])};
  } catch (const io::SchemaError& e) {
    throw config::ConfigError(std::string("--counts: ") + e.what());
  }
}

int cmd_analyze(Common c, const std::string& events_path, const std::string& counts_text) {
  if (const auto counts = parse_counts(counts_text)) {
    const auto report = pipeline::alpha_report({{"injected", *counts}});
    std::cout << report;
    if (!c.out_dir.empty()) {
      auto out = io::open_output(fs::path(c.out_dir) / "alpha_table.txt");
      out << report;
    }
    return kOk;
  }
  if (events_path.empty()) throw config::ConfigError("analyze needs --events or --counts");
  const fs::path events_file = fs::is_directory(events_path) ? fs::path(events_path) / "events.csv" : fs::path(events_path);
  if (c.config_path.empty() && fs::exists(events_file.parent_path() / "run_config.ini"))
    c.config_path = (events_file.parent_path() / "run_config.ini").string();
  const auto cfg = resolve(c);

  auto in = io::open_input(events_file);
  auto events = io::read_events(in);
  const auto live = pipeline::read_live_time(events_file.parent_path() / "run_metadata.txt");
  const auto a = pipeline::analyze(events, cfg, live);
  pipeline::write_analysis(a, cfg.output_dir);
  std::printf("%zu events, heralded Trans %llu, Ref %llu\n", events.size(),
              static_cast<unsigned long long>(a.heralded_trans), static_cast<unsigned long long>(a.heralded_ref));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"heraldx: heralded x-ray photon beam-splitter experiment simulator"};
  app.require_subcommand(1);

  Common model_opts, sweep_opts, sim_opts, an_opts;
  double width_scale = 100.0;
  std::string events_path, counts_text;

  auto* model = app.add_subcommand("model", "model spectra, ratios and Bragg-angle sweep");
  add_common(model, model_opts, false);
  auto* sweep = app.add_subcommand("sweep", "reflected rate versus splitter Bragg angle");
  add_common(sweep, sweep_opts, false);
  sweep->add_option("--width-scale", width_scale, "rocking-width multiplier for the comparison curve");
  auto* sim = app.add_subcommand("simulate", "Monte Carlo photon streams through the coincidence electronics");
  add_common(sim, sim_opts, true);
  auto* an = app.add_subcommand("analyze", "spectra, sigma curves, coincidence counts and alpha");
  add_common(an, an_opts, false);
  an->add_option("-e,--events", events_path, "events.csv or a simulate output directory");
  an->add_option("--counts", counts_text, "N_Trig,N_Trig-T,N_Trig-R,N_Trig-T-R for a direct alpha report");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*model) return cmd_model(model_opts);
    if (*sweep) return cmd_sweep(sweep_opts, width_scale);
    if (*sim) return cmd_simulate(sim_opts);
    if (*an) return cmd_analyze(an_opts, events_path, counts_text);
  } catch (const config::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const io::SchemaError& e) {
    std::cerr << "format error: " << e.what() << '\n';
    return kSchema;
  } catch (const io::IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kOther;
  }
  return kOther;
}
