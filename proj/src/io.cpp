#include "heraldx/io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <system_error>

namespace heraldx::io {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw SchemaError("not a number: '" + std::string(s) + "'");
  return v;
}

std::uint64_t parse_uint(std::string_view s) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw SchemaError("not a non-negative integer: '" + std::string(s) + "'");
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const auto next = s.find(sep, pos);
    out.push_back(s.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

namespace {

std::string tag_line(std::string_view kind) { return "# heraldx-" + std::string(kind) + " v1"; }

std::string join(const std::vector<std::string>& fields) {
  std::string line;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) line += ',';
    line += fields[i];
  }
  return line;
}

void write_header(std::ostream& out, std::string_view kind, std::span<const std::string_view> columns) {
  out << tag_line(kind) << '\n';
  for (std::size_t i = 0; i < columns.size(); ++i) out << (i ? "," : "") << columns[i];
  out << '\n';
}

bool read_line(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

constexpr std::string_view kEventColumns[] = {"event",       "trigger_time_ns", "partner", "acceptance", "sum",
                                              "detector",    "energy_keV",      "offset_ns", "origin", "heralded"};
constexpr std::string_view kPulseColumns[] = {"start_ns", "detector",        "energy_keV",     "true_energy_keV",
                                              "origin",   "analog_width_ns", "logic_width_ns"};
constexpr std::string_view kHistColumns[] = {"bin", "lo_keV", "hi_keV", "count"};
constexpr std::string_view kSigmaColumns[] = {"output", "mode", "window_ns", "sigma", "error", "samples"};
constexpr std::string_view kCountColumns[] = {"selection", "n_trig", "n_trig_t", "n_trig_r", "n_trig_t_r"};
constexpr std::string_view kPortColumns[] = {"selection", "photons", "trans_events", "ref_events"};

template <class F>
auto guarded(std::size_t row, F&& f) {
  try {
    return f();
  } catch (const std::invalid_argument& e) {
    throw SchemaError("row " + std::to_string(row) + ": " + e.what());
  }
}

bool parse_bool(std::string_view s) {
  if (s == "1") return true;
  if (s == "0") return false;
  throw SchemaError("not a 0/1 flag: '" + std::string(s) + "'");
}

}  // namespace

void write_table(std::ostream& out, std::string_view kind, const Table& table) {
  out << tag_line(kind) << '\n' << join(table.columns) << '\n';
  for (const auto& row : table.rows) out << join(row) << '\n';
}

Table read_table(std::istream& in, std::string_view kind, std::span<const std::string_view> columns) {
  std::string line;
  if (!read_line(in, line) || line != tag_line(kind))
    throw SchemaError("expected '" + tag_line(kind) + "' header, found '" + line + "'");
  if (!read_line(in, line)) throw SchemaError("missing column header");
  Table t;
  for (auto c : split(line, ',')) t.columns.emplace_back(c);
  if (t.columns.size() != columns.size()) throw SchemaError("column count mismatch in " + std::string(kind));
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (t.columns[i] != columns[i]) throw SchemaError("unexpected column '" + t.columns[i] + "'");
  while (read_line(in, line)) {
    if (line.empty()) continue;
    auto fields = split(line, ',');
    if (fields.size() != columns.size())
      throw SchemaError("row " + std::to_string(t.rows.size() + 1) + " has " + std::to_string(fields.size()) +
                        " fields, expected " + std::to_string(columns.size()));
    t.rows.emplace_back(fields.begin(), fields.end());
  }
  return t;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  return in;
}

EventWriter::EventWriter(std::ostream& out) : out_(&out) { write_header(out, kEventsKind, kEventColumns); }

void EventWriter::write(const daq::EventRecord& ev) {
  auto& o = *out_;
  const std::string prefix = std::to_string(next_) + ',' + format_double(ev.trigger_time_ns) + ',' +
                             std::string(mc::to_string(ev.partner)) + ',' + (ev.passes_acceptance ? "1" : "0") +
                             ',' + (ev.passes_sum ? "1" : "0") + ',';
  if (ev.photons.empty()) o << prefix << "none,,,,\n";
  for (const auto& p : ev.photons)
    o << prefix << mc::to_string(p.detector) << ',' << format_double(p.energy_kev) << ','
      << format_double(p.offset_ns) << ',' << mc::to_string(p.origin) << ',' << (p.heralded ? 1 : 0) << '\n';
  ++next_;
}

void write_events(std::ostream& out, std::span<const daq::EventRecord> events) {
  EventWriter w(out);
  for (const auto& ev : events) w.write(ev);
}

std::vector<daq::EventRecord> read_events(std::istream& in) {
  const auto t = read_table(in, kEventsKind, kEventColumns);
  std::vector<daq::EventRecord> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& f = t.rows[r];
    guarded(r + 1, [&] {
      const auto index = parse_uint(f[0]);
      if (index != out.size() && !(index + 1 == out.size()))
        throw SchemaError("row " + std::to_string(r + 1) + ": event index out of sequence");
      if (index == out.size()) {
        daq::EventRecord ev;
        ev.trigger_time_ns = parse_double(f[1]);
        ev.partner = mc::parse_detector(f[2]);
        ev.passes_acceptance = parse_bool(f[3]);
        ev.passes_sum = parse_bool(f[4]);
        out.push_back(std::move(ev));
      }
      if (f[5] == "none") return 0;
      daq::RegisteredPhoton p;
      p.detector = mc::parse_detector(f[5]);
      p.energy_kev = parse_double(f[6]);
      p.offset_ns = parse_double(f[7]);
      p.origin = mc::parse_origin(f[8]);
      p.heralded = parse_bool(f[9]);
      out.back().photons.push_back(p);
      return 0;
    });
  }
  return out;
}

PulseWriter::PulseWriter(std::ostream& out) : out_(&out) { write_header(out, kPulsesKind, kPulseColumns); }

void PulseWriter::write(std::span<const mc::PulseRecord> pulses) {
  for (const auto& p : pulses)
    *out_ << format_double(p.start_ns) << ',' << mc::to_string(p.detector) << ',' << format_double(p.energy_kev)
          << ',' << format_double(p.true_energy_kev) << ',' << mc::to_string(p.origin) << ','
          << format_double(p.analog_width_ns) << ',' << format_double(p.logic_width_ns) << '\n';
}

std::vector<mc::PulseRecord> read_pulses(std::istream& in) {
  const auto t = read_table(in, kPulsesKind, kPulseColumns);
  std::vector<mc::PulseRecord> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& f = t.rows[r];
    out.push_back(guarded(r + 1, [&] {
      mc::PulseRecord p;
      p.start_ns = parse_double(f[0]);
      p.detector = mc::parse_detector(f[1]);
      p.energy_kev = parse_double(f[2]);
      p.true_energy_kev = parse_double(f[3]);
      p.origin = mc::parse_origin(f[4]);
      p.analog_width_ns = parse_double(f[5]);
      p.logic_width_ns = parse_double(f[6]);
      return p;
    }));
  }
  return out;
}

void write_histogram(std::ostream& out, const stats::Histogram& h) {
  write_header(out, "histogram", kHistColumns);
  out << "under,," << format_double(h.lo()) << ',' << h.underflow() << '\n';
  for (std::size_t i = 0; i < h.bins(); ++i)
    out << i << ',' << format_double(h.bin_lo(i)) << ',' << format_double(h.bin_lo(i + 1)) << ',' << h.counts()[i]
        << '\n';
  out << "over," << format_double(h.bin_lo(h.bins())) << ",," << h.overflow() << '\n';
}

stats::Histogram read_histogram(std::istream& in) {
  const auto t = read_table(in, "histogram", kHistColumns);
  if (t.rows.size() < 3 || t.rows.front()[0] != "under" || t.rows.back()[0] != "over")
    throw SchemaError("histogram needs underflow, bins and overflow rows");
  const std::size_t n = t.rows.size() - 2;
  std::vector<std::uint64_t> counts(n);
  double lo = 0.0, width = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& f = t.rows[i + 1];
    if (parse_uint(f[0]) != i) throw SchemaError("histogram bins out of order");
    if (i == 0) {
      lo = parse_double(f[1]);
      width = parse_double(f[2]) - lo;
    }
    counts[i] = parse_uint(f[3]);
  }
  stats::Histogram h(lo, lo + static_cast<double>(n) * width, width);
  if (h.bins() != n) throw SchemaError("histogram binning is inconsistent");
  h.set(std::move(counts), parse_uint(t.rows.front()[3]), parse_uint(t.rows.back()[3]));
  return h;
}

void write_sigma(std::ostream& out, std::span<const stats::SigmaPoint> points) {
  write_header(out, "sigma", kSigmaColumns);
  for (const auto& p : points)
    out << mc::to_string(p.output) << ',' << stats::to_string(p.mode) << ',' << format_double(p.window_ns) << ','
        << format_double(p.sigma) << ',' << format_double(p.error) << ',' << p.samples << '\n';
}

std::vector<stats::SigmaPoint> read_sigma(std::istream& in) {
  const auto t = read_table(in, "sigma", kSigmaColumns);
  std::vector<stats::SigmaPoint> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& f = t.rows[r];
    out.push_back(guarded(r + 1, [&] {
      stats::SigmaPoint p;
      p.output = mc::parse_detector(f[0]);
      if (f[1] == "sum_window")
        p.mode = stats::EnergyMode::SumWindow;
      else if (f[1] == "open")
        p.mode = stats::EnergyMode::Open;
      else
        throw SchemaError("unknown energy mode '" + f[1] + "'");
      p.window_ns = parse_double(f[2]);
      p.sigma = parse_double(f[3]);
      p.error = parse_double(f[4]);
      p.samples = parse_uint(f[5]);
      return p;
    }));
  }
  return out;
}

void write_counts(std::ostream& out, std::span<const NamedCounts> rows) {
  write_header(out, "counts", kCountColumns);
  for (const auto& r : rows)
    out << r.selection << ',' << r.counts.n_trig << ',' << r.counts.n_trig_t << ',' << r.counts.n_trig_r << ','
        << r.counts.n_trig_t_r << '\n';
}

std::vector<NamedCounts> read_counts(std::istream& in) {
  const auto t = read_table(in, "counts", kCountColumns);
  std::vector<NamedCounts> out;
  for (const auto& f : t.rows)
    out.push_back({f[0], {parse_uint(f[1]), parse_uint(f[2]), parse_uint(f[3]), parse_uint(f[4])}});
  return out;
}

void write_port_histograms(std::ostream& out, std::span<const NamedPortHistogram> rows) {
  write_header(out, "port-histograms", kPortColumns);
  for (const auto& r : rows) {
    const auto& h = r.histogram;
    if (h.trans.size() != h.ref.size()) throw SchemaError("port histogram outputs differ in length");
    for (std::size_t k = 0; k < h.trans.size(); ++k)
      out << r.selection << ',' << k << ',' << h.trans[k] << ',' << h.ref[k] << '\n';
    out << r.selection << ",both," << h.both << ',' << h.both << '\n';
  }
}

std::vector<NamedPortHistogram> read_port_histograms(std::istream& in) {
  const auto t = read_table(in, "port-histograms", kPortColumns);
  std::vector<NamedPortHistogram> out;
  bool open = false;
  for (const auto& f : t.rows) {
    if (!open) {
      out.push_back({f[0], {}});
      open = true;
    }
    auto& cur = out.back();
    if (f[0] != cur.selection) throw SchemaError("port histogram rows of '" + cur.selection + "' end without a both row");
    if (f[1] == "both") {
      if (f[2] != f[3]) throw SchemaError("port histogram both row must repeat its count");
      cur.histogram.both = parse_uint(f[2]);
      open = false;
      continue;
    }
    auto& h = cur.histogram;
    const auto k = parse_uint(f[1]);
    if (k == 0) {
      if (f[2] != f[3]) throw SchemaError("port histogram trigger-only row must repeat its count");
      h.trans = {parse_uint(f[2])};
      h.ref = {parse_uint(f[3])};
      continue;
    }
    if (k != h.trans.size()) throw SchemaError("port histogram photon index out of order");
    h.trans.push_back(parse_uint(f[2]));
    h.ref.push_back(parse_uint(f[3]));
  }
  if (open) throw SchemaError("port histogram table ends without a both row");
  return out;
}

}  // namespace heraldx::io
