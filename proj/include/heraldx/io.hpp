#pragma once

// Versioned CSV formats. Every file opens with a "# heraldx-<kind> v<N>" tag
// line followed by the column header; doubles use shortest round-trip text.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "heraldx/daq.hpp"
#include "heraldx/montecarlo.hpp"
#include "heraldx/stats.hpp"

namespace heraldx::io {

class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string format_double(double v);
double parse_double(std::string_view s);
std::uint64_t parse_uint(std::string_view s);
std::vector<std::string_view> split(std::string_view s, char sep);

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

void write_table(std::ostream& out, std::string_view kind, const Table& table);
/// Reads a table written by write_table; SchemaError on tag, column or field-count mismatch.
Table read_table(std::istream& in, std::string_view kind, std::span<const std::string_view> columns);

std::ofstream open_output(const std::filesystem::path& path);
std::ifstream open_input(const std::filesystem::path& path);

inline constexpr std::string_view kEventsKind = "events";
inline constexpr std::string_view kPulsesKind = "pulses";

/// Row-per-photon event stream; events with no photons get a single "none" row.
class EventWriter {
 public:
  explicit EventWriter(std::ostream& out);
  void write(const daq::EventRecord& ev);
  std::uint64_t written() const { return next_; }

 private:
  std::ostream* out_;
  std::uint64_t next_ = 0;
};

void write_events(std::ostream& out, std::span<const daq::EventRecord> events);
std::vector<daq::EventRecord> read_events(std::istream& in);

class PulseWriter {
 public:
  explicit PulseWriter(std::ostream& out);
  void write(std::span<const mc::PulseRecord> pulses);

 private:
  std::ostream* out_;
};

std::vector<mc::PulseRecord> read_pulses(std::istream& in);

void write_histogram(std::ostream& out, const stats::Histogram& h);
stats::Histogram read_histogram(std::istream& in);

void write_sigma(std::ostream& out, std::span<const stats::SigmaPoint> points);
std::vector<stats::SigmaPoint> read_sigma(std::istream& in);

struct NamedCounts {
  std::string selection;
  stats::CoincCounts counts;
};
void write_counts(std::ostream& out, std::span<const NamedCounts> rows);
std::vector<NamedCounts> read_counts(std::istream& in);

struct NamedPortHistogram {
  std::string selection;
  stats::PortHistogram histogram;
};
void write_port_histograms(std::ostream& out, std::span<const NamedPortHistogram> rows);
std::vector<NamedPortHistogram> read_port_histograms(std::istream& in);

}  // namespace heraldx::io
