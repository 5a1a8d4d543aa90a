// Per-episode metrics and locale-independent CSV emission.
#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace mecoff {

struct MetricsRow {
  int episode = 0;
  std::int64_t arrivals = 0;
  std::int64_t completed = 0;
  std::int64_t dropped = 0;
  std::int64_t in_flight_at_end = 0;
  double drop_ratio = 0.0;   // dropped / arrivals, 0 when no arrivals
  double avg_delay_s = 0.0;  // completed tasks only
  double mean_cost = 0.0;    // completed + dropped
};

inline const char* metrics_csv_header() {
  return "episode,arrivals,completed,dropped,in_flight_at_end,drop_ratio,avg_delay_s,mean_cost";
}

inline std::string format_metrics_row(const MetricsRow& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%d,%lld,%lld,%lld,%lld,%.6f,%.6f,%.6f", r.episode,
                static_cast<long long>(r.arrivals), static_cast<long long>(r.completed),
                static_cast<long long>(r.dropped), static_cast<long long>(r.in_flight_at_end),
                r.drop_ratio, r.avg_delay_s, r.mean_cost);
  return buf;
}

// Writes header plus one row per episode. Never appends; an existing file is
// only replaced when overwrite is set.
inline void emit_csv(const std::vector<MetricsRow>& rows, const std::string& path,
                     bool overwrite = false) {
  if (!overwrite && std::filesystem::exists(path))
    throw std::runtime_error("refusing to overwrite existing file: " + path);
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << metrics_csv_header() << '\n';
  for (const MetricsRow& r : rows) out << format_metrics_row(r) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace mecoff
