#pragma once

#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "permdrift/dataset.hpp"
#include "permdrift/synth.hpp"

namespace fixture {

inline std::string data_path(const std::string& name) { return std::string(PERMDRIFT_DATA_DIR) + "/" + name; }
inline std::string test_data_path(const std::string& name) {
  return std::string(PERMDRIFT_TEST_DATA_DIR) + "/" + name;
}

inline permdrift::PermissionRegistry kronodroid_registry() {
  return permdrift::load_registry(data_path("kronodroid_registry.csv"));
}

// P0..P{n-1}, all Normal, introduced 2008. `deprecated` columns get a
// deprecation year.
inline permdrift::PermissionRegistry toy_registry(std::size_t n, std::vector<std::size_t> deprecated = {}) {
  std::vector<permdrift::PermissionMeta> perms;
  for (std::size_t i = 0; i < n; ++i) {
    permdrift::PermissionMeta m;
    m.name = "P" + std::to_string(i);
    m.year_introduced = 2008;
    perms.push_back(m);
  }
  for (auto c : deprecated) perms[c].year_deprecated = 2015;
  return permdrift::PermissionRegistry(std::move(perms));
}

struct Row {
  int label;
  int year;
  std::vector<std::uint8_t> bits;
};

inline permdrift::Dataset toy_dataset(const permdrift::PermissionRegistry& reg, const std::vector<Row>& rows) {
  std::vector<permdrift::Sample> samples;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    samples.push_back({"s" + std::to_string(i), static_cast<permdrift::Label>(rows[i].label), rows[i].year,
                       rows[i].bits});
  }
  return permdrift::Dataset(std::move(samples), reg.names());
}

// A concept where malware lights up `column` with rate hi and benign with lo;
// every other column has rate `fill` in both classes.
inline permdrift::Concept signal_concept(std::size_t features, std::size_t column, double lo = 0.05,
                                         double hi = 0.95, double fill = 0.1) {
  permdrift::Concept c;
  c.benign_rates.assign(features, fill);
  c.malware_rates.assign(features, fill);
  c.benign_rates[column] = lo;
  c.malware_rates[column] = hi;
  return c;
}

inline permdrift::DriftSchedule abrupt_schedule(std::size_t features, int first, int last, int t_c,
                                                std::size_t n_per_year, std::size_t from_col = 0,
                                                std::size_t to_col = 1) {
  permdrift::DriftSchedule s;
  s.kind = permdrift::DriftKind::Abrupt;
  s.t_c = t_c;
  for (int y = first; y <= last; ++y) s.years.push_back(y);
  s.n_per_year = n_per_year;
  s.concepts = {signal_concept(features, from_col), signal_concept(features, to_col)};
  return s;
}

inline std::string to_csv(const permdrift::Dataset& d) {
  std::ostringstream out;
  permdrift::write_samples(out, d);
  return out.str();
}

}  // namespace fixture
