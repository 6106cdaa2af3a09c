#include "permdrift/synth.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>

#include "csv.hpp"
#include "permdrift/error.hpp"
#include "permdrift/parallel.hpp"
#include "permdrift/protocol.hpp"
#include "permdrift/rng.hpp"

namespace permdrift {

using nlohmann::json;

std::string_view to_string(DriftKind k) noexcept {
  switch (k) {
    case DriftKind::Abrupt: return "abrupt";
    case DriftKind::Incremental: return "incremental";
    case DriftKind::Gradual: return "gradual";
    case DriftKind::Recurring: return "recurring";
  }
  return "abrupt";
}

std::string_view to_string(DecayShape s) noexcept {
  return s == DecayShape::Linear ? "linear" : "exponential";
}

namespace {

[[noreturn]] void bad(const std::string& msg) { throw Error(ErrorCode::BadSchedule, msg); }

bool in_unit(double v) { return v >= 0.0 && v <= 1.0; }

std::vector<std::size_t> effective_cycle(const DriftSchedule& s) {
  if (!s.cycle.empty()) return s.cycle;
  std::vector<std::size_t> c(s.concepts.size());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = i;
  return c;
}

}  // namespace

void check_schedule(const DriftSchedule& s, std::size_t feature_count) {
  if (s.years.empty()) bad("schedule has no years");
  for (std::size_t i = 1; i < s.years.size(); ++i) {
    if (s.years[i] <= s.years[i - 1]) bad("years must be strictly increasing");
  }
  if (s.n_per_year < 1) bad("n_per_year must be at least 1");
  if (s.concepts.empty()) bad("schedule has no concepts");
  for (std::size_t c = 0; c < s.concepts.size(); ++c) {
    const auto& k = s.concepts[c];
    if (k.benign_rates.size() != feature_count || k.malware_rates.size() != feature_count) {
      throw Error(ErrorCode::ShapeMismatch, "concept " + std::to_string(c) + " has " +
                                                std::to_string(k.benign_rates.size()) + "/" +
                                                std::to_string(k.malware_rates.size()) + " rates for " +
                                                std::to_string(feature_count) + " features");
    }
    if (!(k.malware_prior > 0.0 && k.malware_prior < 1.0)) bad("malware_prior must lie in (0, 1)");
    for (std::size_t f = 0; f < feature_count; ++f) {
      if (!in_unit(k.benign_rates[f]) || !in_unit(k.malware_rates[f])) bad("rates must lie in [0, 1]");
    }
  }
  const int first = s.years.front(), last = s.years.back();
  switch (s.kind) {
    case DriftKind::Abrupt:
    case DriftKind::Incremental:
    case DriftKind::Gradual:
      if (s.concepts.size() != 2) bad(std::string(to_string(s.kind)) + " schedule needs exactly two concepts");
      break;
    case DriftKind::Recurring:
      break;
  }
  if (s.kind == DriftKind::Abrupt && (s.t_c < first || s.t_c > last)) bad("t_c outside the year range");
  if (s.kind == DriftKind::Gradual) {
    if (s.t_c < first || s.t_d > last) bad("t_c and t_d must lie within the year range");
    if (s.t_c > s.t_d) bad("t_c must not exceed t_d");
  }
  if (s.kind == DriftKind::Incremental) {
    if (!in_unit(s.alpha_start) || !in_unit(s.alpha_end)) bad("alpha bounds must lie in [0, 1]");
    if (s.shape == DecayShape::Linear && s.alpha_end > s.alpha_start) bad("alpha must not increase");
    if (s.shape == DecayShape::Exponential && !(s.half_life > 0.0)) bad("half_life must be positive");
  }
  if (s.kind == DriftKind::Recurring) {
    if (s.period < 1) bad("period must be at least 1");
    for (auto c : s.cycle) {
      if (c >= s.concepts.size()) bad("cycle refers to concept " + std::to_string(c) + " which does not exist");
    }
  }
}

double mixture_weight(const DriftSchedule& s, double t) {
  if (s.years.empty()) bad("schedule has no years");
  const double first = s.years.front(), last = s.years.back();
  if (!(t >= first && t <= last)) {
    throw Error(ErrorCode::OutOfRange, "year " + format_double(t) + " outside the schedule");
  }
  switch (s.kind) {
    case DriftKind::Abrupt:
      return t >= s.t_c ? 1.0 : 0.0;
    case DriftKind::Incremental:
      if (s.shape == DecayShape::Exponential) return s.alpha_start * std::exp2(-(t - first) / s.half_life);
      if (last == first) return s.alpha_start;
      return s.alpha_start + (s.alpha_end - s.alpha_start) * (t - first) / (last - first);
    case DriftKind::Gradual:
      if (t < s.t_c) return 0.0;
      if (t > s.t_d) return 1.0;
      return (t - s.t_c + 1.0) / (static_cast<double>(s.t_d) - s.t_c + 2.0);
    case DriftKind::Recurring:
      return 1.0;
  }
  return 1.0;
}

std::size_t recurring_concept(const DriftSchedule& s, int t) {
  const auto cycle = effective_cycle(s);
  if (cycle.empty() || s.period < 1) bad("recurring schedule needs a cycle and a positive period");
  const auto steps = static_cast<std::int64_t>(t - s.years.front()) / s.period;
  const auto len = static_cast<std::int64_t>(cycle.size());
  return cycle[static_cast<std::size_t>(((steps % len) + len) % len)];
}

Dataset generate(const DriftSchedule& s, const PermissionRegistry& registry, std::uint64_t seed, int threads) {
  const std::size_t features = registry.size();
  check_schedule(s, features);
  std::vector<std::vector<Sample>> per_year(s.years.size());
  parallel_for(s.years.size(), threads, [&](std::size_t y) {
    const int year = s.years[y];
    Rng rng(derive_seed(seed, "synth", {year}));
    const double w = mixture_weight(s, year);
    auto& out = per_year[y];
    out.reserve(s.n_per_year);
    for (std::size_t i = 0; i < s.n_per_year; ++i) {
      std::size_t concept_index;
      switch (s.kind) {
        case DriftKind::Recurring: concept_index = recurring_concept(s, year); break;
        case DriftKind::Incremental: concept_index = rng.bernoulli(w) ? 0 : 1; break;
        default: concept_index = rng.bernoulli(w) ? 1 : 0; break;
      }
      const Concept& c = s.concepts[concept_index];
      Sample sample;
      sample.id = "synth-" + std::to_string(year) + "-" + std::to_string(i);
      sample.year = year;
      sample.label = rng.bernoulli(c.malware_prior) ? Label::Malware : Label::Benign;
      const auto& rates = sample.label == Label::Malware ? c.malware_rates : c.benign_rates;
      sample.bits.resize(features);
      for (std::size_t f = 0; f < features; ++f) sample.bits[f] = rng.bernoulli(rates[f]) ? 1 : 0;
      out.push_back(std::move(sample));
    }
  });
  std::vector<Sample> samples;
  samples.reserve(s.years.size() * s.n_per_year);
  for (auto& v : per_year) std::move(v.begin(), v.end(), std::back_inserter(samples));
  return Dataset(std::move(samples), registry.names());
}

namespace {

void reject_unknown(const json& obj, std::initializer_list<std::string_view> allowed, std::string_view where) {
  for (const auto& [key, _] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      bad("unknown key '" + key + "' in " + std::string(where));
    }
  }
}

std::vector<double> parse_rates(const json& j, const PermissionRegistry& registry, std::string_view where) {
  if (j.is_array()) return j.get<std::vector<double>>();
  if (!j.is_object()) bad(std::string(where) + " must be an array or {fill, set}");
  reject_unknown(j, {"fill", "set"}, where);
  std::vector<double> rates(registry.size(), j.value("fill", 0.0));
  if (j.contains("set")) {
    if (!j["set"].is_object()) bad(std::string(where) + ".set must be an object");
    for (const auto& [key, value] : j["set"].items()) {
      std::size_t column;
      if (auto named = registry.column_of(key)) {
        column = *named;
      } else if (auto idx = detail::parse_number<std::size_t>(key); idx && *idx < registry.size()) {
        column = *idx;
      } else {
        bad("unknown permission '" + key + "' in " + std::string(where));
      }
      rates[column] = value.get<double>();
    }
  }
  return rates;
}

DriftKind parse_kind(const std::string& text) {
  for (auto k : {DriftKind::Abrupt, DriftKind::Incremental, DriftKind::Gradual, DriftKind::Recurring}) {
    if (text == to_string(k)) return k;
  }
  bad("unknown drift kind '" + text + "'");
}

}  // namespace

DriftSchedule parse_schedule(std::string_view json_text, const PermissionRegistry& registry) {
  DriftSchedule s;
  try {
    const json j = json::parse(json_text);
    if (!j.is_object()) bad("schedule must be a JSON object");
    reject_unknown(j,
                   {"kind", "t_c", "t_d", "alpha_start", "alpha_end", "shape", "half_life", "period", "cycle",
                    "concepts", "years", "n_per_year"},
                   "schedule");
    s.kind = parse_kind(j.at("kind").get<std::string>());
    s.t_c = j.value("t_c", 0);
    s.t_d = j.value("t_d", s.t_c);
    s.alpha_start = j.value("alpha_start", 1.0);
    s.alpha_end = j.value("alpha_end", 0.0);
    const auto shape = j.value("shape", std::string("linear"));
    if (shape == "linear") {
      s.shape = DecayShape::Linear;
    } else if (shape == "exponential") {
      s.shape = DecayShape::Exponential;
    } else {
      bad("unknown shape '" + shape + "'");
    }
    s.half_life = j.value("half_life", 1.0);
    s.period = j.value("period", 1);
    s.cycle = j.value("cycle", std::vector<std::size_t>{});
    const auto& years = j.at("years");
    if (years.is_array()) {
      s.years = years.get<std::vector<int>>();
    } else {
      reject_unknown(years, {"from", "to"}, "years");
      for (int y = years.at("from").get<int>(); y <= years.at("to").get<int>(); ++y) s.years.push_back(y);
    }
    s.n_per_year = j.at("n_per_year").get<std::size_t>();
    std::size_t index = 0;
    for (const auto& c : j.at("concepts")) {
      const std::string where = "concepts[" + std::to_string(index++) + "]";
      reject_unknown(c, {"benign_rates", "malware_rates", "malware_prior"}, where);
      Concept k;
      k.benign_rates = parse_rates(c.at("benign_rates"), registry, where + ".benign_rates");
      k.malware_rates = parse_rates(c.at("malware_rates"), registry, where + ".malware_rates");
      k.malware_prior = c.value("malware_prior", 0.5);
      s.concepts.push_back(std::move(k));
    }
  } catch (const json::exception& e) {
    bad(std::string("malformed schedule: ") + e.what());
  }
  check_schedule(s, registry.size());
  return s;
}

std::string schedule_to_json(const DriftSchedule& s) {
  json j;
  j["kind"] = std::string(to_string(s.kind));
  j["t_c"] = s.t_c;
  j["t_d"] = s.t_d;
  j["alpha_start"] = s.alpha_start;
  j["alpha_end"] = s.alpha_end;
  j["shape"] = std::string(to_string(s.shape));
  j["half_life"] = s.half_life;
  j["period"] = s.period;
  j["cycle"] = s.cycle;
  j["years"] = s.years;
  j["n_per_year"] = s.n_per_year;
  j["concepts"] = json::array();
  for (const auto& c : s.concepts) {
    j["concepts"].push_back(
        {{"benign_rates", c.benign_rates}, {"malware_rates", c.malware_rates}, {"malware_prior", c.malware_prior}});
  }
  return j.dump(2) + "\n";
}

}  // namespace permdrift
