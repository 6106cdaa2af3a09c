#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "permdrift/dataset.hpp"

namespace permdrift {

/// Product-Bernoulli concept: every feature bit is drawn independently from
/// its per-class rate.
struct Concept {
  std::vector<double> benign_rates;
  std::vector<double> malware_rates;
  double malware_prior = 0.5;

  bool operator==(const Concept&) const = default;
};

enum class DriftKind : std::uint8_t { Abrupt, Incremental, Gradual, Recurring };
enum class DecayShape : std::uint8_t { Linear, Exponential };

std::string_view to_string(DriftKind k) noexcept;
std::string_view to_string(DecayShape s) noexcept;

/// concepts[0] is P_A and concepts[1] is P_B for the mixture kinds; a
/// Recurring schedule walks `cycle` (indices into concepts, default all in
/// order), advancing one step every `period` years.
struct DriftSchedule {
  DriftKind kind = DriftKind::Abrupt;
  int t_c = 0;
  int t_d = 0;
  // Incremental: P_A weight decays from alpha_start at the first year.
  double alpha_start = 1.0;
  double alpha_end = 0.0;       // linear target at the last year
  DecayShape shape = DecayShape::Linear;
  double half_life = 1.0;       // years, exponential shape only
  int period = 1;
  std::vector<std::size_t> cycle;
  std::vector<Concept> concepts;
  std::vector<int> years;
  std::size_t n_per_year = 0;

  bool operator==(const DriftSchedule&) const = default;
};

/// Throws BadSchedule when the schedule violates its invariants and
/// ShapeMismatch when a concept does not have `feature_count` rates.
void check_schedule(const DriftSchedule& schedule, std::size_t feature_count);

/// Abrupt: 1 from t_c on (the P_B indicator). Incremental: P_A weight.
/// Gradual: P_B weight, (t - t_c + 1) / (t_d - t_c + 2) on [t_c, t_d], 0
/// before and 1 after. Recurring: 1, the active concept is drawn surely.
double mixture_weight(const DriftSchedule& schedule, double t);

/// Concept index active in year t of a Recurring schedule.
std::size_t recurring_concept(const DriftSchedule& schedule, int t);

/// Year t uses stream derive_seed(seed, "synth", {t}); each sample draws its
/// concept, then its class from that concept's prior, then its bits.
Dataset generate(const DriftSchedule& schedule, const PermissionRegistry& registry, std::uint64_t seed,
                 int threads = 1);

/// JSON schedule. Rate vectors are either full arrays or
/// {"fill": r, "set": {"<name or column>": r, ...}}; unknown keys are
/// rejected with BadSchedule.
DriftSchedule parse_schedule(std::string_view json_text, const PermissionRegistry& registry);
std::string schedule_to_json(const DriftSchedule& schedule);

}  // namespace permdrift
