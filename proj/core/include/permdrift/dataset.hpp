#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace permdrift {

enum class Protection : std::uint8_t { Normal, Dangerous, Signature, NotThirdParty, Internal };

std::string_view to_string(Protection p) noexcept;
std::optional<Protection> parse_protection(std::string_view text) noexcept;

struct PermissionMeta {
  std::string name;
  Protection protection = Protection::Normal;
  int year_introduced = 0;
  std::optional<int> year_deprecated;
  std::optional<int> year_restricted;

  bool deprecated() const noexcept { return year_deprecated.has_value(); }
  bool restricted() const noexcept { return year_restricted.has_value(); }
  bool operator==(const PermissionMeta&) const = default;
};

/// Ordered permission metadata; position i is feature column i.
class PermissionRegistry {
 public:
  PermissionRegistry() = default;
  /// Throws DuplicatePermission, BadYears or SchemaMismatch (empty name).
  explicit PermissionRegistry(std::vector<PermissionMeta> permissions);

  std::size_t size() const noexcept { return permissions_.size(); }
  bool empty() const noexcept { return permissions_.empty(); }
  const PermissionMeta& operator[](std::size_t column) const { return permissions_[column]; }
  std::span<const PermissionMeta> permissions() const noexcept { return permissions_; }
  std::optional<std::size_t> column_of(std::string_view name) const;
  std::vector<std::string> names() const;

  /// FNV-1a 64 over the concatenated names in column order.
  std::uint64_t digest() const noexcept { return digest_; }

  bool operator==(const PermissionRegistry& other) const { return permissions_ == other.permissions_; }

 private:
  std::vector<PermissionMeta> permissions_;
  std::unordered_map<std::string, std::size_t> index_;
  std::uint64_t digest_ = 0xcbf29ce484222325ULL;
};

std::uint64_t names_digest(std::span<const std::string> names) noexcept;

enum class Label : std::uint8_t { Benign = 0, Malware = 1 };

struct Sample {
  std::string id;
  Label label = Label::Benign;
  int year = 0;
  std::vector<std::uint8_t> bits;

  bool operator==(const Sample&) const = default;
};

struct ClassCounts {
  std::size_t benign = 0;
  std::size_t malware = 0;
  std::size_t total() const noexcept { return benign + malware; }
  bool both() const noexcept { return benign > 0 && malware > 0; }
  bool operator==(const ClassCounts&) const = default;
};

/// Immutable labeled permission matrix with a per-year index.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<Sample> samples, std::vector<std::string> feature_names);

  std::size_t size() const noexcept { return samples_.size(); }
  bool empty() const noexcept { return samples_.empty(); }
  std::size_t feature_count() const noexcept { return feature_names_.size(); }
  const Sample& operator[](std::size_t i) const { return samples_[i]; }
  std::span<const Sample> samples() const noexcept { return samples_; }
  std::span<const std::string> feature_names() const noexcept { return feature_names_; }
  std::uint64_t registry_hash() const noexcept { return registry_hash_; }

  const std::map<int, std::vector<std::size_t>>& year_index() const noexcept { return year_index_; }
  /// Indices of samples from `year`; empty when the year is absent.
  std::span<const std::size_t> year_samples(int year) const;
  std::vector<int> years() const;

  ClassCounts class_counts() const noexcept;
  /// Samples at `indices` in the given order; duplicates allowed.
  Dataset subset(std::span<const std::size_t> indices) const;
  Dataset year_subset(int year) const { return subset(year_samples(year)); }

  bool operator==(const Dataset& other) const {
    return feature_names_ == other.feature_names_ && samples_ == other.samples_;
  }

 private:
  std::vector<Sample> samples_;
  std::vector<std::string> feature_names_;
  std::uint64_t registry_hash_ = 0;
  std::map<int, std::vector<std::size_t>> year_index_;
};

enum class ViolationKind { LengthMismatch, BadBit, BadLabel, SchemaMismatch };
std::string_view to_string(ViolationKind kind) noexcept;

struct Violation {
  std::int64_t row = -1;  // sample index, -1 for dataset-level findings
  ViolationKind kind = ViolationKind::LengthMismatch;
  std::string reason;
};

struct ValidationReport {
  std::size_t n_samples = 0;
  std::size_t n_features = 0;
  std::map<int, ClassCounts> per_year;
  std::map<std::string, std::size_t> per_category;
  std::vector<Violation> violations;

  bool accepted() const noexcept { return violations.empty(); }
};

PermissionRegistry read_registry(std::istream& in);
PermissionRegistry load_registry(const std::filesystem::path& path);
void write_registry(std::ostream& out, const PermissionRegistry& registry);

/// Permission columns may appear in any order; samples are reordered to
/// registry order. Unknown, duplicate or missing columns are SchemaMismatch.
Dataset read_samples(std::istream& in, const PermissionRegistry& registry);
Dataset load_samples(const std::filesystem::path& path, const PermissionRegistry& registry);
void write_samples(std::ostream& out, const Dataset& dataset);
void save_samples(const std::filesystem::path& path, const Dataset& dataset);

ValidationReport validate(const Dataset& dataset, const PermissionRegistry& registry);

}  // namespace permdrift
