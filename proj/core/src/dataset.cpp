#include "permdrift/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>
#include <unordered_set>

#include "csv.hpp"
#include "permdrift/error.hpp"
#include "permdrift/rng.hpp"

namespace permdrift {

namespace {

constexpr std::string_view kRegistryHeader =
    "name,protection,year_introduced,year_deprecated,year_restricted";

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  return in;
}

}  // namespace

std::string_view to_string(Protection p) noexcept {
  switch (p) {
    case Protection::Normal: return "Normal";
    case Protection::Dangerous: return "Dangerous";
    case Protection::Signature: return "Signature";
    case Protection::NotThirdParty: return "NotThirdParty";
    case Protection::Internal: return "Internal";
  }
  return "Normal";
}

std::optional<Protection> parse_protection(std::string_view text) noexcept {
  const std::string key = lower(text);
  if (key == "normal") return Protection::Normal;
  if (key == "dangerous") return Protection::Dangerous;
  if (key == "signature") return Protection::Signature;
  if (key == "notthirdparty") return Protection::NotThirdParty;
  if (key == "internal") return Protection::Internal;
  return std::nullopt;
}

std::uint64_t names_digest(std::span<const std::string> names) noexcept {
  Fnv1a64 h;
  for (const auto& n : names) h.update(n);
  return h.digest();
}

PermissionRegistry::PermissionRegistry(std::vector<PermissionMeta> permissions)
    : permissions_(std::move(permissions)) {
  Fnv1a64 h;
  for (std::size_t i = 0; i < permissions_.size(); ++i) {
    const auto& p = permissions_[i];
    if (p.name.empty()) {
      throw Error(ErrorCode::SchemaMismatch, "empty permission name", static_cast<std::int64_t>(i));
    }
    if ((p.year_deprecated && *p.year_deprecated < p.year_introduced) ||
        (p.year_restricted && *p.year_restricted < p.year_introduced)) {
      throw Error(ErrorCode::BadYears, "non-chronological years for " + p.name,
                  static_cast<std::int64_t>(i));
    }
    if (!index_.emplace(p.name, i).second) {
      throw Error(ErrorCode::DuplicatePermission, "duplicate permission " + p.name,
                  static_cast<std::int64_t>(i), p.name);
    }
    h.update(p.name);
  }
  digest_ = h.digest();
}

std::optional<std::size_t> PermissionRegistry::column_of(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> PermissionRegistry::names() const {
  std::vector<std::string> out;
  out.reserve(permissions_.size());
  for (const auto& p : permissions_) out.push_back(p.name);
  return out;
}

Dataset::Dataset(std::vector<Sample> samples, std::vector<std::string> feature_names)
    : samples_(std::move(samples)), feature_names_(std::move(feature_names)) {
  registry_hash_ = names_digest(feature_names_);
  for (std::size_t i = 0; i < samples_.size(); ++i) year_index_[samples_[i].year].push_back(i);
}

std::span<const std::size_t> Dataset::year_samples(int year) const {
  auto it = year_index_.find(year);
  if (it == year_index_.end()) return {};
  return it->second;
}

std::vector<int> Dataset::years() const {
  std::vector<int> out;
  out.reserve(year_index_.size());
  for (const auto& [year, _] : year_index_) out.push_back(year);
  return out;
}

ClassCounts Dataset::class_counts() const noexcept {
  ClassCounts c;
  for (const auto& s : samples_) (s.label == Label::Malware ? c.malware : c.benign) += 1;
  return c;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  std::vector<Sample> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(samples_.at(i));
  return Dataset(std::move(out), feature_names_);
}

std::string_view to_string(ViolationKind kind) noexcept {
  switch (kind) {
    case ViolationKind::LengthMismatch: return "LengthMismatch";
    case ViolationKind::BadBit: return "BadBit";
    case ViolationKind::BadLabel: return "BadLabel";
    case ViolationKind::SchemaMismatch: return "SchemaMismatch";
  }
  return "LengthMismatch";
}

PermissionRegistry read_registry(std::istream& in) {
  std::string line;
  std::int64_t line_no = 0;
  if (!detail::next_line(in, line, line_no) || line != kRegistryHeader) {
    throw Error(ErrorCode::SchemaMismatch,
                "registry header must be '" + std::string(kRegistryHeader) + "'", 1);
  }
  std::vector<PermissionMeta> perms;
  std::unordered_set<std::string> seen;
  std::vector<std::string_view> fields;
  while (detail::next_line(in, line, line_no)) {
    detail::split_fields(line, fields);
    if (fields.size() != 5) {
      throw Error(ErrorCode::SchemaMismatch, "expected 5 fields", line_no);
    }
    PermissionMeta meta;
    meta.name = std::string(fields[0]);
    if (meta.name.empty()) throw Error(ErrorCode::SchemaMismatch, "empty permission name", line_no);
    if (!seen.insert(meta.name).second) {
      throw Error(ErrorCode::DuplicatePermission, "duplicate permission " + meta.name, line_no,
                  meta.name);
    }
    auto prot = parse_protection(fields[1]);
    if (!prot) {
      throw Error(ErrorCode::BadProtection, "unknown protection '" + std::string(fields[1]) + "'",
                  line_no, "protection");
    }
    meta.protection = *prot;
    auto introduced = detail::parse_number<int>(fields[2]);
    if (!introduced) throw Error(ErrorCode::BadYears, "bad year_introduced", line_no, "year_introduced");
    meta.year_introduced = *introduced;
    auto optional_year = [&](std::string_view cell, const char* column) -> std::optional<int> {
      if (cell.empty()) return std::nullopt;
      auto y = detail::parse_number<int>(cell);
      if (!y) throw Error(ErrorCode::BadYears, std::string("bad ") + column, line_no, column);
      if (*y < meta.year_introduced) {
        throw Error(ErrorCode::BadYears, std::string(column) + " precedes year_introduced", line_no,
                    column);
      }
      return y;
    };
    meta.year_deprecated = optional_year(fields[3], "year_deprecated");
    meta.year_restricted = optional_year(fields[4], "year_restricted");
    perms.push_back(std::move(meta));
  }
  return PermissionRegistry(std::move(perms));
}

PermissionRegistry load_registry(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_registry(in);
}

void write_registry(std::ostream& out, const PermissionRegistry& registry) {
  out << kRegistryHeader << '\n';
  for (const auto& p : registry.permissions()) {
    out << p.name << ',' << to_string(p.protection) << ',' << p.year_introduced << ',';
    if (p.year_deprecated) out << *p.year_deprecated;
    out << ',';
    if (p.year_restricted) out << *p.year_restricted;
    out << '\n';
  }
}

Dataset read_samples(std::istream& in, const PermissionRegistry& registry) {
  std::string line;
  std::int64_t line_no = 0;
  std::vector<std::string_view> fields;
  if (!detail::next_line(in, line, line_no)) {
    throw Error(ErrorCode::SchemaMismatch, "missing header", 1);
  }
  const std::string header = line;
  detail::split_fields(header, fields);
  if (fields.size() < 3 || fields[0] != "id" || fields[1] != "label" || fields[2] != "year") {
    throw Error(ErrorCode::SchemaMismatch, "header must start with id,label,year", 1);
  }
  const std::size_t m = registry.size();
  // file column (offset by 3) -> registry column
  std::vector<std::size_t> target(fields.size() - 3);
  std::vector<bool> covered(m, false);
  std::vector<std::string> unknown;
  for (std::size_t c = 3; c < fields.size(); ++c) {
    auto col = registry.column_of(fields[c]);
    if (!col) {
      unknown.emplace_back(fields[c]);
      continue;
    }
    if (covered[*col]) {
      throw Error(ErrorCode::SchemaMismatch, "duplicate column " + std::string(fields[c]), 1,
                  std::string(fields[c]));
    }
    covered[*col] = true;
    target[c - 3] = *col;
  }
  std::string missing;
  for (std::size_t j = 0; j < m; ++j) {
    if (!covered[j]) missing += (missing.empty() ? "" : ",") + registry[j].name;
  }
  if (!missing.empty()) throw Error(ErrorCode::SchemaMismatch, "missing permission columns: " + missing, 1);
  if (!unknown.empty()) {
    std::string joined;
    for (const auto& u : unknown) joined += (joined.empty() ? "" : ",") + u;
    throw Error(ErrorCode::SchemaMismatch, "unknown columns: " + joined, 1);
  }

  std::vector<Sample> samples;
  const std::size_t width = m + 3;
  while (detail::next_line(in, line, line_no)) {
    detail::split_fields(line, fields);
    if (fields.size() != width) {
      throw Error(ErrorCode::SchemaMismatch,
                  "expected " + std::to_string(width) + " fields, got " + std::to_string(fields.size()),
                  line_no);
    }
    Sample s;
    s.id = std::string(fields[0]);
    if (fields[1] == "0") {
      s.label = Label::Benign;
    } else if (fields[1] == "1") {
      s.label = Label::Malware;
    } else {
      throw Error(ErrorCode::BadLabel, "label must be 0 or 1", line_no, "label");
    }
    auto year = detail::parse_number<int>(fields[2]);
    if (!year) throw Error(ErrorCode::SchemaMismatch, "bad year", line_no, "year");
    s.year = *year;
    s.bits.assign(m, 0);
    for (std::size_t c = 3; c < width; ++c) {
      const auto cell = fields[c];
      if (cell == "1") {
        s.bits[target[c - 3]] = 1;
      } else if (cell != "0") {
        throw Error(ErrorCode::BadBit, "cell must be 0 or 1, got '" + std::string(cell) + "'",
                    line_no, registry[target[c - 3]].name);
      }
    }
    samples.push_back(std::move(s));
  }
  return Dataset(std::move(samples), registry.names());
}

Dataset load_samples(const std::filesystem::path& path, const PermissionRegistry& registry) {
  auto in = open_input(path);
  return read_samples(in, registry);
}

void write_samples(std::ostream& out, const Dataset& dataset) {
  out << "id,label,year";
  for (const auto& n : dataset.feature_names()) out << ',' << n;
  out << '\n';
  std::string row;
  for (const auto& s : dataset.samples()) {
    row.clear();
    row += s.id;
    row += s.label == Label::Malware ? ",1," : ",0,";
    row += std::to_string(s.year);
    for (auto b : s.bits) {
      row += ',';
      row += b ? '1' : '0';
    }
    row += '\n';
    out << row;
  }
}

void save_samples(const std::filesystem::path& path, const Dataset& dataset) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  write_samples(out, dataset);
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

ValidationReport validate(const Dataset& dataset, const PermissionRegistry& registry) {
  ValidationReport report;
  report.n_samples = dataset.size();
  report.n_features = registry.size();
  for (auto p : {Protection::Dangerous, Protection::Normal, Protection::Signature,
                 Protection::NotThirdParty, Protection::Internal}) {
    report.per_category[std::string(to_string(p))] = 0;
  }
  report.per_category["Deprecated"] = 0;
  report.per_category["Restricted"] = 0;
  for (const auto& p : registry.permissions()) {
    ++report.per_category[std::string(to_string(p.protection))];
    if (p.deprecated()) ++report.per_category["Deprecated"];
    if (p.restricted()) ++report.per_category["Restricted"];
  }

  if (dataset.registry_hash() != registry.digest()) {
    report.violations.push_back({-1, ViolationKind::SchemaMismatch,
                                 "dataset feature columns do not match the registry"});
  }
  const auto m = registry.size();
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& s = dataset[i];
    const auto row = static_cast<std::int64_t>(i);
    auto& bucket = report.per_year[s.year];
    if (s.label == Label::Benign) {
      ++bucket.benign;
    } else if (s.label == Label::Malware) {
      ++bucket.malware;
    } else {
      report.violations.push_back({row, ViolationKind::BadLabel,
                                   "label " + std::to_string(static_cast<int>(s.label))});
    }
    if (s.bits.size() != m) {
      report.violations.push_back({row, ViolationKind::LengthMismatch,
                                   "bits length " + std::to_string(s.bits.size()) + " != " +
                                       std::to_string(m)});
    }
    for (std::size_t j = 0; j < s.bits.size(); ++j) {
      if (s.bits[j] > 1) {
        report.violations.push_back({row, ViolationKind::BadBit, "column " + std::to_string(j)});
        break;
      }
    }
  }
  return report;
}

}  // namespace permdrift
