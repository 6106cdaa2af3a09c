#include "permdrift/features.hpp"

#include <cctype>

#include "permdrift/error.hpp"

namespace permdrift {

std::string ExclusionSpec::label() const {
  if (empty()) return "All";
  std::string out;
  if (contains(ExclusionFlag::Deprecated)) out += 'D';
  if (contains(ExclusionFlag::Restricted)) out += 'R';
  if (contains(ExclusionFlag::NotThirdParty)) out += 'N';
  return out;
}

ExclusionSpec ExclusionSpec::parse(std::string_view text) {
  ExclusionSpec spec;
  std::string token;
  auto flush = [&] {
    if (token.empty() || token == "all") {
      token.clear();
      return;
    }
    if (token == "d" || token == "deprecated") {
      spec.bits_ |= static_cast<std::uint8_t>(ExclusionFlag::Deprecated);
    } else if (token == "r" || token == "restricted") {
      spec.bits_ |= static_cast<std::uint8_t>(ExclusionFlag::Restricted);
    } else if (token == "n" || token == "notthirdparty") {
      spec.bits_ |= static_cast<std::uint8_t>(ExclusionFlag::NotThirdParty);
    } else {
      throw Error(ErrorCode::BadConfig, "unknown exclusion '" + token + "' (expected d, r, n)");
    }
    token.clear();
  };
  for (char c : text) {
    if (c == ',') {
      flush();
    } else if (!std::isspace(static_cast<unsigned char>(c))) {
      token += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
  }
  flush();
  return spec;
}

std::vector<std::size_t> FeatureMask::kept_columns() const {
  std::vector<std::size_t> out;
  out.reserve(kept_count);
  for (std::size_t j = 0; j < keep.size(); ++j) {
    if (keep[j]) out.push_back(j);
  }
  return out;
}

FeatureMask build_mask(const PermissionRegistry& registry, ExclusionSpec spec) {
  FeatureMask mask;
  mask.keep.resize(registry.size());
  for (std::size_t j = 0; j < registry.size(); ++j) {
    const auto& p = registry[j];
    const bool drop = (spec.contains(ExclusionFlag::Deprecated) && p.deprecated()) ||
                      (spec.contains(ExclusionFlag::Restricted) && p.restricted()) ||
                      (spec.contains(ExclusionFlag::NotThirdParty) &&
                       p.protection == Protection::NotThirdParty);
    mask.keep[j] = !drop;
    if (!drop) ++mask.kept_count;
  }
  return mask;
}

Dataset apply_mask(const Dataset& dataset, const FeatureMask& mask) {
  if (mask.keep.size() != dataset.feature_count()) {
    throw Error(ErrorCode::LengthMismatch,
                "mask length " + std::to_string(mask.keep.size()) + " != feature count " +
                    std::to_string(dataset.feature_count()));
  }
  const auto columns = mask.kept_columns();
  std::vector<std::string> names;
  names.reserve(columns.size());
  for (auto c : columns) names.push_back(dataset.feature_names()[c]);

  std::vector<Sample> samples;
  samples.reserve(dataset.size());
  for (const auto& s : dataset.samples()) {
    if (s.bits.size() != mask.keep.size()) {
      throw Error(ErrorCode::LengthMismatch, "sample " + s.id + " has wrong bit length");
    }
    Sample out{s.id, s.label, s.year, {}};
    out.bits.reserve(columns.size());
    for (auto c : columns) out.bits.push_back(s.bits[c]);
    samples.push_back(std::move(out));
  }
  return Dataset(std::move(samples), std::move(names));
}

PermissionRegistry apply_mask(const PermissionRegistry& registry, const FeatureMask& mask) {
  if (mask.keep.size() != registry.size()) {
    throw Error(ErrorCode::LengthMismatch, "mask length does not match registry size");
  }
  std::vector<PermissionMeta> kept;
  kept.reserve(mask.kept_count);
  for (std::size_t j = 0; j < registry.size(); ++j) {
    if (mask.keep[j]) kept.push_back(registry[j]);
  }
  return PermissionRegistry(std::move(kept));
}

}  // namespace permdrift
