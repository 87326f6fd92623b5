#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "grlforge/synth.hpp"

namespace grlforge::io {

// One corpus index line. The raw JSON object is kept verbatim so unknown
// fields survive a load/save round trip; typed accessors read the known ones.
class ManifestEntry {
 public:
  ManifestEntry() : fields_(nlohmann::ordered_json::object()) {}
  explicit ManifestEntry(nlohmann::ordered_json fields);

  static ManifestEntry from_record(const synth::SynthItemRecord& record);

  const std::string& path() const { return path_; }
  std::optional<int> label() const { return label_; }
  const std::string& domain() const { return domain_; }
  std::optional<std::string> mask_path() const;
  std::optional<synth::Provenance> provenance() const;

  const nlohmann::ordered_json& fields() const { return fields_; }

 private:
  nlohmann::ordered_json fields_;
  std::string path_;
  std::string domain_;
  std::optional<int> label_;
};

using Manifest = std::vector<ManifestEntry>;

Manifest manifest_from_records(const std::vector<synth::SynthItemRecord>& records);

// JSON-lines persistence; load reports malformed content with line numbers.
void save_manifest(const std::string& path, const Manifest& manifest);
Manifest load_manifest(const std::string& path);

}  // namespace grlforge::io
