#include "grlforge/manifest.hpp"

#include <fstream>
#include <unordered_set>

#include "grlforge/errors.hpp"

namespace grlforge::io {

using nlohmann::ordered_json;

namespace {

ordered_json provenance_json(const synth::Provenance& p) {
  ordered_json j;
  j["mode"] = synth::forgery_mode_name(p.mode);
  j["base_seed"] = p.base_seed;
  if (p.mode != synth::ForgeryMode::none) {
    j["item_seed"] = p.item_seed;
    j["region"] = {{"src_top", p.region.src_top},
                   {"src_left", p.region.src_left},
                   {"src_height", p.region.src_height},
                   {"src_width", p.region.src_width},
                   {"paste_top", p.region.paste_top},
                   {"paste_left", p.region.paste_left}};
    j["transform"] = {{"rotation_deg", p.transform.rotation_deg},
                      {"scale", p.transform.scale},
                      {"resize", p.transform.resize},
                      {"blur_sigma", p.transform.blur_sigma}};
  }
  return j;
}

synth::Provenance provenance_from_json(const ordered_json& j) {
  synth::Provenance p;
  p.mode = synth::forgery_mode_from(j.at("mode").get<std::string>());
  p.base_seed = j.at("base_seed").get<std::uint64_t>();
  if (p.mode != synth::ForgeryMode::none) {
    p.item_seed = j.at("item_seed").get<std::uint64_t>();
    const ordered_json& r = j.at("region");
    p.region.src_top = r.at("src_top").get<std::size_t>();
    p.region.src_left = r.at("src_left").get<std::size_t>();
    p.region.src_height = r.at("src_height").get<std::size_t>();
    p.region.src_width = r.at("src_width").get<std::size_t>();
    p.region.paste_top = r.at("paste_top").get<std::size_t>();
    p.region.paste_left = r.at("paste_left").get<std::size_t>();
    const ordered_json& t = j.at("transform");
    p.transform.rotation_deg = t.at("rotation_deg").get<double>();
    p.transform.scale = t.at("scale").get<double>();
    p.transform.resize = t.at("resize").get<double>();
    p.transform.blur_sigma = t.at("blur_sigma").get<double>();
  }
  return p;
}

}  // namespace

ManifestEntry::ManifestEntry(ordered_json fields) : fields_(std::move(fields)) {
  if (!fields_.is_object()) throw ValueError("manifest entry must be a JSON object");
  if (!fields_.contains("path") || !fields_["path"].is_string())
    throw ValueError("manifest entry missing string field 'path'");
  path_ = fields_["path"].get<std::string>();
  if (fields_.contains("label")) {
    if (!fields_["label"].is_number_integer())
      throw ValueError("manifest entry 'label' must be an integer");
    const int lbl = fields_["label"].get<int>();
    if (lbl != 0 && lbl != 1) throw ValueError("manifest entry 'label' must be 0 or 1");
    label_ = lbl;
  }
  if (!fields_.contains("domain") || !fields_["domain"].is_string())
    throw ValueError("manifest entry missing string field 'domain'");
  domain_ = fields_["domain"].get<std::string>();
  if (domain_ != "source" && domain_ != "target")
    throw ValueError("manifest entry 'domain' must be 'source' or 'target'");
  if (fields_.contains("provenance")) {
    const synth::Provenance p = provenance_from_json(fields_["provenance"]);
    if (label_.has_value() && (*label_ == 0) != (p.mode == synth::ForgeryMode::none))
      throw ValueError("manifest entry label contradicts provenance mode");
  }
}

ManifestEntry ManifestEntry::from_record(const synth::SynthItemRecord& record) {
  ordered_json j;
  j["path"] = record.path;
  if (!record.mask_path.empty()) j["mask_path"] = record.mask_path;
  j["label"] = record.label;
  j["domain"] = record.domain;
  j["provenance"] = provenance_json(record.provenance);
  return ManifestEntry(std::move(j));
}

std::optional<std::string> ManifestEntry::mask_path() const {
  if (!fields_.contains("mask_path")) return std::nullopt;
  return fields_["mask_path"].get<std::string>();
}

std::optional<synth::Provenance> ManifestEntry::provenance() const {
  if (!fields_.contains("provenance")) return std::nullopt;
  return provenance_from_json(fields_["provenance"]);
}

Manifest manifest_from_records(const std::vector<synth::SynthItemRecord>& records) {
  Manifest m;
  m.reserve(records.size());
  for (const auto& r : records) m.push_back(ManifestEntry::from_record(r));
  return m;
}

void save_manifest(const std::string& path, const Manifest& manifest) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("save_manifest: cannot open '" + path + "' for writing");
  for (const ManifestEntry& e : manifest) out << e.fields().dump() << "\n";
  if (!out) throw IoError("save_manifest: short write to '" + path + "'");
}

Manifest load_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("load_manifest: cannot open '" + path + "'");
  Manifest manifest;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      manifest.emplace_back(ordered_json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": bad JSON line: " + e.what());
    } catch (const ValueError& e) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (!seen.insert(manifest.back().path()).second)
      throw ParseError(path + ":" + std::to_string(line_no) + ": duplicate path '" +
                       manifest.back().path() + "'");
  }
  return manifest;
}

}  // namespace grlforge::io
