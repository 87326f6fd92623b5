#pragma once

#include <optional>
#include <string>

#include "grlforge/dann.hpp"
#include "grlforge/datasets.hpp"

namespace grlforge::io {

// Versioned binary model file. Layout: magic "GRLF1", u64 little-endian
// byte length of a UTF-8 JSON header (layer specs, reversal config,
// backbone name, optional normalization), then every parameter tensor in
// construction order as rank, dims, and raw doubles, all 64-bit
// little-endian. Round trips are bit-exact.
struct Checkpoint {
  dann::DannModel model;
  std::string backbone;
  std::optional<Normalization> normalization;
};

void save_checkpoint(const std::string& path, const dann::DannModel& model,
                     const std::string& backbone,
                     const std::optional<Normalization>& normalization);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace grlforge::io
