#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "grlforge/image.hpp"

namespace grlforge::synth {

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

/// Where a copied region comes from and where it lands. For inpaint-removal
/// items the source rectangle is the removed region and the paste location
/// is unused (kept equal to the source corner).
struct RegionSpec {
  std::size_t src_top = 0, src_left = 0;
  std::size_t src_height = 0, src_width = 0;
  std::size_t paste_top = 0, paste_left = 0;
};

/// Patch post-processing, applied in the fixed order
/// scale -> rotation -> resize -> blur.
struct TransformParams {
  double rotation_deg = 0.0;
  double scale = 1.0;       // > 0
  double resize = 1.0;      // > 0
  double blur_sigma = 0.0;  // >= 0
};

enum class ForgeryMode { none, copy_move, inpaint_removal };

std::string forgery_mode_name(ForgeryMode mode);
ForgeryMode forgery_mode_from(const std::string& name);

struct Provenance {
  ForgeryMode mode = ForgeryMode::none;
  RegionSpec region;
  TransformParams transform;
  std::uint64_t base_seed = 0;  // seed that generated the base image
  std::uint64_t item_seed = 0;  // seed that drew region/transform
};

struct ForgedSample {
  Image image;
  int label = 0;  // authentic = 0, forged = 1
  Image mask;     // 1-channel binary; all-zero iff authentic
  Provenance provenance;
};

struct SynthConfig {
  std::size_t size = 100;
  double forged_fraction = 0.5;
  std::size_t height = 32, width = 32, channels = 3;
  double copy_move_prob = 1.0;  // remainder goes to inpaint removal
  // transform parameter ranges
  double rotation_min = -25.0, rotation_max = 25.0;
  double scale_min = 1.0, scale_max = 1.0;
  double resize_min = 1.0, resize_max = 1.0;
  double blur_min = 0.0, blur_max = 0.5;
  // region sampling
  std::size_t region_min = 8, region_max = 14;
  std::size_t min_separation = 4;
  // whole-image brightness shift applied to every base image
  double brightness_offset = 0.0;
  std::string domain = "source";
  std::uint64_t seed = 0;
  // inpainting stop rule
  double inpaint_tol = 1e-6;
  std::size_t inpaint_max_iters = 10000;

  void validate() const;
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Procedural base image: smooth value-noise background composited with 2-6
/// solid or gradient shapes, clamped to [0, 1]. Deterministic in `seed`.
Image gen_base_image(std::uint64_t seed, std::size_t height, std::size_t width,
                     std::size_t channels);

/// A transformed patch with a binary alpha footprint (1 = painted pixel).
struct TransformedPatch {
  Image pixels;
  std::vector<std::uint8_t> alpha;  // height*width entries

  std::size_t footprint_area() const;
};

/// scale -> rotate (bilinear; right-angle rotations are exact index
/// permutations) -> resize -> Gaussian blur (kernel truncated at 3*sigma,
/// renormalized over in-footprint taps). Rejects parameters whose output
/// footprint falls below 4x4.
TransformedPatch transform_patch(const Image& patch, const TransformParams& params);

/// Deterministic core of the copy-move forgery: cut the source rectangle,
/// transform it, alpha-paste it at the paste corner, record the pasted
/// footprint as the mask. No randomness; replaying a recorded provenance
/// reproduces the sample bit-exactly.
ForgedSample apply_copy_move(const Image& base, const RegionSpec& region,
                             const TransformParams& params);

/// Samples a region and transform from `seed` (rejection sampling keeps the
/// source rectangle and pasted footprint inside bounds and separated by at
/// least min_separation pixels; 100 attempts, then PlacementError) and
/// applies them.
ForgedSample make_copy_move(const Image& base, std::uint64_t seed, const SynthConfig& config);

/// Harmonic fill of the masked region: Jacobi iteration where every masked
/// pixel becomes the mean of its in-bounds 4-neighbours (unmasked neighbours
/// held at their original values) until the max per-pixel change drops below
/// config.inpaint_tol or config.inpaint_max_iters passes. Unmasked pixels are
/// returned bit-unchanged. The mask must be non-empty and must not cover the
/// whole image.
Image inpaint_remove(const Image& image, const Image& mask, const SynthConfig& config);

/// Manifest rows produced by the synthesizer; paths are relative to the
/// corpus directory and assigned here so that a written corpus and its
/// manifest agree.
struct SynthItemRecord {
  std::string path;       // image file, e.g. "img_00004.ppm"
  std::string mask_path;  // mask file for forged items, "" otherwise
  int label = 0;
  std::string domain;
  Provenance provenance;
};

/// Generates the corpus: item i draws everything from
/// mix_seed(config.seed, i); the first round(size*forged_fraction) items are
/// forged (split between copy-move and inpaint removal by copy_move_prob),
/// the rest are untouched base images. Placement failures retry with fresh
/// derived seeds up to 10 times, then raise.
std::pair<std::vector<ForgedSample>, std::vector<SynthItemRecord>> synthesize_dataset(
    const SynthConfig& config);

}  // namespace grlforge::synth
