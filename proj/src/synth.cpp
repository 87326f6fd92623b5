#include "grlforge/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "grlforge/errors.hpp"
#include "grlforge/rng.hpp"

namespace grlforge::synth {

std::string forgery_mode_name(ForgeryMode mode) {
  switch (mode) {
    case ForgeryMode::none: return "none";
    case ForgeryMode::copy_move: return "copy_move";
    case ForgeryMode::inpaint_removal: return "inpaint_removal";
  }
  return "none";
}

ForgeryMode forgery_mode_from(const std::string& name) {
  if (name == "none") return ForgeryMode::none;
  if (name == "copy_move") return ForgeryMode::copy_move;
  if (name == "inpaint_removal") return ForgeryMode::inpaint_removal;
  throw ValueError("unknown forgery mode '" + name + "'");
}

void SynthConfig::validate() const {
  if (!(forged_fraction >= 0.0 && forged_fraction <= 1.0))
    throw ConfigError("SynthConfig: forged_fraction must lie in [0, 1]");
  if (height < 8 || width < 8)
    throw ConfigError("SynthConfig: image dimensions must be at least 8x8");
  if (channels != 1 && channels != 3)
    throw ConfigError("SynthConfig: channels must be 1 or 3");
  if (!(copy_move_prob >= 0.0 && copy_move_prob <= 1.0))
    throw ConfigError("SynthConfig: copy_move_prob must lie in [0, 1]");
  if (!(rotation_min <= rotation_max))
    throw ConfigError("SynthConfig: rotation range inverted");
  if (!(scale_min > 0.0 && scale_min <= scale_max))
    throw ConfigError("SynthConfig: scale range must be positive and ordered");
  if (!(resize_min > 0.0 && resize_min <= resize_max))
    throw ConfigError("SynthConfig: resize range must be positive and ordered");
  if (!(blur_min >= 0.0 && blur_min <= blur_max))
    throw ConfigError("SynthConfig: blur range must be non-negative and ordered");
  if (region_min < 1 || region_min > region_max)
    throw ConfigError("SynthConfig: region size range invalid");
  if (region_max > std::min(height, width))
    throw ConfigError("SynthConfig: region_max exceeds image dimensions");
  if (domain != "source" && domain != "target")
    throw ConfigError("SynthConfig: domain must be 'source' or 'target'");
  if (!(inpaint_tol > 0.0) || inpaint_max_iters < 1)
    throw ConfigError("SynthConfig: invalid inpainting stop rule");
}

// ---------------------------------------------------------------------------
// base image generator
// ---------------------------------------------------------------------------

namespace {

double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

// Smoothstep-interpolated lattice noise lookup at pixel (r, c).
double lattice_at(const std::vector<double>& grid, std::size_t gw, std::size_t channels,
                  std::size_t cell, std::size_t r, std::size_t c, std::size_t ch) {
  const double gr = static_cast<double>(r) / static_cast<double>(cell);
  const double gc = static_cast<double>(c) / static_cast<double>(cell);
  const std::size_t r0 = static_cast<std::size_t>(gr);
  const std::size_t c0 = static_cast<std::size_t>(gc);
  const double tr = smoothstep(gr - static_cast<double>(r0));
  const double tc = smoothstep(gc - static_cast<double>(c0));
  const double v00 = grid[(r0 * gw + c0) * channels + ch];
  const double v01 = grid[(r0 * gw + c0 + 1) * channels + ch];
  const double v10 = grid[((r0 + 1) * gw + c0) * channels + ch];
  const double v11 = grid[((r0 + 1) * gw + c0 + 1) * channels + ch];
  const double top = v00 + (v01 - v00) * tc;
  const double bot = v10 + (v11 - v10) * tc;
  return top + (bot - top) * tr;
}

}  // namespace

Image gen_base_image(std::uint64_t seed, std::size_t height, std::size_t width,
                     std::size_t channels) {
  if (height < 8 || width < 8) throw ConfigError("gen_base_image: dims must be >= 8");
  if (channels != 1 && channels != 3)
    throw ConfigError("gen_base_image: channels must be 1 or 3");
  Rng rng(seed);

  // smooth value-noise background
  const std::size_t cell = 6 + rng.index(5);  // 6..10 px per noise cell
  const std::size_t gh = height / cell + 2, gw = width / cell + 2;
  std::vector<double> grid(gh * gw * channels);
  for (double& v : grid) v = rng.next_double();

  Image img(height, width, channels);
  for (std::size_t r = 0; r < height; ++r)
    for (std::size_t c = 0; c < width; ++c)
      for (std::size_t ch = 0; ch < channels; ++ch)
        img.at(r, c, ch) = lattice_at(grid, gw, channels, cell, r, c, ch);

  // 2..6 solid or gradient shapes with feathered edges, drawn in order
  const std::size_t n_shapes = 2 + rng.index(5);
  for (std::size_t s = 0; s < n_shapes; ++s) {
    const std::size_t kind = rng.index(3);  // 0 rect, 1 ellipse, 2 gradient rect
    const std::size_t min_side = std::max<std::size_t>(2, height / 6);
    const std::size_t max_side = std::max(min_side + 1, height / 2);
    const std::size_t sh = min_side + rng.index(max_side - min_side + 1);
    const std::size_t sw = min_side + rng.index(max_side - min_side + 1);
    const std::size_t top = rng.index(height - std::min(sh, height - 1));
    const std::size_t left = rng.index(width - std::min(sw, width - 1));
    double color0[3], color1[3];
    for (std::size_t ch = 0; ch < channels; ++ch) color0[ch] = rng.next_double();
    for (std::size_t ch = 0; ch < channels; ++ch) color1[ch] = rng.next_double();
    const bool grad_vertical = rng.index(2) == 1;

    const std::size_t bottom = std::min(height, top + sh);
    const std::size_t right = std::min(width, left + sw);
    const double cy = (static_cast<double>(top) + static_cast<double>(bottom) - 1.0) / 2.0;
    const double cx = (static_cast<double>(left) + static_cast<double>(right) - 1.0) / 2.0;
    const double ry = std::max(1.0, (static_cast<double>(bottom - top)) / 2.0);
    const double rx = std::max(1.0, (static_cast<double>(right - left)) / 2.0);
    const double feather = 2.0;
    for (std::size_t r = top; r < bottom; ++r) {
      for (std::size_t c = left; c < right; ++c) {
        double edge_dist;
        if (kind == 1) {
          const double dy = (static_cast<double>(r) - cy) / ry;
          const double dx = (static_cast<double>(c) - cx) / rx;
          const double rho = std::sqrt(dy * dy + dx * dx);
          if (rho > 1.0) continue;
          edge_dist = (1.0 - rho) * std::min(ry, rx);
        } else {
          const double dr = std::min<double>(static_cast<double>(r - top),
                                             static_cast<double>(bottom - 1 - r));
          const double dc = std::min<double>(static_cast<double>(c - left),
                                             static_cast<double>(right - 1 - c));
          edge_dist = std::min(dr, dc);
        }
        const double u = clamp01((edge_dist + 0.5) / feather);
        const double alpha = u * u * (3.0 - 2.0 * u);
        double t = 0.0;
        if (kind == 2) {
          t = grad_vertical
                  ? static_cast<double>(r - top) / std::max<std::size_t>(1, bottom - top - 1)
                  : static_cast<double>(c - left) / std::max<std::size_t>(1, right - left - 1);
        }
        for (std::size_t ch = 0; ch < channels; ++ch) {
          const double col = color0[ch] + (color1[ch] - color0[ch]) * t;
          img.at(r, c, ch) = img.at(r, c, ch) * (1.0 - alpha) + col * alpha;
        }
      }
    }
  }

  // compress into mid-range so the grain below never clips against 0 or 1;
  // clipping would tie local grain energy to local brightness
  for (double& v : img.pixels) v = 0.15 + 0.70 * v;

  // per-pixel grain over the whole composite, the procedural counterpart of
  // photographic sensor noise; patch resampling flattens it into a trace
  for (double& v : img.pixels) v += 0.3 * (rng.next_double() - 0.5);

  for (double& v : img.pixels) v = clamp01(v);
  return img;
}

// ---------------------------------------------------------------------------
// patch transforms
// ---------------------------------------------------------------------------

std::size_t TransformedPatch::footprint_area() const {
  std::size_t n = 0;
  for (std::uint8_t a : alpha) n += a;
  return n;
}

namespace {

struct AlphaPatch {
  Image pixels;
  std::vector<std::uint8_t> alpha;
};

// Alpha-weighted bilinear sample; returns false when the covered weight
// drops below one half (treated as out of support).
bool sample_bilinear(const AlphaPatch& p, double sr, double sc, double* out) {
  const long h = static_cast<long>(p.pixels.height), w = static_cast<long>(p.pixels.width);
  const long r0 = static_cast<long>(std::floor(sr)), c0 = static_cast<long>(std::floor(sc));
  const double fr = sr - static_cast<double>(r0), fc = sc - static_cast<double>(c0);
  const double wts[4] = {(1 - fr) * (1 - fc), (1 - fr) * fc, fr * (1 - fc), fr * fc};
  const long rs[4] = {r0, r0, r0 + 1, r0 + 1};
  const long cs[4] = {c0, c0 + 1, c0, c0 + 1};
  double den = 0.0;
  const std::size_t ch = p.pixels.channels;
  for (std::size_t k = 0; k < ch; ++k) out[k] = 0.0;
  for (int k = 0; k < 4; ++k) {
    if (rs[k] < 0 || rs[k] >= h || cs[k] < 0 || cs[k] >= w) continue;
    const std::size_t rr = static_cast<std::size_t>(rs[k]);
    const std::size_t cc = static_cast<std::size_t>(cs[k]);
    if (!p.alpha[rr * p.pixels.width + cc]) continue;
    den += wts[k];
    for (std::size_t chn = 0; chn < ch; ++chn) out[chn] += wts[k] * p.pixels.at(rr, cc, chn);
  }
  if (den < 0.5) return false;
  for (std::size_t chn = 0; chn < ch; ++chn) out[chn] /= den;
  return true;
}

AlphaPatch resample(const AlphaPatch& p, std::size_t oh, std::size_t ow) {
  AlphaPatch out{Image(oh, ow, p.pixels.channels), std::vector<std::uint8_t>(oh * ow, 0)};
  const double rh = static_cast<double>(p.pixels.height) / static_cast<double>(oh);
  const double rw = static_cast<double>(p.pixels.width) / static_cast<double>(ow);
  double px[3];
  for (std::size_t r = 0; r < oh; ++r) {
    const double sr = (static_cast<double>(r) + 0.5) * rh - 0.5;
    for (std::size_t c = 0; c < ow; ++c) {
      const double sc = (static_cast<double>(c) + 0.5) * rw - 0.5;
      if (!sample_bilinear(p, sr, sc, px)) continue;
      out.alpha[r * ow + c] = 1;
      for (std::size_t ch = 0; ch < p.pixels.channels; ++ch) out.pixels.at(r, c, ch) = px[ch];
    }
  }
  return out;
}

// Right-angle rotations are exact index permutations; quarter = turns CCW.
AlphaPatch rotate_quarter(const AlphaPatch& p, int quarter) {
  const std::size_t h = p.pixels.height, w = p.pixels.width;
  const std::size_t oh = (quarter % 2 == 0) ? h : w;
  const std::size_t ow = (quarter % 2 == 0) ? w : h;
  AlphaPatch out{Image(oh, ow, p.pixels.channels), std::vector<std::uint8_t>(oh * ow, 0)};
  for (std::size_t r = 0; r < oh; ++r) {
    for (std::size_t c = 0; c < ow; ++c) {
      std::size_t sr = 0, sc = 0;
      switch (quarter) {
        case 1: sr = c; sc = w - 1 - r; break;           // 90 CCW
        case 2: sr = h - 1 - r; sc = w - 1 - c; break;   // 180
        case 3: sr = h - 1 - c; sc = r; break;           // 270
        default: sr = r; sc = c; break;
      }
      out.alpha[r * ow + c] = p.alpha[sr * w + sc];
      for (std::size_t ch = 0; ch < p.pixels.channels; ++ch)
        out.pixels.at(r, c, ch) = p.pixels.at(sr, sc, ch);
    }
  }
  return out;
}

AlphaPatch rotate(const AlphaPatch& p, double deg) {
  double m = std::fmod(deg, 360.0);
  if (m < 0) m += 360.0;
  if (std::fmod(m, 90.0) == 0.0) {
    const int quarter = static_cast<int>(m / 90.0);
    return quarter == 0 ? p : rotate_quarter(p, quarter);
  }
  const double rad = m * (3.14159265358979323846 / 180.0);
  const double cs = std::cos(rad), sn = std::sin(rad);
  const double h = static_cast<double>(p.pixels.height), w = static_cast<double>(p.pixels.width);
  const std::size_t oh =
      static_cast<std::size_t>(std::ceil(h * std::abs(cs) + w * std::abs(sn) - 1e-9));
  const std::size_t ow =
      static_cast<std::size_t>(std::ceil(h * std::abs(sn) + w * std::abs(cs) - 1e-9));
  AlphaPatch out{Image(oh, ow, p.pixels.channels), std::vector<std::uint8_t>(oh * ow, 0)};
  const double ocy = (static_cast<double>(oh) - 1.0) / 2.0;
  const double ocx = (static_cast<double>(ow) - 1.0) / 2.0;
  const double icy = (h - 1.0) / 2.0, icx = (w - 1.0) / 2.0;
  double px[3];
  for (std::size_t r = 0; r < oh; ++r) {
    for (std::size_t c = 0; c < ow; ++c) {
      const double dy = static_cast<double>(r) - ocy;
      const double dx = static_cast<double>(c) - ocx;
      // inverse map: rotate the output offset by -deg (y-down raster)
      const double sr = icy + (cs * dy - sn * dx);
      const double sc = icx + (sn * dy + cs * dx);
      if (!sample_bilinear(p, sr, sc, px)) continue;
      out.alpha[r * ow + c] = 1;
      for (std::size_t ch = 0; ch < p.pixels.channels; ++ch) out.pixels.at(r, c, ch) = px[ch];
    }
  }
  return out;
}

void blur_in_place(AlphaPatch& p, double sigma) {
  const long radius = static_cast<long>(std::ceil(3.0 * sigma));
  const long h = static_cast<long>(p.pixels.height), w = static_cast<long>(p.pixels.width);
  const std::size_t ch = p.pixels.channels;
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1) *
                             static_cast<std::size_t>(2 * radius + 1));
  for (long u = -radius; u <= radius; ++u)
    for (long v = -radius; v <= radius; ++v)
      kernel[static_cast<std::size_t>((u + radius) * (2 * radius + 1) + (v + radius))] =
          std::exp(-static_cast<double>(u * u + v * v) / (2.0 * sigma * sigma));

  Image out = p.pixels;
  for (long r = 0; r < h; ++r) {
    for (long c = 0; c < w; ++c) {
      if (!p.alpha[static_cast<std::size_t>(r * w + c)]) continue;
      double den = 0.0, num[3] = {0.0, 0.0, 0.0};
      for (long u = -radius; u <= radius; ++u) {
        const long rr = r + u;
        if (rr < 0 || rr >= h) continue;
        for (long v = -radius; v <= radius; ++v) {
          const long cc = c + v;
          if (cc < 0 || cc >= w) continue;
          if (!p.alpha[static_cast<std::size_t>(rr * w + cc)]) continue;
          const double wt =
              kernel[static_cast<std::size_t>((u + radius) * (2 * radius + 1) + (v + radius))];
          den += wt;
          for (std::size_t chn = 0; chn < ch; ++chn)
            num[chn] += wt * p.pixels.at(static_cast<std::size_t>(rr),
                                         static_cast<std::size_t>(cc), chn);
        }
      }
      for (std::size_t chn = 0; chn < ch; ++chn)
        out.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c), chn) = num[chn] / den;
    }
  }
  p.pixels = std::move(out);
}

std::size_t scaled_extent(std::size_t extent, double factor) {
  return static_cast<std::size_t>(
      std::max<long long>(1, std::llround(static_cast<double>(extent) * factor)));
}

void rotated_extent(std::size_t h, std::size_t w, double deg, std::size_t* oh,
                    std::size_t* ow) {
  double m = std::fmod(deg, 360.0);
  if (m < 0) m += 360.0;
  if (std::fmod(m, 90.0) == 0.0) {
    const int quarter = static_cast<int>(m / 90.0);
    *oh = (quarter % 2 == 0) ? h : w;
    *ow = (quarter % 2 == 0) ? w : h;
    return;
  }
  const double rad = m * (3.14159265358979323846 / 180.0);
  const double cs = std::abs(std::cos(rad)), sn = std::abs(std::sin(rad));
  *oh = static_cast<std::size_t>(
      std::ceil(static_cast<double>(h) * cs + static_cast<double>(w) * sn - 1e-9));
  *ow = static_cast<std::size_t>(
      std::ceil(static_cast<double>(h) * sn + static_cast<double>(w) * cs - 1e-9));
}

void check_params(const TransformParams& params) {
  if (!(params.scale > 0.0) || !(params.resize > 0.0))
    throw ValueError("transform_patch: scale and resize factors must be > 0");
  if (!(params.blur_sigma >= 0.0))
    throw ValueError("transform_patch: blur sigma must be >= 0");
}

}  // namespace

// Output pixel dims of transform_patch for the given input dims; shared by
// the placement sampler so predicted and actual footprints agree exactly.
static void transformed_dims(std::size_t h, std::size_t w, const TransformParams& params,
                             std::size_t* oh, std::size_t* ow) {
  const std::size_t h1 = scaled_extent(h, params.scale);
  const std::size_t w1 = scaled_extent(w, params.scale);
  std::size_t h2 = 0, w2 = 0;
  rotated_extent(h1, w1, params.rotation_deg, &h2, &w2);
  *oh = scaled_extent(h2, params.resize);
  *ow = scaled_extent(w2, params.resize);
}

TransformedPatch transform_patch(const Image& patch, const TransformParams& params) {
  check_params(params);
  if (patch.empty()) throw ShapeError("transform_patch: empty patch");
  AlphaPatch cur{patch, std::vector<std::uint8_t>(patch.height * patch.width, 1)};

  if (params.scale != 1.0)
    cur = resample(cur, scaled_extent(patch.height, params.scale),
                   scaled_extent(patch.width, params.scale));
  cur = rotate(cur, params.rotation_deg);
  if (params.resize != 1.0)
    cur = resample(cur, scaled_extent(cur.pixels.height, params.resize),
                   scaled_extent(cur.pixels.width, params.resize));
  if (cur.pixels.height < 4 || cur.pixels.width < 4)
    throw ValueError("transform_patch: output footprint degenerates below 4x4");
  if (params.blur_sigma > 0.0) blur_in_place(cur, params.blur_sigma);

  return TransformedPatch{std::move(cur.pixels), std::move(cur.alpha)};
}

// ---------------------------------------------------------------------------
// copy-move
// ---------------------------------------------------------------------------

ForgedSample apply_copy_move(const Image& base, const RegionSpec& region,
                             const TransformParams& params) {
  if (region.src_height < 1 || region.src_width < 1 ||
      region.src_top + region.src_height > base.height ||
      region.src_left + region.src_width > base.width)
    throw ValueError("apply_copy_move: source rectangle outside image bounds");

  Image patch(region.src_height, region.src_width, base.channels);
  for (std::size_t r = 0; r < region.src_height; ++r)
    for (std::size_t c = 0; c < region.src_width; ++c)
      for (std::size_t ch = 0; ch < base.channels; ++ch)
        patch.at(r, c, ch) = base.at(region.src_top + r, region.src_left + c, ch);

  TransformedPatch tp = transform_patch(patch, params);
  if (region.paste_top + tp.pixels.height > base.height ||
      region.paste_left + tp.pixels.width > base.width)
    throw ValueError("apply_copy_move: pasted footprint outside image bounds");

  ForgedSample sample;
  sample.image = base;
  sample.mask = Image(base.height, base.width, 1, 0.0);
  for (std::size_t r = 0; r < tp.pixels.height; ++r) {
    for (std::size_t c = 0; c < tp.pixels.width; ++c) {
      if (!tp.alpha[r * tp.pixels.width + c]) continue;
      for (std::size_t ch = 0; ch < base.channels; ++ch)
        sample.image.at(region.paste_top + r, region.paste_left + c, ch) =
            tp.pixels.at(r, c, ch);
      sample.mask.at(region.paste_top + r, region.paste_left + c, 0) = 1.0;
    }
  }
  sample.label = 1;
  sample.provenance.mode = ForgeryMode::copy_move;
  sample.provenance.region = region;
  sample.provenance.transform = params;
  return sample;
}

namespace {

// Chebyshev gap between two half-open rectangles; negative when they overlap.
long rect_gap(long a_top, long a_left, long a_h, long a_w, long b_top, long b_left, long b_h,
              long b_w) {
  const long row_gap = std::max(b_top - (a_top + a_h), a_top - (b_top + b_h));
  const long col_gap = std::max(b_left - (a_left + a_w), a_left - (b_left + b_w));
  return std::max(row_gap, col_gap);
}

}  // namespace

ForgedSample make_copy_move(const Image& base, std::uint64_t seed, const SynthConfig& config) {
  Rng rng(seed);
  for (int attempt = 0; attempt < 100; ++attempt) {
    RegionSpec region;
    region.src_height = config.region_min + rng.index(config.region_max - config.region_min + 1);
    region.src_width = config.region_min + rng.index(config.region_max - config.region_min + 1);

    TransformParams params;
    params.rotation_deg = rng.uniform(config.rotation_min, config.rotation_max);
    params.scale = rng.uniform(config.scale_min, config.scale_max);
    params.resize = rng.uniform(config.resize_min, config.resize_max);
    params.blur_sigma = rng.uniform(config.blur_min, config.blur_max);

    std::size_t out_h = 0, out_w = 0;
    transformed_dims(region.src_height, region.src_width, params, &out_h, &out_w);
    if (out_h < 4 || out_w < 4 || out_h > base.height || out_w > base.width) continue;

    region.src_top = rng.index(base.height - region.src_height + 1);
    region.src_left = rng.index(base.width - region.src_width + 1);
    region.paste_top = rng.index(base.height - out_h + 1);
    region.paste_left = rng.index(base.width - out_w + 1);

    const long gap = rect_gap(
        static_cast<long>(region.src_top), static_cast<long>(region.src_left),
        static_cast<long>(region.src_height), static_cast<long>(region.src_width),
        static_cast<long>(region.paste_top), static_cast<long>(region.paste_left),
        static_cast<long>(out_h), static_cast<long>(out_w));
    if (gap < static_cast<long>(config.min_separation)) continue;

    ForgedSample sample = apply_copy_move(base, region, params);
    sample.provenance.item_seed = seed;
    return sample;
  }
  throw PlacementError(
      "make_copy_move: no disjoint placement found in 100 attempts (image " +
      std::to_string(base.height) + "x" + std::to_string(base.width) + ", regions " +
      std::to_string(config.region_min) + ".." + std::to_string(config.region_max) + ")");
}

// ---------------------------------------------------------------------------
// diffusion inpainting
// ---------------------------------------------------------------------------

Image inpaint_remove(const Image& image, const Image& mask, const SynthConfig& config) {
  if (mask.height != image.height || mask.width != image.width || mask.channels != 1)
    throw ShapeError("inpaint_remove: mask must be 1-channel with matching dimensions");

  std::vector<std::size_t> holes;
  for (std::size_t p = 0; p < mask.pixel_count(); ++p)
    if (mask.pixels[p] > 0.5) holes.push_back(p);
  if (holes.empty()) throw ValueError("inpaint_remove: mask is empty");
  if (holes.size() == mask.pixel_count())
    throw ValueError("inpaint_remove: mask covers the whole image");

  const std::size_t w = image.width, h = image.height, ch = image.channels;
  Image cur = image;
  for (std::size_t p : holes)
    for (std::size_t c = 0; c < ch; ++c) cur.pixels[p * ch + c] = 0.5;
  Image next = cur;

  for (std::size_t iter = 0; iter < config.inpaint_max_iters; ++iter) {
    double max_change = 0.0;
    for (std::size_t p : holes) {
      const std::size_t r = p / w, c = p % w;
      double sum[3] = {0.0, 0.0, 0.0};
      int count = 0;
      auto tap = [&](std::size_t rr, std::size_t cc) {
        ++count;
        for (std::size_t chn = 0; chn < ch; ++chn)
          sum[chn] += cur.pixels[(rr * w + cc) * ch + chn];
      };
      if (r > 0) tap(r - 1, c);
      if (r + 1 < h) tap(r + 1, c);
      if (c > 0) tap(r, c - 1);
      if (c + 1 < w) tap(r, c + 1);
      for (std::size_t chn = 0; chn < ch; ++chn) {
        const double v = sum[chn] / static_cast<double>(count);
        max_change = std::max(max_change, std::abs(v - cur.pixels[p * ch + chn]));
        next.pixels[p * ch + chn] = v;
      }
    }
    std::swap(cur.pixels, next.pixels);
    if (max_change < config.inpaint_tol) break;
  }
  return cur;
}

// ---------------------------------------------------------------------------
// corpus synthesis
// ---------------------------------------------------------------------------

namespace {

Image rect_mask(std::size_t h, std::size_t w, const RegionSpec& region) {
  Image mask(h, w, 1, 0.0);
  for (std::size_t r = 0; r < region.src_height; ++r)
    for (std::size_t c = 0; c < region.src_width; ++c)
      mask.at(region.src_top + r, region.src_left + c, 0) = 1.0;
  return mask;
}

std::string item_file(const char* stem, std::size_t i, const char* ext) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s_%05zu.%s", stem, i, ext);
  return buf;
}

}  // namespace

std::pair<std::vector<ForgedSample>, std::vector<SynthItemRecord>> synthesize_dataset(
    const SynthConfig& config) {
  config.validate();
  const std::size_t n_forged = static_cast<std::size_t>(
      std::llround(config.forged_fraction * static_cast<double>(config.size)));

  std::vector<ForgedSample> samples;
  std::vector<SynthItemRecord> records;
  samples.reserve(config.size);
  records.reserve(config.size);

  for (std::size_t i = 0; i < config.size; ++i) {
    const std::uint64_t item_seed = mix_seed(config.seed, i);
    const std::uint64_t base_seed = mix_seed(item_seed, 1);
    Image base = gen_base_image(base_seed, config.height, config.width, config.channels);
    if (config.brightness_offset != 0.0) {
      for (double& v : base.pixels) v = clamp01(v + config.brightness_offset);
    }

    ForgedSample sample;
    if (i < n_forged) {
      Rng mode_rng(mix_seed(item_seed, 2));
      const bool is_copy_move = mode_rng.next_double() < config.copy_move_prob;
      bool placed = false;
      for (std::size_t retry = 0; retry < 10 && !placed; ++retry) {
        const std::uint64_t try_seed = mix_seed(item_seed, 3 + retry);
        if (is_copy_move) {
          try {
            sample = make_copy_move(base, try_seed, config);
            placed = true;
          } catch (const PlacementError&) {
            // resample with the next derived seed
          }
        } else {
          Rng rng(try_seed);
          RegionSpec region;
          region.src_height =
              config.region_min + rng.index(config.region_max - config.region_min + 1);
          region.src_width =
              config.region_min + rng.index(config.region_max - config.region_min + 1);
          region.src_top = rng.index(config.height - region.src_height + 1);
          region.src_left = rng.index(config.width - region.src_width + 1);
          region.paste_top = region.src_top;
          region.paste_left = region.src_left;
          const Image mask = rect_mask(config.height, config.width, region);
          sample.image = inpaint_remove(base, mask, config);
          sample.mask = mask;
          sample.label = 1;
          sample.provenance.mode = ForgeryMode::inpaint_removal;
          sample.provenance.region = region;
          sample.provenance.transform = TransformParams{};
          sample.provenance.item_seed = try_seed;
          placed = true;
        }
      }
      if (!placed) {
        throw PlacementError("synthesize_dataset: item " + std::to_string(i) +
                             " failed placement after 10 retries");
      }
    } else {
      sample.image = base;
      sample.label = 0;
      sample.mask = Image(config.height, config.width, 1, 0.0);
      sample.provenance.mode = ForgeryMode::none;
    }
    sample.provenance.base_seed = base_seed;

    SynthItemRecord rec;
    rec.path = item_file("img", i, config.channels == 3 ? "ppm" : "pgm");
    if (sample.label == 1) rec.mask_path = item_file("msk", i, "pgm");
    rec.label = sample.label;
    rec.domain = config.domain;
    rec.provenance = sample.provenance;
    records.push_back(std::move(rec));
    samples.push_back(std::move(sample));
  }
  return {std::move(samples), std::move(records)};
}

}  // namespace grlforge::synth
