#pragma once

#include <cstddef>
#include <vector>

namespace grlforge {

/// Row-major, channel-interleaved raster (index = (r*width + c)*channels + ch)
/// with pixel values in [0, 1]. Corpus images are at least 8x8 with 1 or 3
/// channels; patches cut from them may be smaller.
struct Image {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 1;
  std::vector<double> pixels;

  Image() = default;
  Image(std::size_t h, std::size_t w, std::size_t ch, double fill = 0.0)
      : height(h), width(w), channels(ch), pixels(h * w * ch, fill) {}

  double& at(std::size_t r, std::size_t c, std::size_t ch) {
    return pixels[(r * width + c) * channels + ch];
  }
  double at(std::size_t r, std::size_t c, std::size_t ch) const {
    return pixels[(r * width + c) * channels + ch];
  }

  std::size_t pixel_count() const { return height * width; }
  bool empty() const { return pixels.empty(); }

  bool operator==(const Image& other) const {
    return height == other.height && width == other.width && channels == other.channels &&
           pixels == other.pixels;
  }
};

}  // namespace grlforge
