#pragma once

#include <string>

#include "grlforge/image.hpp"

namespace grlforge::io {

// Binary netpbm codec. 3-channel images map to PPM (P6), 1-channel to PGM
// (P5), always maxval 255. Pixel values are quantized with round(255 * v)
// after clamping to [0, 1]; reads scale back by 1/255.
void write_image(const std::string& path, const Image& image);
Image read_image(const std::string& path);

}  // namespace grlforge::io
