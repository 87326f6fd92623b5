#include "grlforge/image_io.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <vector>

#include "grlforge/errors.hpp"

namespace grlforge::io {

namespace {

[[noreturn]] void parse_fail(const std::string& path, std::streamoff offset,
                             const std::string& what) {
  throw ParseError(path + ": " + what + " (byte offset " + std::to_string(offset) + ")");
}

// Skips netpbm whitespace and '#' comments, then reads one decimal token.
std::size_t read_header_int(std::istream& in, const std::string& path, const char* field) {
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      c = in.get();
    } else {
      break;
    }
  }
  if (c == EOF) parse_fail(path, in.tellg(), std::string("missing ") + field);
  if (c < '0' || c > '9')
    parse_fail(path, static_cast<std::streamoff>(in.tellg()) - 1,
               std::string("expected digit in ") + field);
  std::size_t value = 0;
  while (c >= '0' && c <= '9') {
    value = value * 10 + static_cast<std::size_t>(c - '0');
    if (value > 1000000) parse_fail(path, in.tellg(), std::string(field) + " out of range");
    c = in.get();
  }
  if (c != EOF) in.unget();
  return value;
}

}  // namespace

void write_image(const std::string& path, const Image& image) {
  if (image.channels != 1 && image.channels != 3)
    throw ShapeError("write_image: only 1- or 3-channel images supported");
  if (image.empty()) throw ShapeError("write_image: empty image");

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("write_image: cannot open '" + path + "' for writing");
  out << (image.channels == 3 ? "P6" : "P5") << "\n"
      << image.width << " " << image.height << "\n255\n";

  std::vector<unsigned char> bytes(image.pixels.size());
  for (std::size_t i = 0; i < image.pixels.size(); ++i) {
    double v = image.pixels[i];
    v = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
    bytes[i] = static_cast<unsigned char>(std::lround(v * 255.0));
  }
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write_image: short write to '" + path + "'");
}

Image read_image(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("read_image: cannot open '" + path + "'");

  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (in.gcount() != 2 || magic[0] != 'P' || (magic[1] != '5' && magic[1] != '6'))
    parse_fail(path, 0, "not a P5/P6 netpbm file");
  const std::size_t channels = magic[1] == '6' ? 3 : 1;

  const std::size_t width = read_header_int(in, path, "width");
  const std::size_t height = read_header_int(in, path, "height");
  const std::size_t maxval = read_header_int(in, path, "maxval");
  if (width == 0 || height == 0) parse_fail(path, in.tellg(), "zero image dimension");
  if (maxval != 255) parse_fail(path, in.tellg(), "unsupported maxval (want 255)");

  const int sep = in.get();
  if (sep != ' ' && sep != '\t' && sep != '\r' && sep != '\n')
    parse_fail(path, static_cast<std::streamoff>(in.tellg()) - 1,
               "expected single whitespace after maxval");

  const std::streamoff data_start = in.tellg();
  std::vector<unsigned char> bytes(height * width * channels);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (static_cast<std::size_t>(in.gcount()) != bytes.size())
    parse_fail(path, data_start + in.gcount(),
               "truncated pixel payload (expected " + std::to_string(bytes.size()) +
                   " bytes, got " + std::to_string(in.gcount()) + ")");

  Image img(height, width, channels);
  for (std::size_t i = 0; i < bytes.size(); ++i)
    img.pixels[i] = static_cast<double>(bytes[i]) / 255.0;
  return img;
}

}  // namespace grlforge::io
