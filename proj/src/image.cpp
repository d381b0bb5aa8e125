#include "geoforge/image.hpp"

#include <algorithm>
#include <cmath>

namespace geoforge {

std::size_t Mask::count() const {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

ImageRaster to_gray(const ImageRaster& src) {
  if (src.channels == 1) return src;
  ImageRaster out(src.width, src.height, 1, src.depth);
  for (int y = 0; y < src.height; ++y)
    for (int x = 0; x < src.width; ++x)
      out.at(x, y) = 0.299f * src.at(x, y, 0) + 0.587f * src.at(x, y, 1) + 0.114f * src.at(x, y, 2);
  if (out.depth == SampleDepth::u8) quantize(out);
  return out;
}

void quantize(ImageRaster& img) {
  if (img.depth != SampleDepth::u8) return;
  for (float& v : img.samples) v = std::round(std::clamp(v, 0.0f, 1.0f) * 255.0f) / 255.0f;
}

}  // namespace geoforge
