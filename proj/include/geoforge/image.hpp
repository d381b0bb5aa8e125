#pragma once

#include <cstdint>
#include <vector>

#include "geoforge/error.hpp"

namespace geoforge {

enum class SampleDepth { u8, f32 };

/// Row-major interleaved raster. Samples are stored as floats in [0, 1];
/// `depth` records whether they originate from (and quantize back to)
/// 8-bit data.
struct ImageRaster {
  int width = 0;
  int height = 0;
  int channels = 1;
  SampleDepth depth = SampleDepth::f32;
  std::vector<float> samples;

  ImageRaster() = default;
  ImageRaster(int w, int h, int c, SampleDepth d = SampleDepth::f32)
      : width(w), height(h), channels(c), depth(d),
        samples(static_cast<std::size_t>(w) * h * c, 0.0f) {
    if (w < 0 || h < 0 || (c != 1 && c != 3))
      throw GeoError("InvalidRaster", "raster needs non-negative size and 1 or 3 channels");
  }

  float& at(int x, int y, int c = 0) {
    return samples[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  float at(int x, int y, int c = 0) const {
    return samples[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  bool empty() const { return samples.empty(); }
};

/// Per-pixel boolean plane.
struct Mask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;

  Mask() = default;
  Mask(int w, int h, bool value = false)
      : width(w), height(h), bits(static_cast<std::size_t>(w) * h, value ? 1 : 0) {}

  bool at(int x, int y) const { return bits[static_cast<std::size_t>(y) * width + x] != 0; }
  void set(int x, int y, bool v) { bits[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0; }
  std::size_t count() const;
};

/// Luma (Rec. 601) for 3-channel input; copy for 1-channel input.
ImageRaster to_gray(const ImageRaster& src);

/// Snaps every sample to the nearest k/255 for 8-bit rasters.
void quantize(ImageRaster& img);

}  // namespace geoforge
