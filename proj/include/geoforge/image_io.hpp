#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "geoforge/image.hpp"

namespace geoforge::io {

using Bytes = std::vector<std::uint8_t>;

enum class ImageFormat { png, pgm, ppm };

/// PNG (8-bit gray or RGB; palette and alpha are expanded / dropped) and
/// binary PGM/PPM with maxval 255. Samples come back as k/255.
ImageRaster load_image(const Bytes& bytes);

/// f32 rasters are rounded to 8 bits. PGM needs 1 channel, PPM 3.
Bytes save_image(const ImageRaster& img, ImageFormat fmt = ImageFormat::png);

/// 0/255 gray PNG.
Bytes save_mask(const Mask& m);

Bytes read_file(const std::string& path);
void write_file(const std::string& path, const Bytes& bytes);

/// Format from the file extension (.png, .pgm, .ppm).
ImageFormat format_for_path(const std::string& path);

ImageRaster load_image_file(const std::string& path);
void save_image_file(const std::string& path, const ImageRaster& img);

}  // namespace geoforge::io
