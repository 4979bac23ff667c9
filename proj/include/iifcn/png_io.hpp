#pragma once

#include <string>

#include "iifcn/image.hpp"

namespace iifcn {

// Reads any 8/16-bit gray, palette, or RGB(A) PNG, normalized to an 8-bit
// 1- or 3-channel raster (alpha stripped, palette expanded, 16-bit scaled).
// Throws std::runtime_error on I/O or decode failure.
ImageU8 read_png(const std::string& path);

// Writes a 1-channel raster as grayscale or a 3-channel one as RGB.
void write_png(const std::string& path, const ImageU8& img);

} // namespace iifcn
