#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace posepoison {

// 8-bit RGB, row-major.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;  // 3 bytes per pixel

  RgbImage() = default;
  RgbImage(int w, int h, std::array<std::uint8_t, 3> fill = {0, 0, 0});

  std::uint8_t* at(int x, int y) { return data.data() + 3 * (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)); }
  const std::uint8_t* at(int x, int y) const { return data.data() + 3 * (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)); }
};

// Depth in meters, row-major; 0.0 means "no measurement".
struct DepthMap {
  int width = 0;
  int height = 0;
  std::vector<float> data;

  DepthMap() = default;
  DepthMap(int w, int h, float fill = 0.0f);

  float& at(int x, int y) { return data[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)]; }
  float at(int x, int y) const { return data[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)]; }
};

// Binary PPM (P6, maxval 255). `comment` becomes a '#' header line.
void write_ppm(const RgbImage& img, const std::filesystem::path& path,
               const std::string& comment = {});
RgbImage read_ppm(const std::filesystem::path& path);

// Binary PGM (P5, maxval 65535), value = millimeters rounded to nearest,
// 0 = invalid. Returns true when any value was clamped to 65.535 m.
bool write_pgm_depth(const DepthMap& depth, const std::filesystem::path& path,
                     const std::string& comment = {});
DepthMap read_pgm_depth(const std::filesystem::path& path);

struct ImageDims {
  int width = 0;
  int height = 0;
};

// Header-only reads, for manifest validation.
ImageDims read_pnm_dims(const std::filesystem::path& path);

}  // namespace posepoison
