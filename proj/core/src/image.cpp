#include "posepoison/image.hpp"

#include <cmath>
#include <fstream>

#include "posepoison/errors.hpp"

namespace posepoison {

namespace {

// PNM header token reader: skips whitespace and '#' comment lines.
int next_pnm_int(std::istream& in, const std::string& path) {
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (std::isspace(c)) {
      c = in.get();
    } else {
      break;
    }
  }
  if (c == EOF) throw ParseError(0, "truncated PNM header in " + path);
  int value = 0;
  bool any = false;
  while (c != EOF && std::isdigit(c)) {
    value = value * 10 + (c - '0');
    any = true;
    c = in.get();
  }
  if (!any) throw ParseError(0, "expected integer in PNM header of " + path);
  return value;
}

std::string read_magic(std::istream& in, const std::string& path) {
  std::string magic;
  in >> magic;
  if (!in) throw ParseError(0, "unreadable PNM magic in " + path);
  return magic;
}

void write_header(std::ostream& out, const std::string& magic, int w, int h, int maxval,
                  const std::string& comment) {
  out << magic << "\n";
  if (!comment.empty()) out << "# " << comment << "\n";
  out << w << " " << h << "\n" << maxval << "\n";
}

}  // namespace

RgbImage::RgbImage(int w, int h, std::array<std::uint8_t, 3> fill) : width(w), height(h) {
  data.resize(3 * static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
  for (std::size_t i = 0; i < data.size(); i += 3) {
    data[i] = fill[0];
    data[i + 1] = fill[1];
    data[i + 2] = fill[2];
  }
}

DepthMap::DepthMap(int w, int h, float fill)
    : width(w), height(h), data(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {}

void write_ppm(const RgbImage& img, const std::filesystem::path& path,
               const std::string& comment) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw MissingFile("cannot open for write: " + path.string());
  write_header(out, "P6", img.width, img.height, 255, comment);
  out.write(reinterpret_cast<const char*>(img.data.data()),
            static_cast<std::streamsize>(img.data.size()));
  if (!out) throw Error("write failed: " + path.string());
}

RgbImage read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingFile(path.string());
  if (read_magic(in, path.string()) != "P6") throw ParseError(0, "not a P6 PPM: " + path.string());
  RgbImage img;
  img.width = next_pnm_int(in, path.string());
  img.height = next_pnm_int(in, path.string());
  const int maxval = next_pnm_int(in, path.string());
  if (maxval != 255) throw ParseError(0, "unsupported PPM maxval in " + path.string());
  img.data.resize(3 * static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height));
  in.read(reinterpret_cast<char*>(img.data.data()), static_cast<std::streamsize>(img.data.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.data.size()))
    throw ParseError(0, "truncated PPM payload in " + path.string());
  return img;
}

bool write_pgm_depth(const DepthMap& depth, const std::filesystem::path& path,
                     const std::string& comment) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw MissingFile("cannot open for write: " + path.string());
  write_header(out, "P5", depth.width, depth.height, 65535, comment);
  bool clamped = false;
  std::vector<std::uint8_t> row(static_cast<std::size_t>(depth.width) * 2);
  for (int y = 0; y < depth.height; ++y) {
    for (int x = 0; x < depth.width; ++x) {
      const double mm = std::round(static_cast<double>(depth.at(x, y)) * 1000.0);
      std::uint16_t v;
      if (mm <= 0.0) {
        v = 0;
      } else if (mm > 65535.0) {
        v = 65535;
        clamped = true;
      } else {
        v = static_cast<std::uint16_t>(mm);
      }
      row[static_cast<std::size_t>(x) * 2] = static_cast<std::uint8_t>(v >> 8);  // big-endian per PNM
      row[static_cast<std::size_t>(x) * 2 + 1] = static_cast<std::uint8_t>(v & 0xff);
    }
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  if (!out) throw Error("write failed: " + path.string());
  return clamped;
}

DepthMap read_pgm_depth(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingFile(path.string());
  if (read_magic(in, path.string()) != "P5") throw ParseError(0, "not a P5 PGM: " + path.string());
  DepthMap depth;
  depth.width = next_pnm_int(in, path.string());
  depth.height = next_pnm_int(in, path.string());
  const int maxval = next_pnm_int(in, path.string());
  if (maxval != 65535) throw ParseError(0, "unsupported PGM maxval in " + path.string());
  const std::size_t n = static_cast<std::size_t>(depth.width) * static_cast<std::size_t>(depth.height);
  std::vector<std::uint8_t> raw(n * 2);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size()))
    throw ParseError(0, "truncated PGM payload in " + path.string());
  depth.data.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint16_t v = static_cast<std::uint16_t>((raw[i * 2] << 8) | raw[i * 2 + 1]);
    depth.data[i] = static_cast<float>(v) / 1000.0f;
  }
  return depth;
}

ImageDims read_pnm_dims(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingFile(path.string());
  const std::string magic = read_magic(in, path.string());
  if (magic != "P5" && magic != "P6") throw ParseError(0, "not a PNM file: " + path.string());
  ImageDims dims;
  dims.width = next_pnm_int(in, path.string());
  dims.height = next_pnm_int(in, path.string());
  return dims;
}

}  // namespace posepoison
