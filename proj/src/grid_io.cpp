#include "bevplan/grid_io.h"

#include <cstring>
#include <fstream>
#include <sstream>

namespace bevplan {

namespace {

constexpr char kMagic[4] = {'B', 'P', 'G', '1'};
constexpr uint32_t kVersion = 1;
constexpr uint32_t kDtypeF32 = 0;

template <typename T>
void WriteRaw(std::ostream& os, const T& value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T ReadRaw(std::istream& is) {
  T value{};
  is.read(reinterpret_cast<char*>(&value), sizeof(T));
  return value;
}

}  // namespace

void WriteGridFile(const std::string& path,
                   const std::vector<const BevGridD*>& channels) {
  if (channels.empty()) {
    throw std::invalid_argument("WriteGridFile: no channels");
  }
  const GridSpec& spec = channels[0]->spec();
  for (const BevGridD* g : channels) {
    if (!(g->spec() == spec)) {
      throw std::invalid_argument("WriteGridFile: channel spec mismatch");
    }
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("WriteGridFile: cannot open " + path);

  os.write(kMagic, 4);
  WriteRaw(os, kVersion);
  WriteRaw(os, static_cast<uint32_t>(spec.rows));
  WriteRaw(os, static_cast<uint32_t>(spec.cols));
  WriteRaw(os, static_cast<uint32_t>(channels.size()));
  WriteRaw(os, spec.resolution_m);
  WriteRaw(os, spec.origin.x);
  WriteRaw(os, spec.origin.y);
  WriteRaw(os, kDtypeF32);

  std::vector<float> buffer(static_cast<size_t>(spec.size()));
  for (const BevGridD* g : channels) {
    for (int i = 0; i < spec.size(); ++i) {
      buffer[i] = static_cast<float>((*g)[i]);
    }
    os.write(reinterpret_cast<const char*>(buffer.data()),
             static_cast<std::streamsize>(buffer.size() * sizeof(float)));
  }
  if (!os) throw std::runtime_error("WriteGridFile: write failed: " + path);
}

void WriteGridFile(const std::string& path, const BevGridD& grid) {
  WriteGridFile(path, std::vector<const BevGridD*>{&grid});
}

GridFile ReadGridFile(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("ReadGridFile: cannot open " + path);

  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) {
    throw std::runtime_error("ReadGridFile: bad magic in " + path);
  }
  const uint32_t version = ReadRaw<uint32_t>(is);
  if (version != kVersion) {
    throw std::runtime_error("ReadGridFile: unsupported version");
  }
  const uint32_t rows = ReadRaw<uint32_t>(is);
  const uint32_t cols = ReadRaw<uint32_t>(is);
  const uint32_t channels = ReadRaw<uint32_t>(is);
  const double resolution = ReadRaw<double>(is);
  const double origin_x = ReadRaw<double>(is);
  const double origin_y = ReadRaw<double>(is);
  const uint32_t dtype = ReadRaw<uint32_t>(is);
  if (dtype != kDtypeF32) {
    throw std::runtime_error("ReadGridFile: unsupported dtype");
  }

  GridFile file;
  file.spec = GridSpec::Make(cols * resolution, rows * resolution, resolution,
                             {origin_x, origin_y});
  std::vector<float> buffer(static_cast<size_t>(rows) * cols);
  for (uint32_t c = 0; c < channels; ++c) {
    is.read(reinterpret_cast<char*>(buffer.data()),
            static_cast<std::streamsize>(buffer.size() * sizeof(float)));
    if (!is) throw std::runtime_error("ReadGridFile: truncated payload");
    BevGridD grid(file.spec);
    for (size_t i = 0; i < buffer.size(); ++i) grid[static_cast<int>(i)] = buffer[i];
    file.channels.push_back(std::move(grid));
  }
  return file;
}

void WriteGridText(const std::string& path, const BevGridD& grid) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("WriteGridText: cannot open " + path);
  const GridSpec& spec = grid.spec();
  os << "bevgrid 1\n";
  os << spec.rows << " " << spec.cols << "\n";
  os << std::hexfloat;
  os << spec.resolution_m << " " << spec.origin.x << " " << spec.origin.y
     << "\n";
  for (int row = 0; row < spec.rows; ++row) {
    for (int col = 0; col < spec.cols; ++col) {
      if (col > 0) os << " ";
      os << grid.at(row, col);
    }
    os << "\n";
  }
}

BevGridD ReadGridText(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("ReadGridText: cannot open " + path);
  std::string tag;
  int version = 0;
  is >> tag >> version;
  if (tag != "bevgrid" || version != 1) {
    throw std::runtime_error("ReadGridText: bad header in " + path);
  }
  int rows = 0, cols = 0;
  is >> rows >> cols;
  // operator>> does not parse hexfloat; read tokens and use strtod.
  auto read_double = [&is]() {
    std::string token;
    is >> token;
    return std::strtod(token.c_str(), nullptr);
  };
  const double resolution = read_double();
  const double origin_x = read_double();
  const double origin_y = read_double();
  BevGridD grid(GridSpec::Make(cols * resolution, rows * resolution,
                               resolution, {origin_x, origin_y}));
  for (int i = 0; i < grid.spec().size(); ++i) grid[i] = read_double();
  if (!is) throw std::runtime_error("ReadGridText: truncated payload");
  return grid;
}

}  // namespace bevplan
