#ifndef BEVPLAN_GRID_IO_H_
#define BEVPLAN_GRID_IO_H_

#include <string>
#include <vector>

#include "bevplan/grid.h"

namespace bevplan {

// Binary grid container: fixed header (magic "BPG1", version, rows, cols,
// channels, resolution, origin, dtype) followed by channel-major, row-major
// little-endian float32 payload. All channels share one GridSpec.
void WriteGridFile(const std::string& path,
                   const std::vector<const BevGridD*>& channels);
void WriteGridFile(const std::string& path, const BevGridD& grid);

struct GridFile {
  GridSpec spec;
  std::vector<BevGridD> channels;
};

GridFile ReadGridFile(const std::string& path);

// Lossless structured-text export (hexfloat payload) for golden tests.
void WriteGridText(const std::string& path, const BevGridD& grid);
BevGridD ReadGridText(const std::string& path);

}  // namespace bevplan

#endif  // BEVPLAN_GRID_IO_H_
