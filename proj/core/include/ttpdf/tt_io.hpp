#pragma once

#include "ttpdf/tt_tensor.hpp"

#include <filesystem>
#include <iosfwd>

namespace ttpdf {

// Binary format: the line "TTPDF1\n", a little-endian uint64 header length, a
// JSON header (version, d, ranks, grid nodes), then the blocks in order as
// little-endian float64 in their storage layout.

void write_tt(std::ostream& out, const TTTensor& tt);
TTTensor read_tt(std::istream& in);

void save_tt(const std::filesystem::path& path, const TTTensor& tt);
TTTensor load_tt(const std::filesystem::path& path);

}  // namespace ttpdf
