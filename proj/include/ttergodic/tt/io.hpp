#pragma once

#include <filesystem>
#include <iosfwd>

#include "ttergodic/tt/tensor.hpp"

namespace ttergodic::tt {

// Binary layout, all fields little-endian 64-bit:
//   u64 order d
//   u64 mode sizes K_1..K_d
//   u64 ranks r_0..r_d
//   f64 core values, core i in row-major order over (r_{i-1}, r_i, K_i)

void write_tt(std::ostream& out, const TtTensor& t);
TtTensor read_tt(std::istream& in);

void save_tt(const std::filesystem::path& path, const TtTensor& t);
TtTensor load_tt(const std::filesystem::path& path);

}  // namespace ttergodic::tt
