#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "padel/tensor.hpp"

namespace padel {

// Named-tensor container. Binary layout:
//   u32 magic "PCKP", u32 version,
//   u32 count, then per tensor:
//     u32 name_len, name bytes, u64 rows, u64 cols, rows*cols f64 (raw bytes).
// Doubles are written raw, so save/load round-trips bit-exactly.
void save_checkpoint(const std::filesystem::path& path,
                     const std::vector<NamedParam>& params);

// Loads into existing tensors; every name must be present with matching shape.
void load_checkpoint(const std::filesystem::path& path,
                     const std::vector<NamedParam>& params);

// Reads the whole container.
std::map<std::string, Tensor> read_checkpoint(
    const std::filesystem::path& path);

}  // namespace padel
