#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ne/common.hpp"

namespace ne {

// Binary tensor block: 8-byte magic "NETENSR\0", u32 version, u32 rank,
// u64 dims[rank], then little-endian float32 payload, row-major.
struct TensorData {
  std::vector<int64_t> dims;
  std::vector<float> values;
};

void write_tensor_file(const std::string& path, const std::vector<int64_t>& dims,
                       const float* values);
TensorData read_tensor_file(const std::string& path);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

void ensure_dir(const std::string& path);
bool file_exists(const std::string& path);

}  // namespace ne
