#include "ne/io.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>

namespace ne {

namespace {

constexpr char kTensorMagic[8] = {'N', 'E', 'T', 'E', 'N', 'S', 'R', '\0'};
constexpr uint32_t kTensorVersion = 1;

template <typename T>
void write_pod(std::ofstream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& is, const std::string& path) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) fail("truncated tensor file: " + path);
  return v;
}

}  // namespace

void write_tensor_file(const std::string& path, const std::vector<int64_t>& dims,
                       const float* values) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail("cannot write tensor file: " + path);
  os.write(kTensorMagic, sizeof(kTensorMagic));
  write_pod<uint32_t>(os, kTensorVersion);
  write_pod<uint32_t>(os, static_cast<uint32_t>(dims.size()));
  int64_t size = 1;
  for (int64_t d : dims) {
    write_pod<uint64_t>(os, static_cast<uint64_t>(d));
    size *= d;
  }
  os.write(reinterpret_cast<const char*>(values), static_cast<std::streamsize>(size * 4));
  if (!os) fail("write failure: " + path);
}

TensorData read_tensor_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail("cannot open tensor file: " + path);
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kTensorMagic, sizeof(magic)) != 0)
    fail("bad tensor magic: " + path);
  const uint32_t version = read_pod<uint32_t>(is, path);
  if (version != kTensorVersion) fail("unsupported tensor version in " + path);
  const uint32_t rank = read_pod<uint32_t>(is, path);
  if (rank > 8) fail("implausible tensor rank in " + path);
  TensorData t;
  int64_t size = 1;
  for (uint32_t i = 0; i < rank; ++i) {
    const auto d = static_cast<int64_t>(read_pod<uint64_t>(is, path));
    t.dims.push_back(d);
    size *= d;
  }
  t.values.resize(static_cast<size_t>(size));
  is.read(reinterpret_cast<char*>(t.values.data()), static_cast<std::streamsize>(size * 4));
  if (!is) fail("truncated tensor payload: " + path);
  return t;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail("cannot write file: " + path);
  os << content;
  if (!os) fail("write failure: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail("cannot open file: " + path);
  std::string content((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return content;
}

void ensure_dir(const std::string& path) {
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec) fail("cannot create directory " + path + ": " + ec.message());
}

bool file_exists(const std::string& path) { return std::filesystem::exists(path); }

}  // namespace ne
