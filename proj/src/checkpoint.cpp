#include "padel/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace padel {

namespace {

constexpr std::uint32_t kMagic = 0x504b4350;  // "PCKP"
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("checkpoint: truncated file");
  return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path,
                     const std::vector<NamedParam>& params) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("checkpoint: cannot open " + path.string());
  write_pod(out, kMagic);
  write_pod(out, kVersion);
  write_pod(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params) {
    write_pod(out, static_cast<std::uint32_t>(p.name.size()));
    out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    write_pod(out, static_cast<std::uint64_t>(p.tensor->rows));
    write_pod(out, static_cast<std::uint64_t>(p.tensor->cols));
    out.write(reinterpret_cast<const char*>(p.tensor->data.data()),
              static_cast<std::streamsize>(p.tensor->data.size() *
                                           sizeof(double)));
  }
  if (!out) throw std::runtime_error("checkpoint: write failed " + path.string());
}

std::map<std::string, Tensor> read_checkpoint(
    const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path.string());
  if (read_pod<std::uint32_t>(in) != kMagic)
    throw std::runtime_error("checkpoint: bad magic in " + path.string());
  if (read_pod<std::uint32_t>(in) != kVersion)
    throw std::runtime_error("checkpoint: unsupported version in " +
                             path.string());
  const auto count = read_pod<std::uint32_t>(in);
  std::map<std::string, Tensor> result;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = read_pod<std::uint32_t>(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const auto rows = read_pod<std::uint64_t>(in);
    const auto cols = read_pod<std::uint64_t>(in);
    Tensor t(rows, cols);
    in.read(reinterpret_cast<char*>(t.data.data()),
            static_cast<std::streamsize>(t.data.size() * sizeof(double)));
    if (!in) throw std::runtime_error("checkpoint: truncated tensor payload");
    result.emplace(std::move(name), std::move(t));
  }
  return result;
}

void load_checkpoint(const std::filesystem::path& path,
                     const std::vector<NamedParam>& params) {
  auto loaded = read_checkpoint(path);
  for (const auto& p : params) {
    auto it = loaded.find(p.name);
    if (it == loaded.end())
      throw std::runtime_error("checkpoint: missing tensor '" + p.name +
                               "' in " + path.string());
    if (!it->second.same_shape(*p.tensor))
      throw std::runtime_error("checkpoint: shape mismatch for '" + p.name +
                               "': file " + it->second.shape_str() +
                               " vs model " + p.tensor->shape_str());
    *p.tensor = it->second;
  }
}

}  // namespace padel
