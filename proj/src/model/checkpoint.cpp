#include <cstring>
#include <fstream>

#include "gait/model/model.hpp"

namespace gait {
namespace {

constexpr char kMagic[8] = {'G', 'A', 'I', 'T', 'C', 'K', 'P', 'T'};

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::istream& in, const std::string& what) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw DataError("checkpoint truncated while reading " + what);
  return v;
}

std::string get_string(std::istream& in, std::uint64_t size, const std::string& what) {
  if (size > (1ULL << 32)) throw DataError("checkpoint: implausible " + what + " length");
  std::string s(size, '\0');
  if (size > 0 && !in.read(s.data(), static_cast<std::streamsize>(size))) {
    throw DataError("checkpoint truncated while reading " + what);
  }
  return s;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const std::string& config_text, const ParamStore<float>& params) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write checkpoint " + tmp);
    out.write(kMagic, sizeof kMagic);
    put<std::uint32_t>(out, kCheckpointVersion);
    put<std::uint64_t>(out, config_text.size());
    out.write(config_text.data(), static_cast<std::streamsize>(config_text.size()));
    put<std::uint64_t>(out, params.size());
    for (const auto& [name, p] : params.entries()) {
      put<std::uint64_t>(out, name.size());
      out.write(name.data(), static_cast<std::streamsize>(name.size()));
      put<std::uint8_t>(out, p.trainable ? 1 : 0);
      put<std::uint32_t>(out, static_cast<std::uint32_t>(p.value.rank()));
      for (auto d : p.value.shape()) put<std::uint64_t>(out, d);
      out.write(reinterpret_cast<const char*>(p.value.data()), static_cast<std::streamsize>(p.value.size() * sizeof(float)));
    }
    if (!out) throw DataError("failed writing checkpoint " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  char magic[sizeof kMagic];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw DataError(path.string() + " is not a checkpoint");
  }
  const auto version = get<std::uint32_t>(in, "version");
  if (version != kCheckpointVersion) {
    throw DataError("checkpoint format version " + std::to_string(version) + " is not supported");
  }
  Checkpoint ck;
  ck.config_text = get_string(in, get<std::uint64_t>(in, "config length"), "config");
  const auto count = get<std::uint64_t>(in, "entry count");
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::string name = get_string(in, get<std::uint64_t>(in, "name length"), "name");
    const bool trainable = get<std::uint8_t>(in, name) != 0;
    const auto rank = get<std::uint32_t>(in, name);
    if (rank > 8) throw DataError("checkpoint: implausible rank for " + name);
    Shape shape(rank);
    for (auto& d : shape) d = get<std::uint64_t>(in, name);
    Tensor<float> value(shape);
    if (!in.read(reinterpret_cast<char*>(value.data()), static_cast<std::streamsize>(value.size() * sizeof(float)))) {
      throw DataError("checkpoint truncated in " + name);
    }
    ck.params.add(name, std::move(value), trainable);
  }
  return ck;
}

}  // namespace gait
