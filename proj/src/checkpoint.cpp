#include "cppf/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "cppf/error.hpp"

namespace cppf {

static_assert(std::endian::native == std::endian::little, "checkpoints assume little-endian hosts");

namespace {

constexpr char kMagic[8] = {'C', 'P', 'P', 'F', 'C', 'K', 'P', 'T'};

template <typename T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw DataError("checkpoint truncated");
  return v;
}

std::string get_string(std::ifstream& in, std::size_t n) {
  if (n > (1u << 26)) throw DataError("checkpoint string too long");
  std::string s(n, '\0');
  in.read(s.data(), static_cast<std::streamsize>(n));
  if (!in) throw DataError("checkpoint truncated");
  return s;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const MaskedLm& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  const auto config = model_config_to_json(model.config());
  put<std::uint64_t>(out, config.size());
  out.write(config.data(), static_cast<std::streamsize>(config.size()));
  put<std::uint64_t>(out, model.version());
  put<std::uint64_t>(out, model.parameters().size());
  for (const auto& p : model.parameters()) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p.name.size()));
    out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(p.value.rows()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(p.value.cols()));
    out.write(reinterpret_cast<const char*>(p.value.data()),
              static_cast<std::streamsize>(p.value.size() * sizeof(double)));
  }
  if (!out) throw DataError("failed writing checkpoint " + path.string());
}

MaskedLm load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw DataError(path.string() + " is not a checkpoint");
  }
  const auto version = get<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw DataError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto config = model_config_from_json(get_string(in, get<std::uint64_t>(in)));
  const auto model_version = get<std::uint64_t>(in);
  MaskedLm model(config);
  const auto count = get<std::uint64_t>(in);
  if (count != model.parameters().size()) throw DataError("checkpoint parameter count mismatch");
  for (auto& p : model.parameters()) {
    const auto name = get_string(in, get<std::uint32_t>(in));
    const auto rows = get<std::uint64_t>(in);
    const auto cols = get<std::uint64_t>(in);
    if (name != p.name || rows != static_cast<std::uint64_t>(p.value.rows()) ||
        cols != static_cast<std::uint64_t>(p.value.cols())) {
      throw DataError("checkpoint tensor '" + name + "' does not match the model layout");
    }
    in.read(reinterpret_cast<char*>(p.value.data()),
            static_cast<std::streamsize>(p.value.size() * sizeof(double)));
    if (!in) throw DataError("checkpoint truncated");
  }
  model.set_version(model_version);
  return model;
}

}  // namespace cppf
