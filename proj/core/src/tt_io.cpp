#include "ttpdf/tt_io.hpp"

#include "ttpdf/errors.hpp"

#include <json.hpp>

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace ttpdf {

namespace {

constexpr char kMagic[] = "TTPDF1\n";
constexpr int kVersion = 1;

template <typename T>
void put_le(std::ostream& out, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big)
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T)))
    throw DomainError("truncated TT file");
  if constexpr (std::endian::native == std::endian::big)
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace

void write_tt(std::ostream& out, const TTTensor& tt) {
  nlohmann::json header;
  header["version"] = kVersion;
  header["d"] = tt.dimension();
  header["ranks"] = tt.ranks();
  auto nodes = nlohmann::json::array();
  for (std::size_t k = 0; k < tt.dimension(); ++k) nodes.push_back(tt.grid().nodes(k));
  header["grid"] = nodes;
  std::string text = header.dump();
  out.write(kMagic, sizeof(kMagic) - 1);
  put_le<std::uint64_t>(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (std::size_t k = 0; k < tt.dimension(); ++k)
    for (double v : tt.block(k)) put_le<double>(out, v);
  if (!out) throw DomainError("failed to write TT");
}

TTTensor read_tt(std::istream& in) {
  char magic[sizeof(kMagic) - 1];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(magic)) != 0)
    throw DomainError("not a TT file (bad magic)");
  auto length = get_le<std::uint64_t>(in);
  if (length > (1u << 30)) throw DomainError("TT header too large");
  std::string text(length, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(length)))
    throw DomainError("truncated TT header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DomainError(std::string("malformed TT header: ") + e.what());
  }
  try {
    if (header.at("version").get<int>() != kVersion) throw DomainError("unsupported TT version");
    auto d = header.at("d").get<std::size_t>();
    auto ranks = header.at("ranks").get<std::vector<std::size_t>>();
    auto nodes = header.at("grid").get<std::vector<std::vector<double>>>();
    if (nodes.size() != d || ranks.size() != d + 1) throw DomainError("inconsistent TT header");
    Grid grid(std::move(nodes));
    std::vector<std::vector<double>> blocks(d);
    for (std::size_t k = 0; k < d; ++k) {
      blocks[k].resize(ranks[k] * grid.size(k) * ranks[k + 1]);
      for (double& v : blocks[k]) v = get_le<double>(in);
    }
    return TTTensor(std::move(grid), std::move(ranks), std::move(blocks));
  } catch (const nlohmann::json::exception& e) {
    throw DomainError(std::string("malformed TT header: ") + e.what());
  }
}

void save_tt(const std::filesystem::path& path, const TTTensor& tt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DomainError("cannot open " + path.string() + " for writing");
  write_tt(out, tt);
}

TTTensor load_tt(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DomainError("cannot open " + path.string());
  return read_tt(in);
}

}  // namespace ttpdf
