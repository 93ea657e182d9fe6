#include "symbiotic/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "symbiotic/errors.hpp"

namespace symbiotic {

namespace {
constexpr int kFormatVersion = 1;

void put_u64_le(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64_le(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}
}  // namespace

void Checkpoint::add(const std::string& name, const Tensor& t) {
  for (const auto& [n, _] : entries_) {
    if (n == name) throw VersionError("duplicate checkpoint entry " + name);
  }
  entries_.emplace_back(name, t);
}

bool Checkpoint::has(const std::string& name) const {
  for (const auto& [n, _] : entries_) {
    if (n == name) return true;
  }
  return false;
}

const Tensor& Checkpoint::get(const std::string& name) const {
  for (const auto& [n, t] : entries_) {
    if (n == name) return t;
  }
  throw VersionError("checkpoint has no entry named " + name);
}

void Checkpoint::save(const std::string& path) const {
  // serialize tensors first so the index can carry offsets
  std::ostringstream blob;
  nlohmann::ordered_json index = nlohmann::ordered_json::object();
  index["version"] = kFormatVersion;
  index["meta"] = meta;
  auto jentries = nlohmann::ordered_json::array();
  for (const auto& [name, t] : entries_) {
    std::size_t offset = static_cast<std::size_t>(blob.tellp());
    stns::write_f64(blob, t.shape(), t.data());
    std::size_t length = static_cast<std::size_t>(blob.tellp()) - offset;
    jentries.push_back({{"name", name}, {"offset", offset}, {"length", length}});
  }
  index["entries"] = jentries;
  std::string header = index.dump();

  std::ofstream os(path, std::ios::binary);
  if (!os) throw VersionError("cannot open " + path + " for writing");
  put_u64_le(os, header.size());
  os.write(header.data(), static_cast<std::streamsize>(header.size()));
  std::string payload = blob.str();
  os.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!os) throw VersionError("failed writing checkpoint " + path);
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw VersionError("cannot open checkpoint " + path);
  std::uint64_t header_len = get_u64_le(is);
  if (!is || header_len > (1ull << 30)) {
    throw VersionError(path + ": malformed checkpoint header");
  }
  std::string header(header_len, '\0');
  is.read(header.data(), static_cast<std::streamsize>(header_len));
  if (!is) throw VersionError(path + ": truncated checkpoint header");
  nlohmann::ordered_json index;
  try {
    index = nlohmann::ordered_json::parse(header);
  } catch (const nlohmann::json::exception& e) {
    throw VersionError(path + ": bad checkpoint index: " + e.what());
  }
  if (!index.contains("version") || index["version"].get<int>() != kFormatVersion) {
    throw VersionError(path + ": unsupported checkpoint version");
  }
  Checkpoint ckpt;
  ckpt.meta = index.value("meta", nlohmann::ordered_json::object());
  for (const auto& e : index["entries"]) {
    std::string name = e["name"].get<std::string>();
    Tensor t = stns::read_tensor(is, path + ":" + name);
    ckpt.entries_.emplace_back(name, t);
  }
  return ckpt;
}

}  // namespace symbiotic
