#include "gabi/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "gabi/errors.hpp"

namespace gabi {

namespace {

constexpr char kMagic[4] = {'G', 'A', 'B', 'W'};
constexpr uint32_t kVersion = 1;

nlohmann::json descriptor_json(const Checkpoint& ckpt) {
  nlohmann::json d;
  d["kind"] = ckpt.kind;
  d["arch"] = {{"coord_dim", ckpt.arch.coord_dim},
               {"field_channels", ckpt.arch.field_channels},
               {"hidden", ckpt.arch.hidden},
               {"latent", ckpt.arch.latent},
               {"layers", ckpt.arch.layers}};
  d["normalization"] = {{"mean", ckpt.normalization.mean},
                        {"std", ckpt.normalization.stdev}};
  d["config_digest"] = ckpt.config_digest;
  d["extra"] = ckpt.extra;
  nlohmann::json tensors = nlohmann::json::array();
  for (const auto& [name, t] : ckpt.params)
    tensors.push_back({name, t.shape()});
  d["tensors"] = tensors;
  return d;
}

void check_consistency(const Checkpoint& ckpt) {
  if (ckpt.kind != "gabi" && ckpt.kind != "direct")
    throw IoError("checkpoint: unknown kind '" + ckpt.kind + "'");
  const GcnArchitecture& a = ckpt.arch;
  if (ckpt.kind == "gabi") {
    const std::string last = "enc.l" + std::to_string(a.layers - 1) + ".w";
    const auto it = ckpt.params.find(last);
    if (it == ckpt.params.end())
      throw IoError("checkpoint: missing tensor " + last);
    if (it->second.cols() != a.latent)
      throw IoError("checkpoint: descriptor latent dim " +
                    std::to_string(a.latent) + " does not match tensor " +
                    last + " with " + std::to_string(it->second.cols()) +
                    " output channels");
  } else {
    const auto it = ckpt.params.find("dm.out.w");
    if (it == ckpt.params.end())
      throw IoError("checkpoint: missing tensor dm.out.w");
    if (it->second.cols() != a.field_channels)
      throw IoError("checkpoint: descriptor field channels " +
                    std::to_string(a.field_channels) +
                    " do not match dm.out.w");
  }
  for (const auto& [name, t] : ckpt.params)
    if (!t.all_finite())
      throw IoError("checkpoint: non-finite parameter " + name);
}

}  // namespace

std::string config_digest(const std::string& canonical_config) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical_config) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  check_consistency(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(kMagic, 4);
  const uint32_t version = kVersion;
  out.write(reinterpret_cast<const char*>(&version), 4);
  const std::string desc = descriptor_json(ckpt).dump();
  const uint32_t desc_len = static_cast<uint32_t>(desc.size());
  out.write(reinterpret_cast<const char*>(&desc_len), 4);
  out.write(desc.data(), static_cast<std::streamsize>(desc.size()));
  for (const auto& [name, t] : ckpt.params) {
    const uint32_t name_len = static_cast<uint32_t>(name.size());
    out.write(reinterpret_cast<const char*>(&name_len), 4);
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    const uint32_t rank = static_cast<uint32_t>(t.rank());
    out.write(reinterpret_cast<const char*>(&rank), 4);
    for (int64_t i = 0; i < t.rank(); ++i) {
      const uint32_t d = static_cast<uint32_t>(t.dim(i));
      out.write(reinterpret_cast<const char*>(&d), 4);
    }
    out.write(reinterpret_cast<const char*>(t.data()),
              static_cast<std::streamsize>(sizeof(double) * t.numel()));
  }
  if (!out) throw IoError("write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  size_t offset = 0;
  auto read = [&](void* dst, size_t count) {
    in.read(static_cast<char*>(dst), static_cast<std::streamsize>(count));
    if (static_cast<size_t>(in.gcount()) != count)
      throw IoError("truncated file " + path + " at byte offset " +
                    std::to_string(offset + static_cast<size_t>(in.gcount())));
    offset += count;
  };
  char magic[4];
  read(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw IoError("magic mismatch in " + path + " (expected GABW)");
  uint32_t version;
  read(&version, 4);
  if (version != kVersion)
    throw IoError("unsupported GABW version " + std::to_string(version));
  uint32_t desc_len;
  read(&desc_len, 4);
  std::string desc(desc_len, '\0');
  read(desc.data(), desc_len);
  nlohmann::json d;
  try {
    d = nlohmann::json::parse(desc);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("bad descriptor JSON in " + path + ": " + e.what());
  }

  Checkpoint ckpt;
  try {
    ckpt.kind = d.at("kind").get<std::string>();
    const auto& a = d.at("arch");
    ckpt.arch.coord_dim = a.at("coord_dim").get<int64_t>();
    ckpt.arch.field_channels = a.at("field_channels").get<int64_t>();
    ckpt.arch.hidden = a.at("hidden").get<int64_t>();
    ckpt.arch.latent = a.at("latent").get<int64_t>();
    ckpt.arch.layers = a.at("layers").get<int64_t>();
    ckpt.normalization.mean =
        d.at("normalization").at("mean").get<std::vector<double>>();
    ckpt.normalization.stdev =
        d.at("normalization").at("std").get<std::vector<double>>();
    ckpt.config_digest = d.at("config_digest").get<std::string>();
    ckpt.extra = d.at("extra");
  } catch (const nlohmann::json::exception& e) {
    throw IoError("incomplete descriptor in " + path + ": " + e.what());
  }

  for (const auto& entry : d.at("tensors")) {
    const std::string expected_name = entry.at(0).get<std::string>();
    const auto expected_shape = entry.at(1).get<std::vector<int64_t>>();
    uint32_t name_len;
    read(&name_len, 4);
    std::string name(name_len, '\0');
    read(name.data(), name_len);
    if (name != expected_name)
      throw IoError("descriptor/tensor inconsistency in " + path +
                    ": expected tensor '" + expected_name + "', found '" +
                    name + "'");
    uint32_t rank;
    read(&rank, 4);
    std::vector<int64_t> shape(rank);
    for (uint32_t i = 0; i < rank; ++i) {
      uint32_t dim;
      read(&dim, 4);
      shape[i] = dim;
    }
    if (shape != expected_shape)
      throw IoError("descriptor/tensor inconsistency in " + path +
                    ": shape of '" + name + "' disagrees with descriptor");
    Tensor t(shape);
    read(t.data(), sizeof(double) * static_cast<size_t>(t.numel()));
    ckpt.params.emplace(name, std::move(t));
  }
  if (in.peek() != std::char_traits<char>::eof())
    throw IoError("trailing bytes in " + path);
  check_consistency(ckpt);
  return ckpt;
}

}  // namespace gabi
