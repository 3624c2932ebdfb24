#include "gabi/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "gabi/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "GABD/GABW writers assume a little-endian host");

namespace gabi {

Normalization compute_normalization(const Dataset& ds) {
  if (ds.samples.empty())
    throw ValueError("compute_normalization: empty dataset");
  const int64_t d_u = ds.samples.front().second.channels();
  Normalization norm;
  norm.mean.assign(static_cast<size_t>(d_u), 0.0);
  norm.stdev.assign(static_cast<size_t>(d_u), 0.0);
  int64_t count = 0;
  for (const auto& [mesh, field] : ds.samples) {
    const Tensor& v = field.values;
    for (int64_t i = 0; i < v.rows(); ++i)
      for (int64_t c = 0; c < d_u; ++c)
        norm.mean[static_cast<size_t>(c)] += v(i, c);
    count += v.rows();
  }
  for (auto& m : norm.mean) m /= static_cast<double>(count);
  for (const auto& [mesh, field] : ds.samples) {
    const Tensor& v = field.values;
    for (int64_t i = 0; i < v.rows(); ++i)
      for (int64_t c = 0; c < d_u; ++c) {
        const double t = v(i, c) - norm.mean[static_cast<size_t>(c)];
        norm.stdev[static_cast<size_t>(c)] += t * t;
      }
  }
  for (auto& s : norm.stdev)
    s = std::max(1e-12, std::sqrt(s / static_cast<double>(count)));
  return norm;
}

Tensor normalize_field(const Tensor& values, const Normalization& norm) {
  const int64_t d_u = values.cols();
  if (d_u != norm.channels())
    throw ShapeError("normalize_field: channel count mismatch");
  Tensor out = values;
  for (int64_t i = 0; i < values.rows(); ++i)
    for (int64_t c = 0; c < d_u; ++c)
      out(i, c) = (values(i, c) - norm.mean[static_cast<size_t>(c)]) /
                  norm.stdev[static_cast<size_t>(c)];
  return out;
}

Tensor denormalize_field(const Tensor& values, const Normalization& norm) {
  const int64_t d_u = values.cols();
  if (d_u != norm.channels())
    throw ShapeError("denormalize_field: channel count mismatch");
  Tensor out = values;
  for (int64_t i = 0; i < values.rows(); ++i)
    for (int64_t c = 0; c < d_u; ++c)
      out(i, c) = values(i, c) * norm.stdev[static_cast<size_t>(c)] +
                  norm.mean[static_cast<size_t>(c)];
  return out;
}

namespace {

constexpr char kMagic[4] = {'G', 'A', 'B', 'D'};
constexpr uint32_t kVersion = 1;

class Reader {
 public:
  explicit Reader(const std::string& path)
      : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw IoError("cannot open " + path);
  }
  void bytes(void* dst, size_t count) {
    in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(count));
    if (static_cast<size_t>(in_.gcount()) != count)
      throw IoError("truncated file " + path_ + " at byte offset " +
                    std::to_string(offset_ + static_cast<size_t>(in_.gcount())));
    offset_ += count;
  }
  template <typename T>
  T scalar() {
    T v;
    bytes(&v, sizeof(T));
    return v;
  }
  bool at_eof() {
    return in_.peek() == std::char_traits<char>::eof();
  }
  size_t offset() const { return offset_; }

 private:
  std::ifstream in_;
  std::string path_;
  size_t offset_ = 0;
};

void put(std::ofstream& out, const void* src, size_t count) {
  out.write(static_cast<const char*>(src), static_cast<std::streamsize>(count));
}
template <typename T>
void put_scalar(std::ofstream& out, T v) {
  put(out, &v, sizeof(T));
}

}  // namespace

void write_dataset(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  put(out, kMagic, 4);
  put_scalar<uint32_t>(out, kVersion);
  put_scalar<uint64_t>(out, static_cast<uint64_t>(ds.samples.size()));
  for (const auto& [mesh, field] : ds.samples) {
    const uint32_t n = static_cast<uint32_t>(mesh.num_vertices());
    const uint32_t e = static_cast<uint32_t>(mesh.edges.size());
    const uint32_t d = static_cast<uint32_t>(mesh.dim());
    const uint32_t d_u = static_cast<uint32_t>(field.channels());
    if (field.num_nodes() != mesh.num_vertices())
      throw ShapeError("write_dataset: field/mesh node count mismatch");
    put_scalar(out, n);
    put_scalar(out, e);
    put_scalar(out, d);
    put_scalar(out, d_u);
    put(out, mesh.coords.data(), sizeof(double) * n * d);
    for (const auto& edge : mesh.edges) {
      put_scalar<uint32_t>(out, static_cast<uint32_t>(edge[0]));
      put_scalar<uint32_t>(out, static_cast<uint32_t>(edge[1]));
    }
    put(out, field.values.data(), sizeof(double) * n * d_u);
  }
  const uint32_t channels = static_cast<uint32_t>(ds.normalization.channels());
  put_scalar(out, channels);
  for (uint32_t c = 0; c < channels; ++c) {
    put_scalar(out, ds.normalization.mean[c]);
    put_scalar(out, ds.normalization.stdev[c]);
  }
  if (!out) throw IoError("write failed for " + path);
}

Dataset read_dataset(const std::string& path) {
  Reader in(path);
  char magic[4];
  in.bytes(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw IoError("magic mismatch in " + path + " (expected GABD)");
  const uint32_t version = in.scalar<uint32_t>();
  if (version != kVersion)
    throw IoError("unsupported GABD version " + std::to_string(version) +
                  " in " + path);
  const uint64_t count = in.scalar<uint64_t>();
  Dataset ds;
  ds.samples.reserve(count);
  for (uint64_t s = 0; s < count; ++s) {
    const uint32_t n = in.scalar<uint32_t>();
    const uint32_t e = in.scalar<uint32_t>();
    const uint32_t d = in.scalar<uint32_t>();
    const uint32_t d_u = in.scalar<uint32_t>();
    Mesh mesh;
    mesh.coords = Tensor({static_cast<int64_t>(n), static_cast<int64_t>(d)});
    in.bytes(mesh.coords.data(), sizeof(double) * n * d);
    mesh.edges.resize(e);
    for (uint32_t t = 0; t < e; ++t) {
      const uint32_t a = in.scalar<uint32_t>();
      const uint32_t b = in.scalar<uint32_t>();
      mesh.edges[t] = {static_cast<int64_t>(a), static_cast<int64_t>(b)};
    }
    Field field;
    field.values = Tensor({static_cast<int64_t>(n), static_cast<int64_t>(d_u)});
    in.bytes(field.values.data(), sizeof(double) * n * d_u);
    ds.samples.emplace_back(std::move(mesh), std::move(field));
  }
  const uint32_t channels = in.scalar<uint32_t>();
  ds.normalization.mean.resize(channels);
  ds.normalization.stdev.resize(channels);
  for (uint32_t c = 0; c < channels; ++c) {
    ds.normalization.mean[c] = in.scalar<double>();
    ds.normalization.stdev[c] = in.scalar<double>();
  }
  if (!in.at_eof())
    throw IoError("trailing bytes in " + path + " after offset " +
                  std::to_string(in.offset()));
  return ds;
}

}  // namespace gabi
