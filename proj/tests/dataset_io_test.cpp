#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "gabi/dataset.hpp"
#include "gabi/errors.hpp"
#include "gabi/heat.hpp"

using namespace gabi;

namespace {
std::string tmp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}
}  // namespace

TEST_CASE("GABD round-trip is exact") {
  const Dataset ds = sample_heat_dataset(3, 5, 7, 99);
  const std::string path = tmp_path("roundtrip.gabd");
  write_dataset(ds, path);
  const Dataset back = read_dataset(path);
  REQUIRE(back.size() == ds.size());
  for (int64_t i = 0; i < ds.size(); ++i) {
    CHECK(back.samples[static_cast<size_t>(i)].first.coords ==
          ds.samples[static_cast<size_t>(i)].first.coords);
    CHECK(back.samples[static_cast<size_t>(i)].first.edges ==
          ds.samples[static_cast<size_t>(i)].first.edges);
    CHECK(back.samples[static_cast<size_t>(i)].second.values ==
          ds.samples[static_cast<size_t>(i)].second.values);
  }
  CHECK(back.normalization == ds.normalization);

  // write -> read -> write produces identical bytes
  const std::string path2 = tmp_path("roundtrip2.gabd");
  write_dataset(back, path2);
  std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
  const std::string b1((std::istreambuf_iterator<char>(f1)),
                       std::istreambuf_iterator<char>());
  const std::string b2((std::istreambuf_iterator<char>(f2)),
                       std::istreambuf_iterator<char>());
  CHECK(b1 == b2);
  std::remove(path.c_str());
  std::remove(path2.c_str());
}

TEST_CASE("corrupt magic is reported") {
  const Dataset ds = sample_heat_dataset(1, 4, 4, 5);
  const std::string path = tmp_path("magic.gabd");
  write_dataset(ds, path);
  {
    std::fstream f(path, std::ios::binary | std::ios::in | std::ios::out);
    f.seekp(0);
    f.write("XXXX", 4);
  }
  CHECK_THROWS_WITH_AS(read_dataset(path), doctest::Contains("magic"),
                       IoError);
  std::remove(path.c_str());
}

TEST_CASE("truncated file reports the byte offset") {
  const Dataset ds = sample_heat_dataset(1, 4, 4, 5);
  const std::string path = tmp_path("trunc.gabd");
  write_dataset(ds, path);
  const auto size = std::filesystem::file_size(path);
  std::filesystem::resize_file(path, size / 2);
  CHECK_THROWS_WITH_AS(read_dataset(path), doctest::Contains("byte offset"),
                       IoError);
  std::remove(path.c_str());
}

TEST_CASE("empty dataset writes a header+footer-only file") {
  Dataset ds;
  ds.normalization.mean = {0.0};
  ds.normalization.stdev = {1.0};
  const std::string path = tmp_path("empty.gabd");
  write_dataset(ds, path);
  // magic(4) + version(4) + count(8) + channels(4) + 2 doubles(16)
  CHECK(std::filesystem::file_size(path) == 36);
  const Dataset back = read_dataset(path);
  CHECK(back.size() == 0);
  CHECK(back.normalization == ds.normalization);
  std::remove(path.c_str());
}

TEST_CASE("normalization round-trips fields") {
  const Dataset ds = sample_heat_dataset(4, 6, 6, 17);
  const Normalization norm = compute_normalization(ds);
  const Tensor& v = ds.samples[0].second.values;
  const Tensor n = normalize_field(v, norm);
  const Tensor back = denormalize_field(n, norm);
  for (int64_t i = 0; i < v.numel(); ++i)
    CHECK(back[i] == doctest::Approx(v[i]).epsilon(1e-12));

  // stats: mean ~0, std ~1 over the whole set after normalization
  double sum = 0.0, sq = 0.0;
  int64_t count = 0;
  for (const auto& [mesh, field] : ds.samples) {
    const Tensor z = normalize_field(field.values, norm);
    for (int64_t i = 0; i < z.numel(); ++i) {
      sum += z[i];
      sq += z[i] * z[i];
      ++count;
    }
  }
  CHECK(sum / static_cast<double>(count) == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(sq / static_cast<double>(count) == doctest::Approx(1.0).epsilon(1e-10));
}
