#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "mosaic/tensor.hpp"

using namespace mosaic;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const char* name) {
  return fs::temp_directory_path() / name;
}

std::vector<char> read_bytes(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

void write_bytes(const fs::path& p, const std::vector<char>& bytes) {
  std::ofstream f(p, std::ios::binary);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

template <typename T>
Tensor<T> random_tensor(std::vector<uint32_t> dims, uint64_t seed) {
  Tensor<T> t(std::move(dims));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& v : t.data) v = static_cast<T>(u(rng) * 100.0);
  return t;
}

}  // namespace

TEST_CASE("round trip preserves dims and bits for all dtypes") {
  const fs::path p = temp_file("mmtb_roundtrip.mmtb");
  {
    const auto t = random_tensor<float>({3, 4, 5}, 1);
    write_tensor(p, t);
    const auto r = read_tensor<float>(p);
    CHECK(r.dims == t.dims);
    CHECK(r.data == t.data);
  }
  {
    const auto t = random_tensor<double>({7}, 2);
    write_tensor(p, t);
    const auto r = read_tensor<double>(p);
    CHECK(r.dims == t.dims);
    CHECK(r.data == t.data);
  }
  {
    const auto t = random_tensor<uint8_t>({2, 9}, 3);
    write_tensor(p, t);
    const auto r = read_tensor<uint8_t>(p);
    CHECK(r.dims == t.dims);
    CHECK(r.data == t.data);
  }
}

TEST_CASE("rewriting the same tensor is byte-identical") {
  const fs::path a = temp_file("mmtb_a.mmtb");
  const fs::path b = temp_file("mmtb_b.mmtb");
  const auto t = random_tensor<float>({6, 6}, 4);
  write_tensor(a, t);
  write_tensor(b, t);
  CHECK(read_bytes(a) == read_bytes(b));
}

TEST_CASE("reader rejects malformed files") {
  const fs::path p = temp_file("mmtb_bad.mmtb");
  const auto t = random_tensor<float>({4, 4}, 5);
  write_tensor(p, t);
  const std::vector<char> good = read_bytes(p);

  SUBCASE("missing file") {
    CHECK_THROWS_AS(read_tensor<float>(temp_file("mmtb_nope.mmtb")),
                    TensorIoError);
  }
  SUBCASE("bad magic") {
    auto bytes = good;
    bytes[0] = 'X';
    write_bytes(p, bytes);
    CHECK_THROWS_AS(read_tensor<float>(p), TensorIoError);
  }
  SUBCASE("unsupported version") {
    auto bytes = good;
    bytes[4] = 99;
    write_bytes(p, bytes);
    CHECK_THROWS_AS(read_tensor<float>(p), TensorIoError);
  }
  SUBCASE("dtype mismatch") {
    CHECK_THROWS_AS(read_tensor<double>(p), TensorIoError);
    CHECK_THROWS_AS(read_tensor<uint8_t>(p), TensorIoError);
  }
  SUBCASE("truncated header") {
    write_bytes(p, {good.begin(), good.begin() + 6});
    CHECK_THROWS_AS(read_tensor<float>(p), TensorIoError);
  }
  SUBCASE("truncated dims") {
    write_bytes(p, {good.begin(), good.begin() + 10});
    CHECK_THROWS_AS(read_tensor<float>(p), TensorIoError);
  }
  SUBCASE("truncated payload") {
    write_bytes(p, {good.begin(), good.end() - 3});
    CHECK_THROWS_AS(read_tensor<float>(p), TensorIoError);
  }
  SUBCASE("trailing bytes") {
    auto bytes = good;
    bytes.push_back(0);
    write_bytes(p, bytes);
    CHECK_THROWS_AS(read_tensor<float>(p), TensorIoError);
  }
}

TEST_CASE("indexing is row-major") {
  Tensor<float> t({2, 3, 4});
  t(1, 2, 3) = 42.0f;
  CHECK(t.data[(1 * 3 + 2) * 4 + 3] == 42.0f);
  Tensor<double> m({3, 5});
  m(2, 4) = 7.0;
  CHECK(m.data[2 * 5 + 4] == 7.0);
}
