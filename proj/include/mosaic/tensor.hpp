#pragma once

#include <cstdint>
#include <filesystem>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace mosaic {

/// Dense row-major tensor. Element type is one of float, double, uint8_t
/// (the three dtypes of the MMTB file format).
template <typename T>
struct Tensor {
  std::vector<uint32_t> dims;
  std::vector<T> data;

  Tensor() = default;
  explicit Tensor(std::vector<uint32_t> d) : dims(std::move(d)) {
    data.assign(count(), T{});
  }

  size_t count() const {
    return std::accumulate(dims.begin(), dims.end(), size_t{1},
                           [](size_t a, uint32_t b) { return a * b; });
  }

  T& operator()(size_t i) { return data[i]; }
  const T& operator()(size_t i) const { return data[i]; }

  T& operator()(size_t i, size_t j) { return data[i * dims[1] + j]; }
  const T& operator()(size_t i, size_t j) const {
    return data[i * dims[1] + j];
  }

  T& operator()(size_t i, size_t j, size_t k) {
    return data[(i * dims[1] + j) * dims[2] + k];
  }
  const T& operator()(size_t i, size_t j, size_t k) const {
    return data[(i * dims[1] + j) * dims[2] + k];
  }
};

template <typename T>
uint8_t dtype_code();
template <>
inline uint8_t dtype_code<float>() { return 0; }
template <>
inline uint8_t dtype_code<double>() { return 1; }
template <>
inline uint8_t dtype_code<uint8_t>() { return 2; }

/// MMTB binary tensor file:
///   magic "MMTB" | version u16 LE | dtype u8 | ndim u8 | dims u32 LE each |
///   payload row-major LE.
/// Readers reject bad magic, dtype mismatch, and truncated payloads.
inline constexpr uint16_t kTensorFormatVersion = 1;

struct TensorIoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <typename T>
void write_tensor(const std::filesystem::path& path, const Tensor<T>& t);

template <typename T>
Tensor<T> read_tensor(const std::filesystem::path& path);

}  // namespace mosaic
