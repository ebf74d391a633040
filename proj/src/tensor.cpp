#include "mosaic/tensor.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>

namespace mosaic {

namespace {
constexpr char kMagic[4] = {'M', 'M', 'T', 'B'};
}

template <typename T>
void write_tensor(const std::filesystem::path& path, const Tensor<T>& t) {
  if (t.data.size() != t.count())
    throw TensorIoError("write_tensor: payload size does not match dims");
  if (t.dims.size() > 255)
    throw TensorIoError("write_tensor: too many dimensions");
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw TensorIoError("write_tensor: cannot open " + path.string());
  f.write(kMagic, 4);
  const uint16_t version = kTensorFormatVersion;
  f.write(reinterpret_cast<const char*>(&version), 2);
  const uint8_t dtype = dtype_code<T>();
  const uint8_t ndim = static_cast<uint8_t>(t.dims.size());
  f.write(reinterpret_cast<const char*>(&dtype), 1);
  f.write(reinterpret_cast<const char*>(&ndim), 1);
  f.write(reinterpret_cast<const char*>(t.dims.data()),
          static_cast<std::streamsize>(t.dims.size() * 4));
  f.write(reinterpret_cast<const char*>(t.data.data()),
          static_cast<std::streamsize>(t.data.size() * sizeof(T)));
  if (!f) throw TensorIoError("write_tensor: write failed for " + path.string());
}

template <typename T>
Tensor<T> read_tensor(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw TensorIoError("read_tensor: cannot open " + path.string());
  char magic[4];
  f.read(magic, 4);
  if (!f || std::memcmp(magic, kMagic, 4) != 0)
    throw TensorIoError("read_tensor: bad magic in " + path.string());
  uint16_t version = 0;
  f.read(reinterpret_cast<char*>(&version), 2);
  if (!f || version != kTensorFormatVersion)
    throw TensorIoError("read_tensor: unsupported version in " + path.string());
  uint8_t dtype = 0, ndim = 0;
  f.read(reinterpret_cast<char*>(&dtype), 1);
  f.read(reinterpret_cast<char*>(&ndim), 1);
  if (!f) throw TensorIoError("read_tensor: truncated header in " + path.string());
  if (dtype != dtype_code<T>())
    throw TensorIoError("read_tensor: dtype mismatch in " + path.string());
  Tensor<T> t;
  t.dims.resize(ndim);
  f.read(reinterpret_cast<char*>(t.dims.data()),
         static_cast<std::streamsize>(size_t{ndim} * 4));
  if (!f) throw TensorIoError("read_tensor: truncated dims in " + path.string());
  const size_t n = t.count();
  t.data.resize(n);
  f.read(reinterpret_cast<char*>(t.data.data()),
         static_cast<std::streamsize>(n * sizeof(T)));
  if (static_cast<size_t>(f.gcount()) != n * sizeof(T))
    throw TensorIoError("read_tensor: truncated payload in " + path.string());
  // Trailing bytes also mean a corrupt file.
  f.peek();
  if (!f.eof())
    throw TensorIoError("read_tensor: trailing bytes in " + path.string());
  return t;
}

template void write_tensor<float>(const std::filesystem::path&,
                                  const Tensor<float>&);
template void write_tensor<double>(const std::filesystem::path&,
                                   const Tensor<double>&);
template void write_tensor<uint8_t>(const std::filesystem::path&,
                                    const Tensor<uint8_t>&);
template Tensor<float> read_tensor<float>(const std::filesystem::path&);
template Tensor<double> read_tensor<double>(const std::filesystem::path&);
template Tensor<uint8_t> read_tensor<uint8_t>(const std::filesystem::path&);

}  // namespace mosaic
