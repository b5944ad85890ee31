#include "mmtk/serialize.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace mmtk::io {

namespace {

constexpr char kTensorMagic[4] = {'M', 'M', 'T', '1'};
constexpr char kArchiveMagic[4] = {'M', 'M', 'C', '1'};

template <typename T>
constexpr std::uint8_t dtype_code();
template <>
constexpr std::uint8_t dtype_code<float>() {
  return 0;
}
template <>
constexpr std::uint8_t dtype_code<double>() {
  return 1;
}

void put_u8(std::ostream& out, std::uint8_t v) {
  out.put(static_cast<char>(v));
}

template <typename U>
void put_le(std::ostream& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    out.put(static_cast<char>((v >> (8 * i)) & 0xff));
  }
}

std::uint8_t get_u8(std::istream& in) {
  const int c = in.get();
  if (c < 0) throw std::runtime_error("tensor stream truncated");
  return static_cast<std::uint8_t>(c);
}

template <typename U>
U get_le(std::istream& in) {
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    const int c = in.get();
    if (c < 0) throw std::runtime_error("tensor stream truncated");
    v |= static_cast<U>(static_cast<std::uint8_t>(c)) << (8 * i);
  }
  return v;
}

}  // namespace

template <typename T>
void write_mmt(std::ostream& out, const Tensor<T>& t) {
  out.write(kTensorMagic, 4);
  put_u8(out, dtype_code<T>());
  put_u8(out, static_cast<std::uint8_t>(t.rank()));
  for (std::size_t e : t.shape()) {
    put_le<std::uint64_t>(out, static_cast<std::uint64_t>(e));
  }
  // IEEE-754 values are stored verbatim; this toolkit targets little-endian
  // hosts and the format pins that byte order
  out.write(reinterpret_cast<const char*>(t.data().data()),
            static_cast<std::streamsize>(t.numel() * sizeof(T)));
  if (!out) throw std::runtime_error("tensor write failed");
}

template <typename T>
Tensor<T> read_mmt(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kTensorMagic, 4) != 0) {
    throw std::runtime_error("bad tensor magic (expected MMT1)");
  }
  const std::uint8_t dtype = get_u8(in);
  if (dtype != dtype_code<T>()) {
    throw std::runtime_error("tensor dtype code " + std::to_string(dtype) +
                             " does not match requested element type");
  }
  const std::uint8_t rank = get_u8(in);
  Shape shape(rank);
  for (std::size_t i = 0; i < rank; ++i) {
    shape[i] = static_cast<std::size_t>(get_le<std::uint64_t>(in));
  }
  std::vector<T> values(shape_numel(shape));
  in.read(reinterpret_cast<char*>(values.data()),
          static_cast<std::streamsize>(values.size() * sizeof(T)));
  if (!in) throw std::runtime_error("tensor stream truncated");
  return Tensor<T>::from(shape, std::move(values));
}

template <typename T>
void save_tensor(const std::string& path, const Tensor<T>& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for write: " + path);
  write_mmt(out, t);
}

template <typename T>
Tensor<T> load_tensor(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for read: " + path);
  return read_mmt<T>(in);
}

template <typename T>
void save_archive(
    const std::string& path,
    const std::vector<std::pair<std::string, Tensor<T>>>& entries) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for write: " + path);
  out.write(kArchiveMagic, 4);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(entries.size()));
  // table size is known up front, so blob offsets can be precomputed
  std::uint64_t offset = 8;
  for (const auto& [name, tensor] : entries) {
    (void)tensor;
    offset += 4 + name.size() + 8;
  }
  for (const auto& [name, tensor] : entries) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_le<std::uint64_t>(out, offset);
    offset += 4 + 1 + 1 + 8 * tensor.rank() + sizeof(T) * tensor.numel();
  }
  for (const auto& [name, tensor] : entries) {
    (void)name;
    write_mmt(out, tensor);
  }
  if (!out) throw std::runtime_error("archive write failed: " + path);
}

template <typename T>
std::vector<std::pair<std::string, Tensor<T>>> load_archive(
    const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for read: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kArchiveMagic, 4) != 0) {
    throw std::runtime_error("bad archive magic in " + path +
                             " (expected MMC1)");
  }
  const std::uint32_t count = get_le<std::uint32_t>(in);
  std::vector<std::pair<std::string, std::uint64_t>> table;
  table.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t len = get_le<std::uint32_t>(in);
    std::string name(len, '\0');
    in.read(name.data(), len);
    if (!in) throw std::runtime_error("archive table truncated: " + path);
    table.emplace_back(std::move(name), get_le<std::uint64_t>(in));
  }
  std::vector<std::pair<std::string, Tensor<T>>> entries;
  entries.reserve(count);
  for (auto& [name, offset] : table) {
    in.seekg(static_cast<std::streamoff>(offset));
    entries.emplace_back(std::move(name), read_mmt<T>(in));
  }
  return entries;
}

#define MMTK_INSTANTIATE_IO(T)                                              \
  template void write_mmt<T>(std::ostream&, const Tensor<T>&);              \
  template Tensor<T> read_mmt<T>(std::istream&);                            \
  template void save_tensor<T>(const std::string&, const Tensor<T>&);       \
  template Tensor<T> load_tensor<T>(const std::string&);                    \
  template void save_archive<T>(                                           \
      const std::string&,                                                   \
      const std::vector<std::pair<std::string, Tensor<T>>>&);               \
  template std::vector<std::pair<std::string, Tensor<T>>> load_archive<T>( \
      const std::string&);

MMTK_INSTANTIATE_IO(float)
MMTK_INSTANTIATE_IO(double)

}  // namespace mmtk::io
