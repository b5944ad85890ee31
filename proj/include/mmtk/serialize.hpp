#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "mmtk/tensor.hpp"

// Binary tensor container ("MMT1"): magic, u8 dtype code (0 = f32, 1 = f64),
// u8 rank, rank x u64 little-endian extents, then raw little-endian values.
// Indexed archive ("MMC1"): magic, u32 entry count, then per entry a
// length-prefixed name (u32 + bytes) and a u64 absolute offset of the entry's
// MMT1 blob; blobs follow the table in entry order.

namespace mmtk::io {

template <typename T>
void write_mmt(std::ostream& out, const Tensor<T>& t);
template <typename T>
Tensor<T> read_mmt(std::istream& in);

template <typename T>
void save_tensor(const std::string& path, const Tensor<T>& t);
template <typename T>
Tensor<T> load_tensor(const std::string& path);

template <typename T>
void save_archive(const std::string& path,
                  const std::vector<std::pair<std::string, Tensor<T>>>& entries);
template <typename T>
std::vector<std::pair<std::string, Tensor<T>>> load_archive(
    const std::string& path);

}  // namespace mmtk::io
