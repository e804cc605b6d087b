// SPDX-FileCopyrightText: 2026 The lpcm Authors
// SPDX-License-Identifier: Apache-2.0
//
// Scan ingestion and emission: KITTI velodyne .bin quadruples and PLY
// (ASCII or binary little-endian) with x/y/z vertex properties. All
// writers go through a temp-file-plus-rename so readers never observe a
// half-written file.

#ifndef LPCM_IO_HPP_
#define LPCM_IO_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "lpcm/geometry.hpp"

namespace lpcm {

// Whole-file helpers shared by the readers and the CLI.
std::vector<std::uint8_t> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path,
                      const std::vector<std::uint8_t>& bytes);

// KITTI velodyne scan: packed little-endian float32 quadruples
// (x, y, z, reflectance). Reflectance is dropped on read and written as
// zero; point order is preserved, which the threshold tree builder relies
// on. Throws FormatError when the file is missing or its length is not a
// multiple of 16.
PointCloud read_kitti_bin(const std::string& path);
void write_kitti_bin(const PointCloud& cloud, const std::string& path);

enum class PlyFormat { kAscii, kBinaryLittleEndian };

// PLY reader for clouds whose first element is `vertex` with float or
// double x/y/z properties. Extra vertex properties are skipped; elements
// after the vertex block are ignored. Throws FormatError on malformed
// headers, missing coordinates, list properties, or truncated data.
PointCloud read_ply(const std::string& path);

// Writes x/y/z as float32 properties in the requested flavor.
void write_ply(const PointCloud& cloud, const std::string& path,
               PlyFormat format);

}  // namespace lpcm

#endif  // LPCM_IO_HPP_
