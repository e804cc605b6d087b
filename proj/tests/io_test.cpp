// SPDX-FileCopyrightText: 2026 The lpcm Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "lpcm/errors.hpp"
#include "lpcm/io.hpp"
#include "test_rng.hpp"

using lpcm::CartesianPoint;
using lpcm::FormatError;
using lpcm::PointCloud;
using lpcm::PlyFormat;
using lpcm::testutil::TestRng;

namespace {

// Per-process scratch names so parallel ctest invocations cannot collide.
std::string scratch_path(const std::string& stem) {
  static const std::string dir =
      (std::filesystem::temp_directory_path() /
       ("lpcm_io_test_" + std::to_string(::getpid())))
          .string();
  std::filesystem::create_directories(dir);
  return dir + "/" + stem;
}

void append_f32(std::vector<std::uint8_t>& bytes, float v) {
  std::uint8_t raw[4];
  std::memcpy(raw, &v, 4);
  bytes.insert(bytes.end(), raw, raw + 4);
}

void append_f64(std::vector<std::uint8_t>& bytes, double v) {
  std::uint8_t raw[8];
  std::memcpy(raw, &v, 8);
  bytes.insert(bytes.end(), raw, raw + 8);
}

std::vector<std::uint8_t> as_bytes(const std::string& text) {
  return std::vector<std::uint8_t>(text.begin(), text.end());
}

// Cloud whose coordinates are exactly representable as float32, so both
// the .bin writer and the %.9g ASCII path round-trip bit-identically.
PointCloud float_valued_cloud(std::size_t n, std::uint64_t seed) {
  TestRng rng(seed);
  PointCloud cloud;
  cloud.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    cloud.push_back(
        {static_cast<double>(static_cast<float>(rng.uniform(-80.0, 80.0))),
         static_cast<double>(static_cast<float>(rng.uniform(-80.0, 80.0))),
         static_cast<double>(static_cast<float>(rng.uniform(-4.0, 8.0)))});
  }
  return cloud;
}

}  // namespace

TEST_CASE("kitti reader parses packed float quadruples") {
  // Hand-assembled single point (1, 2, 3, 0.5): reflectance is dropped.
  std::vector<std::uint8_t> bytes;
  append_f32(bytes, 1.0f);
  append_f32(bytes, 2.0f);
  append_f32(bytes, 3.0f);
  append_f32(bytes, 0.5f);
  std::string one = scratch_path("one_point.bin");
  lpcm::write_file_bytes(one, bytes);

  PointCloud cloud = lpcm::read_kitti_bin(one);
  REQUIRE(cloud.size() == 1);
  CHECK(cloud[0].x == 1.0);
  CHECK(cloud[0].y == 2.0);
  CHECK(cloud[0].z == 3.0);

  // A 32-byte file holds exactly two points, order preserved.
  append_f32(bytes, -4.5f);
  append_f32(bytes, 0.25f);
  append_f32(bytes, 10.0f);
  append_f32(bytes, 0.9f);
  std::string two = scratch_path("two_points.bin");
  lpcm::write_file_bytes(two, bytes);

  cloud = lpcm::read_kitti_bin(two);
  REQUIRE(cloud.size() == 2);
  CHECK(cloud[0].x == 1.0);
  CHECK(cloud[1].x == -4.5);
  CHECK(cloud[1].y == 0.25);
  CHECK(cloud[1].z == 10.0);

  // Empty file is a legal zero-point scan.
  std::string empty = scratch_path("empty.bin");
  lpcm::write_file_bytes(empty, {});
  CHECK(lpcm::read_kitti_bin(empty).empty());
}

TEST_CASE("kitti write-read round trip is bit-identical") {
  PointCloud cloud = float_valued_cloud(10000, 2026);
  std::string path = scratch_path("roundtrip.bin");
  lpcm::write_kitti_bin(cloud, path);

  PointCloud back = lpcm::read_kitti_bin(path);
  REQUIRE(back.size() == cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    CHECK(back[i].x == cloud[i].x);
    CHECK(back[i].y == cloud[i].y);
    CHECK(back[i].z == cloud[i].z);
  }

  // Written reflectance slot is zero.
  std::vector<std::uint8_t> raw = lpcm::read_file_bytes(path);
  REQUIRE(raw.size() == cloud.size() * 16);
  float refl;
  std::memcpy(&refl, &raw[12], 4);
  CHECK(refl == 0.0f);
}

TEST_CASE("kitti reader rejects missing and misaligned files") {
  CHECK_THROWS_AS(lpcm::read_kitti_bin(scratch_path("no_such_file.bin")),
                  FormatError);

  std::string ragged = scratch_path("ragged.bin");
  lpcm::write_file_bytes(ragged, std::vector<std::uint8_t>(20, 0));
  CHECK_THROWS_AS(lpcm::read_kitti_bin(ragged), FormatError);
}

TEST_CASE("minimal ascii ply parses to one point") {
  std::string path = scratch_path("minimal.ply");
  lpcm::write_file_bytes(path, as_bytes("ply\n"
                                        "format ascii 1.0\n"
                                        "element vertex 1\n"
                                        "property float x\n"
                                        "property float y\n"
                                        "property float z\n"
                                        "end_header\n"
                                        "1.5 -2.25 0.125\n"));
  PointCloud cloud = lpcm::read_ply(path);
  REQUIRE(cloud.size() == 1);
  CHECK(cloud[0].x == 1.5);
  CHECK(cloud[0].y == -2.25);
  CHECK(cloud[0].z == 0.125);
}

TEST_CASE("ply reader skips comments, extra properties, and trailing elements") {
  // Double-precision coordinates with an interleaved intensity column,
  // CRLF line endings, and a face element after the vertices.
  std::string path = scratch_path("decorated.ply");
  lpcm::write_file_bytes(path,
                         as_bytes("ply\r\n"
                                  "format ascii 1.0\r\n"
                                  "comment made by hand\r\n"
                                  "obj_info scanner frame 7\r\n"
                                  "element vertex 2\r\n"
                                  "property double x\r\n"
                                  "property double y\r\n"
                                  "property uchar intensity\r\n"
                                  "property double z\r\n"
                                  "end_header\r\n"
                                  "0.1 0.2 90 0.3\r\n"
                                  "-1 2.5 91 -3.75\r\n"
                                  "0 1 2\r\n"));
  PointCloud cloud = lpcm::read_ply(path);
  REQUIRE(cloud.size() == 2);
  CHECK(cloud[0].x == 0.1);
  CHECK(cloud[0].y == 0.2);
  CHECK(cloud[0].z == 0.3);
  CHECK(cloud[1].x == -1.0);
  CHECK(cloud[1].y == 2.5);
  CHECK(cloud[1].z == -3.75);
}

TEST_CASE("ply binary reader honors property offsets") {
  // Stride 4 + 1 + 4 + 4 = 13 with a pad byte between x and y.
  std::string header =
      "ply\n"
      "format binary_little_endian 1.0\n"
      "element vertex 2\n"
      "property float x\n"
      "property uchar pad\n"
      "property float y\n"
      "property float z\n"
      "end_header\n";
  std::vector<std::uint8_t> bytes = as_bytes(header);
  append_f32(bytes, 1.0f);
  bytes.push_back(0xAB);
  append_f32(bytes, 2.0f);
  append_f32(bytes, 3.0f);
  append_f32(bytes, -7.5f);
  bytes.push_back(0xCD);
  append_f32(bytes, 0.5f);
  append_f32(bytes, 42.0f);

  std::string path = scratch_path("strided.ply");
  lpcm::write_file_bytes(path, bytes);
  PointCloud cloud = lpcm::read_ply(path);
  REQUIRE(cloud.size() == 2);
  CHECK(cloud[0].x == 1.0);
  CHECK(cloud[0].y == 2.0);
  CHECK(cloud[0].z == 3.0);
  CHECK(cloud[1].x == -7.5);
  CHECK(cloud[1].y == 0.5);
  CHECK(cloud[1].z == 42.0);
}

TEST_CASE("ply binary reader handles double coordinates") {
  std::string header =
      "ply\n"
      "format binary_little_endian 1.0\n"
      "element vertex 1\n"
      "property double x\n"
      "property double y\n"
      "property double z\n"
      "end_header\n";
  std::vector<std::uint8_t> bytes = as_bytes(header);
  append_f64(bytes, 0.1);
  append_f64(bytes, -123.456789);
  append_f64(bytes, 1e-12);

  std::string path = scratch_path("doubles.ply");
  lpcm::write_file_bytes(path, bytes);
  PointCloud cloud = lpcm::read_ply(path);
  REQUIRE(cloud.size() == 1);
  CHECK(cloud[0].x == 0.1);
  CHECK(cloud[0].y == -123.456789);
  CHECK(cloud[0].z == 1e-12);
}

TEST_CASE("ply binary write-read round trip is exact") {
  PointCloud cloud = float_valued_cloud(5000, 31);
  std::string path = scratch_path("binary_rt.ply");
  lpcm::write_ply(cloud, path, PlyFormat::kBinaryLittleEndian);

  PointCloud back = lpcm::read_ply(path);
  REQUIRE(back.size() == cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    CHECK(back[i].x == cloud[i].x);
    CHECK(back[i].y == cloud[i].y);
    CHECK(back[i].z == cloud[i].z);
  }
}

TEST_CASE("ascii and binary ply forms of one cloud parse identically") {
  PointCloud cloud = float_valued_cloud(100000, 77);
  std::string ascii_path = scratch_path("dual_a.ply");
  std::string binary_path = scratch_path("dual_b.ply");
  lpcm::write_ply(cloud, ascii_path, PlyFormat::kAscii);
  lpcm::write_ply(cloud, binary_path, PlyFormat::kBinaryLittleEndian);

  PointCloud from_ascii = lpcm::read_ply(ascii_path);
  PointCloud from_binary = lpcm::read_ply(binary_path);
  REQUIRE(from_ascii.size() == cloud.size());
  REQUIRE(from_binary.size() == cloud.size());
  std::size_t mismatches = 0;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (from_ascii[i].x != from_binary[i].x ||
        from_ascii[i].y != from_binary[i].y ||
        from_ascii[i].z != from_binary[i].z ||
        from_binary[i].x != cloud[i].x) {
      ++mismatches;
    }
  }
  CHECK(mismatches == 0);
}

TEST_CASE("ply reader rejects malformed files") {
  auto write_text = [](const std::string& stem, const std::string& text) {
    std::string path = scratch_path(stem);
    lpcm::write_file_bytes(path, as_bytes(text));
    return path;
  };

  CHECK_THROWS_AS(lpcm::read_ply(scratch_path("no_such.ply")), FormatError);
  CHECK_THROWS_AS(
      lpcm::read_ply(write_text("bad_magic.ply", "plx\nformat ascii 1.0\n")),
      FormatError);
  CHECK_THROWS_AS(
      lpcm::read_ply(write_text("big_endian.ply",
                                "ply\nformat binary_big_endian 1.0\n"
                                "element vertex 0\nend_header\n")),
      FormatError);
  CHECK_THROWS_AS(
      lpcm::read_ply(write_text("no_end.ply",
                                "ply\nformat ascii 1.0\nelement vertex 0\n")),
      FormatError);
  CHECK_THROWS_AS(
      lpcm::read_ply(write_text("no_vertex.ply",
                                "ply\nformat ascii 1.0\nend_header\n")),
      FormatError);
  CHECK_THROWS_AS(
      lpcm::read_ply(write_text("face_first.ply",
                                "ply\nformat ascii 1.0\n"
                                "element face 0\n"
                                "element vertex 0\nend_header\n")),
      FormatError);
  CHECK_THROWS_AS(
      lpcm::read_ply(write_text("missing_z.ply",
                                "ply\nformat ascii 1.0\n"
                                "element vertex 1\n"
                                "property float x\nproperty float y\n"
                                "end_header\n1 2\n")),
      FormatError);
  CHECK_THROWS_AS(
      lpcm::read_ply(write_text("int_coord.ply",
                                "ply\nformat ascii 1.0\n"
                                "element vertex 1\n"
                                "property int x\nproperty float y\n"
                                "property float z\nend_header\n1 2 3\n")),
      FormatError);
  CHECK_THROWS_AS(
      lpcm::read_ply(write_text("list_prop.ply",
                                "ply\nformat ascii 1.0\n"
                                "element vertex 1\n"
                                "property list uchar float x\n"
                                "end_header\n")),
      FormatError);
  CHECK_THROWS_AS(
      lpcm::read_ply(write_text("short_ascii.ply",
                                "ply\nformat ascii 1.0\n"
                                "element vertex 3\n"
                                "property float x\nproperty float y\n"
                                "property float z\nend_header\n"
                                "1 2 3\n4 5 6\n")),
      FormatError);
  CHECK_THROWS_AS(
      lpcm::read_ply(write_text("short_line.ply",
                                "ply\nformat ascii 1.0\n"
                                "element vertex 1\n"
                                "property float x\nproperty float y\n"
                                "property float z\nend_header\n1 2\n")),
      FormatError);

  // Binary payload one row short of the declared count.
  std::vector<std::uint8_t> bytes =
      as_bytes("ply\nformat binary_little_endian 1.0\n"
               "element vertex 2\n"
               "property float x\nproperty float y\nproperty float z\n"
               "end_header\n");
  append_f32(bytes, 1.0f);
  append_f32(bytes, 2.0f);
  append_f32(bytes, 3.0f);
  std::string truncated = scratch_path("short_binary.ply");
  lpcm::write_file_bytes(truncated, bytes);
  CHECK_THROWS_AS(lpcm::read_ply(truncated), FormatError);
}

TEST_CASE("writers leave no temp files behind") {
  std::string path = scratch_path("tidy.ply");
  lpcm::write_ply(float_valued_cloud(10, 5), path, PlyFormat::kAscii);
  CHECK(std::filesystem::exists(path));
  CHECK(!std::filesystem::exists(path + ".tmp"));

  std::string bin = scratch_path("tidy.bin");
  lpcm::write_kitti_bin(float_valued_cloud(10, 6), bin);
  CHECK(std::filesystem::exists(bin));
  CHECK(!std::filesystem::exists(bin + ".tmp"));
}
