// SPDX-FileCopyrightText: 2026 The lpcm Authors
// SPDX-License-Identifier: Apache-2.0

#include "lpcm/io.hpp"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "lpcm/errors.hpp"

namespace lpcm {

namespace {

// Renaming over the destination is atomic on POSIX, so concurrent readers
// see either the old file or the complete new one.
void atomic_write(const std::string& path, const char* data,
                  std::size_t size) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot create output file: " + tmp);
    out.write(data, static_cast<std::streamsize>(size));
    if (!out) throw FormatError("failed writing output file: " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    throw FormatError("cannot move temporary file into place: " +
                      ec.message());
  }
}

float load_f32(const std::uint8_t* p) {
  float v;
  std::memcpy(&v, p, 4);
  return v;
}

double load_f64(const std::uint8_t* p) {
  double v;
  std::memcpy(&v, p, 8);
  return v;
}

struct PlyProperty {
  std::string name;
  std::size_t size = 0;
  bool is_f32 = false;
  bool is_f64 = false;
};

struct PlyHeader {
  bool binary = false;
  std::size_t vertex_count = 0;
  std::vector<PlyProperty> properties;  // of the vertex element
  std::size_t data_offset = 0;          // first byte after end_header
};

std::size_t property_size(const std::string& type, bool& f32, bool& f64) {
  f32 = type == "float" || type == "float32";
  f64 = type == "double" || type == "float64";
  if (f32) return 4;
  if (f64) return 8;
  if (type == "char" || type == "int8" || type == "uchar" || type == "uint8")
    return 1;
  if (type == "short" || type == "int16" || type == "ushort" ||
      type == "uint16")
    return 2;
  if (type == "int" || type == "int32" || type == "uint" || type == "uint32")
    return 4;
  throw FormatError("unsupported PLY property type: " + type);
}

// Pulls one header line off the byte buffer, tolerating CRLF endings.
std::string next_line(const std::vector<std::uint8_t>& bytes,
                      std::size_t& pos) {
  std::string line;
  while (pos < bytes.size()) {
    char c = static_cast<char>(bytes[pos++]);
    if (c == '\n') break;
    line.push_back(c);
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

PlyHeader parse_ply_header(const std::vector<std::uint8_t>& bytes) {
  std::size_t pos = 0;
  if (next_line(bytes, pos) != "ply") {
    throw FormatError("not a PLY file (missing magic line)");
  }

  PlyHeader header;
  bool saw_format = false;
  bool in_vertex = false;
  bool saw_vertex = false;
  while (true) {
    if (pos >= bytes.size()) {
      throw FormatError("PLY header ends before end_header");
    }
    std::string line = next_line(bytes, pos);
    std::istringstream tokens(line);
    std::string word;
    tokens >> word;
    if (word.empty() || word == "comment" || word == "obj_info") continue;
    if (word == "end_header") break;
    if (word == "format") {
      std::string flavor;
      tokens >> flavor;
      if (flavor == "ascii") {
        header.binary = false;
      } else if (flavor == "binary_little_endian") {
        header.binary = true;
      } else {
        throw FormatError("unsupported PLY format: " + flavor);
      }
      saw_format = true;
    } else if (word == "element") {
      std::string name;
      std::size_t count = 0;
      tokens >> name >> count;
      if (name == "vertex") {
        if (saw_vertex) throw FormatError("duplicate PLY vertex element");
        header.vertex_count = count;
        in_vertex = true;
        saw_vertex = true;
      } else {
        if (!saw_vertex) {
          throw FormatError("PLY vertex element must come first");
        }
        in_vertex = false;  // trailing elements are ignored
      }
    } else if (word == "property") {
      if (!in_vertex) continue;
      std::string type;
      tokens >> type;
      if (type == "list") {
        throw FormatError("list properties are not supported on vertices");
      }
      PlyProperty prop;
      prop.size = property_size(type, prop.is_f32, prop.is_f64);
      tokens >> prop.name;
      header.properties.push_back(prop);
    } else {
      throw FormatError("unrecognized PLY header line: " + line);
    }
  }
  if (!saw_format) throw FormatError("PLY header is missing a format line");
  if (!saw_vertex) throw FormatError("PLY header has no vertex element");
  header.data_offset = pos;
  return header;
}

}  // namespace

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw FormatError("cannot open file: " + path);
  std::streamsize size = in.tellg();
  in.seekg(0);
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(size));
  if (size > 0 &&
      !in.read(reinterpret_cast<char*>(bytes.data()), size)) {
    throw FormatError("failed reading file: " + path);
  }
  return bytes;
}

void write_file_bytes(const std::string& path,
                      const std::vector<std::uint8_t>& bytes) {
  atomic_write(path, reinterpret_cast<const char*>(bytes.data()),
               bytes.size());
}

PointCloud read_kitti_bin(const std::string& path) {
  std::vector<std::uint8_t> bytes = read_file_bytes(path);
  if (bytes.size() % 16 != 0) {
    throw FormatError("KITTI scan length must be a multiple of 16 bytes");
  }
  PointCloud cloud;
  cloud.reserve(bytes.size() / 16);
  for (std::size_t off = 0; off < bytes.size(); off += 16) {
    CartesianPoint p;
    p.x = static_cast<double>(load_f32(&bytes[off]));
    p.y = static_cast<double>(load_f32(&bytes[off + 4]));
    p.z = static_cast<double>(load_f32(&bytes[off + 8]));
    cloud.push_back(p);  // bytes 12..15 are the discarded reflectance
  }
  return cloud;
}

void write_kitti_bin(const PointCloud& cloud, const std::string& path) {
  std::vector<float> packed;
  packed.reserve(cloud.size() * 4);
  for (const CartesianPoint& p : cloud) {
    packed.push_back(static_cast<float>(p.x));
    packed.push_back(static_cast<float>(p.y));
    packed.push_back(static_cast<float>(p.z));
    packed.push_back(0.0f);
  }
  atomic_write(path, reinterpret_cast<const char*>(packed.data()),
               packed.size() * sizeof(float));
}

PointCloud read_ply(const std::string& path) {
  std::vector<std::uint8_t> bytes = read_file_bytes(path);
  PlyHeader header = parse_ply_header(bytes);

  int x_idx = -1, y_idx = -1, z_idx = -1;
  for (std::size_t i = 0; i < header.properties.size(); ++i) {
    const PlyProperty& prop = header.properties[i];
    if (prop.name == "x") x_idx = static_cast<int>(i);
    if (prop.name == "y") y_idx = static_cast<int>(i);
    if (prop.name == "z") z_idx = static_cast<int>(i);
    if ((prop.name == "x" || prop.name == "y" || prop.name == "z") &&
        !prop.is_f32 && !prop.is_f64) {
      throw FormatError("PLY coordinates must be float or double");
    }
  }
  if (x_idx < 0 || y_idx < 0 || z_idx < 0) {
    throw FormatError("PLY vertex element needs x, y, and z properties");
  }

  PointCloud cloud;
  cloud.reserve(header.vertex_count);
  if (header.binary) {
    std::size_t stride = 0;
    std::vector<std::size_t> offsets(header.properties.size());
    for (std::size_t i = 0; i < header.properties.size(); ++i) {
      offsets[i] = stride;
      stride += header.properties[i].size;
    }
    if (header.data_offset + stride * header.vertex_count > bytes.size()) {
      throw FormatError("PLY vertex data is truncated");
    }
    auto read_coord = [&](const std::uint8_t* row, int idx) {
      const PlyProperty& prop = header.properties[static_cast<std::size_t>(idx)];
      const std::uint8_t* p = row + offsets[static_cast<std::size_t>(idx)];
      return prop.is_f64 ? load_f64(p) : static_cast<double>(load_f32(p));
    };
    for (std::size_t n = 0; n < header.vertex_count; ++n) {
      const std::uint8_t* row = bytes.data() + header.data_offset + n * stride;
      CartesianPoint p;
      p.x = read_coord(row, x_idx);
      p.y = read_coord(row, y_idx);
      p.z = read_coord(row, z_idx);
      cloud.push_back(p);
    }
  } else {
    std::size_t pos = header.data_offset;
    for (std::size_t n = 0; n < header.vertex_count; ++n) {
      if (pos >= bytes.size()) throw FormatError("PLY vertex data is truncated");
      std::istringstream tokens(next_line(bytes, pos));
      std::vector<double> values;
      values.reserve(header.properties.size());
      double v;
      while (tokens >> v) values.push_back(v);
      int needed = std::max(x_idx, std::max(y_idx, z_idx));
      if (static_cast<int>(values.size()) <= needed) {
        throw FormatError("PLY vertex line has too few values");
      }
      // Honor the declared width: a float property holds a float32 value,
      // so narrow before widening to match the binary flavor bit for bit.
      auto coord = [&](int idx) {
        double raw = values[static_cast<std::size_t>(idx)];
        return header.properties[static_cast<std::size_t>(idx)].is_f32
                   ? static_cast<double>(static_cast<float>(raw))
                   : raw;
      };
      cloud.push_back({coord(x_idx), coord(y_idx), coord(z_idx)});
    }
  }
  return cloud;
}

void write_ply(const PointCloud& cloud, const std::string& path,
               PlyFormat format) {
  std::string out;
  out += "ply\n";
  out += format == PlyFormat::kAscii ? "format ascii 1.0\n"
                                     : "format binary_little_endian 1.0\n";
  out += "element vertex " + std::to_string(cloud.size()) + "\n";
  out += "property float x\nproperty float y\nproperty float z\n";
  out += "end_header\n";

  if (format == PlyFormat::kAscii) {
    char line[96];
    for (const CartesianPoint& p : cloud) {
      // %.9g round-trips any float32 exactly through the text form.
      std::snprintf(line, sizeof(line), "%.9g %.9g %.9g\n",
                    static_cast<double>(static_cast<float>(p.x)),
                    static_cast<double>(static_cast<float>(p.y)),
                    static_cast<double>(static_cast<float>(p.z)));
      out += line;
    }
  } else {
    out.reserve(out.size() + cloud.size() * 12);
    for (const CartesianPoint& p : cloud) {
      float coords[3] = {static_cast<float>(p.x), static_cast<float>(p.y),
                         static_cast<float>(p.z)};
      out.append(reinterpret_cast<const char*>(coords), 12);
    }
  }
  atomic_write(path, out.data(), out.size());
}

}  // namespace lpcm
