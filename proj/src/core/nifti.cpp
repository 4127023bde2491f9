// Copyright 2026 The hurmacl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "hurmacl/nifti.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

namespace hurmacl {
namespace fs = std::filesystem;

namespace {

constexpr int kHeaderSize = 348;
constexpr int kVoxOffset = 352;

template <typename T>
T load_le(const unsigned char* p, bool swap) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  if (swap) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
    std::memcpy(&v, b, sizeof(T));
  }
  return v;
}

template <typename T>
void store(unsigned char* p, T v) {
  static_assert(std::endian::native == std::endian::little, "big-endian hosts unsupported");
  std::memcpy(p, &v, sizeof(T));
}

[[noreturn]] void parse_error(const fs::path& path, const std::string& field,
                              const std::string& detail) {
  fail(ErrorCode::kParse,
       "NIfTI header field '" + field + "' in " + path.string() + ": " + detail);
}

struct Header {
  GridShape shape;
  Spacing spacing;
  NiftiType type{};
  int bytes_per_voxel = 0;
  long vox_offset = 0;
  double slope = 1.0;
  double inter = 0.0;
  bool swap = false;
};

class GzFile {
 public:
  explicit GzFile(const fs::path& p) : f_(gzopen(p.string().c_str(), "rb")) {
    if (!f_) fail(ErrorCode::kIo, "cannot open " + p.string());
  }
  ~GzFile() { gzclose(f_); }
  GzFile(const GzFile&) = delete;
  GzFile& operator=(const GzFile&) = delete;

  std::size_t read(void* dst, std::size_t n) {
    std::size_t done = 0;
    auto* out = static_cast<unsigned char*>(dst);
    while (done < n) {
      const auto chunk = static_cast<unsigned>(std::min<std::size_t>(n - done, 1u << 30));
      const int r = gzread(f_, out + done, chunk);
      if (r <= 0) break;
      done += static_cast<std::size_t>(r);
    }
    return done;
  }
  void skip(std::size_t n) {
    std::vector<unsigned char> tmp(n);
    read(tmp.data(), n);
  }

 private:
  gzFile f_;
};

Header parse_header(const fs::path& path, const unsigned char* h) {
  Header out;
  const int size_le = load_le<int>(h, false);
  if (size_le != kHeaderSize) {
    if (load_le<int>(h, true) == kHeaderSize)
      out.swap = true;
    else
      parse_error(path, "sizeof_hdr", "expected 348, got " + std::to_string(size_le));
  }
  if (std::memcmp(h + 344, "n+1\0", 4) != 0)
    parse_error(path, "magic", "expected single-file 'n+1'");

  std::array<short, 8> dim{};
  for (int i = 0; i < 8; ++i) dim[i] = load_le<short>(h + 40 + 2 * i, out.swap);
  if (dim[0] < 1 || dim[0] > 7) parse_error(path, "dim[0]", "rank must be 1..7");
  for (int i = 1; i <= dim[0]; ++i)
    if (dim[i] < 1) parse_error(path, "dim[" + std::to_string(i) + "]", "must be >= 1");
  for (int i = 4; i <= dim[0]; ++i)
    if (dim[i] != 1) parse_error(path, "dim[" + std::to_string(i) + "]", "only 3D volumes are supported");
  out.shape.width = dim[1];
  out.shape.height = dim[0] >= 2 ? dim[2] : 1;
  out.shape.depth = dim[0] >= 3 ? dim[3] : 1;

  const short dt = load_le<short>(h + 70, out.swap);
  switch (dt) {
    case 2: case 256: out.bytes_per_voxel = 1; break;
    case 4: case 512: out.bytes_per_voxel = 2; break;
    case 16: out.bytes_per_voxel = 4; break;
    case 64: out.bytes_per_voxel = 8; break;
    default:
      fail(ErrorCode::kUnsupported,
           "unsupported NIfTI datatype " + std::to_string(dt) + " in " + path.string());
  }
  out.type = static_cast<NiftiType>(dt);
  const short bitpix = load_le<short>(h + 72, out.swap);
  if (bitpix != 8 * out.bytes_per_voxel)
    parse_error(path, "bitpix", "does not match datatype " + std::to_string(dt));

  std::array<float, 8> pixdim{};
  for (int i = 0; i < 8; ++i) pixdim[i] = load_le<float>(h + 76 + 4 * i, out.swap);
  for (int i = 1; i <= std::min<int>(dim[0], 3); ++i)
    if (!(pixdim[i] > 0.0f) || !std::isfinite(pixdim[i]))
      parse_error(path, "pixdim[" + std::to_string(i) + "]", "spacing must be positive");
  out.spacing.x = pixdim[1];
  out.spacing.y = dim[0] >= 2 ? pixdim[2] : 1.0;
  out.spacing.z = dim[0] >= 3 ? pixdim[3] : 1.0;

  const float vox = load_le<float>(h + 108, out.swap);
  if (!(vox >= static_cast<float>(kHeaderSize)) || std::floor(vox) != vox)
    parse_error(path, "vox_offset", "must be an integer >= 348");
  out.vox_offset = static_cast<long>(vox);

  const float slope = load_le<float>(h + 112, out.swap);
  const float inter = load_le<float>(h + 116, out.swap);
  if (std::isfinite(slope) && slope != 0.0f) {
    out.slope = slope;
    out.inter = std::isfinite(inter) ? inter : 0.0;
  }
  return out;
}

struct Raw {
  Header header;
  std::vector<double> values;
};

Raw read_raw(const fs::path& path) {
  GzFile f(path);
  std::array<unsigned char, kHeaderSize> hb{};
  if (f.read(hb.data(), hb.size()) != hb.size())
    parse_error(path, "sizeof_hdr", "file shorter than the 348-byte header");
  Raw raw;
  raw.header = parse_header(path, hb.data());
  const auto& hd = raw.header;
  f.skip(static_cast<std::size_t>(hd.vox_offset - kHeaderSize));
  const std::size_t n = hd.shape.numel();
  std::vector<unsigned char> bytes(n * static_cast<std::size_t>(hd.bytes_per_voxel));
  if (f.read(bytes.data(), bytes.size()) != bytes.size())
    fail(ErrorCode::kParse, "NIfTI voxel data truncated in " + path.string());
  raw.values.resize(n);
  const bool sw = hd.swap;
  for (std::size_t i = 0; i < n; ++i) {
    const unsigned char* p = bytes.data() + i * static_cast<std::size_t>(hd.bytes_per_voxel);
    double v = 0;
    switch (hd.type) {
      case NiftiType::kUint8: v = *p; break;
      case NiftiType::kInt8: v = static_cast<signed char>(*p); break;
      case NiftiType::kInt16: v = load_le<std::int16_t>(p, sw); break;
      case NiftiType::kUint16: v = load_le<std::uint16_t>(p, sw); break;
      case NiftiType::kFloat32: v = load_le<float>(p, sw); break;
      case NiftiType::kFloat64: v = load_le<double>(p, sw); break;
    }
    raw.values[i] = v * hd.slope + hd.inter;
  }
  return raw;
}

void write_file(const fs::path& path, const GridShape& shape, const Spacing& sp,
                NiftiType type, const std::vector<unsigned char>& payload) {
  std::array<unsigned char, kVoxOffset> h{};
  store<int>(h.data(), kHeaderSize);
  // Slices are promoted to depth-1 volumes.
  const short dims[8] = {3, static_cast<short>(shape.width), static_cast<short>(shape.height),
                         static_cast<short>(shape.depth), 1, 1, 1, 1};
  for (int i = 0; i < 8; ++i) store<short>(h.data() + 40 + 2 * i, dims[i]);
  int bpv = 0;
  switch (type) {
    case NiftiType::kUint8: case NiftiType::kInt8: bpv = 1; break;
    case NiftiType::kInt16: case NiftiType::kUint16: bpv = 2; break;
    case NiftiType::kFloat32: bpv = 4; break;
    case NiftiType::kFloat64: bpv = 8; break;
  }
  store<short>(h.data() + 70, static_cast<short>(type));
  store<short>(h.data() + 72, static_cast<short>(8 * bpv));
  const float pixdim[8] = {1.0f, static_cast<float>(sp.x), static_cast<float>(sp.y),
                           static_cast<float>(sp.z), 1.0f, 1.0f, 1.0f, 1.0f};
  for (int i = 0; i < 8; ++i) store<float>(h.data() + 76 + 4 * i, pixdim[i]);
  store<float>(h.data() + 108, static_cast<float>(kVoxOffset));
  store<float>(h.data() + 112, 1.0f);
  store<float>(h.data() + 116, 0.0f);
  h[123] = 2;  // xyzt_units: millimetres
  std::memcpy(h.data() + 148, "hurmacl", 7);
  store<short>(h.data() + 252, 1);  // qform_code: scanner, identity rotation
  std::memcpy(h.data() + 344, "n+1\0", 4);

  if (shape.width > std::numeric_limits<short>::max() ||
      shape.height > std::numeric_limits<short>::max() ||
      shape.depth > std::numeric_limits<short>::max())
    fail(ErrorCode::kInvalidArgument, "grid too large for NIfTI-1 dims");

  fs::path tmp = path;
  tmp += ".tmp";
  if (path.string().ends_with(".gz")) {
    gzFile gz = gzopen(tmp.string().c_str(), "wb6");
    if (!gz) fail(ErrorCode::kIo, "cannot write " + path.string());
    bool ok = gzwrite(gz, h.data(), static_cast<unsigned>(h.size())) == static_cast<int>(h.size());
    std::size_t off = 0;
    while (ok && off < payload.size()) {
      const auto n = static_cast<unsigned>(std::min<std::size_t>(payload.size() - off, 1u << 30));
      ok = gzwrite(gz, payload.data() + off, n) == static_cast<int>(n);
      off += n;
    }
    if (gzclose(gz) != Z_OK || !ok) fail(ErrorCode::kIo, "write failed for " + path.string());
  } else {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(h.data()), h.size());
    out.write(reinterpret_cast<const char*>(payload.data()),
              static_cast<std::streamsize>(payload.size()));
    if (!out) fail(ErrorCode::kIo, "write failed for " + path.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) fail(ErrorCode::kIo, "cannot rename into " + path.string() + ": " + ec.message());
}

}  // namespace

fs::path label_companion(const fs::path& image_path) {
  std::string name = image_path.filename().string();
  std::string ext;
  for (const char* e : {".nii.gz", ".nii"}) {
    const std::string s = e;
    if (name.size() > s.size() && name.compare(name.size() - s.size(), s.size(), s) == 0) {
      ext = s;
      name.resize(name.size() - s.size());
      break;
    }
  }
  return image_path.parent_path() / (name + "_label" + (ext.empty() ? ".nii" : ext));
}

IntensityGrid read_intensity(const fs::path& path) {
  Raw raw = read_raw(path);
  IntensityGrid g;
  g.shape = raw.header.shape;
  g.spacing = raw.header.spacing;
  g.values.resize(raw.values.size());
  for (std::size_t i = 0; i < raw.values.size(); ++i) {
    if (!std::isfinite(raw.values[i]))
      fail(ErrorCode::kParse, "non-finite voxel value in " + path.string());
    g.values[i] = static_cast<float>(raw.values[i]);
  }
  return g;
}

LabelGrid read_labels(const fs::path& path, int num_categories) {
  Raw raw = read_raw(path);
  LabelGrid g;
  g.shape = raw.header.shape;
  g.spacing = raw.header.spacing;
  g.labels.resize(raw.values.size());
  int max_label = 0;
  for (std::size_t i = 0; i < raw.values.size(); ++i) {
    const double v = raw.values[i];
    if (!(v >= 0) || v != std::floor(v) || v > std::numeric_limits<std::int32_t>::max())
      fail(ErrorCode::kParse, "label file " + path.string() + " holds a non-label value");
    g.labels[i] = static_cast<std::int32_t>(v);
    max_label = std::max(max_label, g.labels[i]);
  }
  g.num_categories = num_categories > 0 ? num_categories : std::max(2, max_label + 1);
  g.validate();
  return g;
}

Volume load_volume(const fs::path& path) {
  Volume v;
  v.image = read_intensity(path);
  const auto companion = label_companion(path);
  fs::path found;
  if (fs::exists(companion)) {
    found = companion;
  } else {
    // Accept a plain .nii companion next to a .nii.gz image and vice versa.
    auto alt = companion;
    const auto s = alt.string();
    if (s.size() > 3 && s.ends_with(".gz"))
      alt = fs::path(s.substr(0, s.size() - 3));
    else
      alt += ".gz";
    if (fs::exists(alt)) found = alt;
  }
  if (!found.empty()) {
    v.labels = read_labels(found);
    if (!(v.labels->shape == v.image.shape))
      fail(ErrorCode::kParse, "label companion " + found.string() + " shape " +
                                  to_string(v.labels->shape) + " differs from image " +
                                  to_string(v.image.shape));
    v.labels->spacing = v.image.spacing;
  }
  return v;
}

void save_volume(const IntensityGrid& grid, const fs::path& path) {
  grid.validate(false);
  std::vector<unsigned char> payload(grid.values.size() * sizeof(float));
  std::memcpy(payload.data(), grid.values.data(), payload.size());
  write_file(path, grid.shape, grid.spacing, NiftiType::kFloat32, payload);
}

void save_volume(const LabelGrid& grid, const fs::path& path) {
  grid.validate();
  std::vector<unsigned char> payload;
  if (grid.num_categories <= 255) {
    payload.resize(grid.labels.size());
    for (std::size_t i = 0; i < grid.labels.size(); ++i)
      payload[i] = static_cast<unsigned char>(grid.labels[i]);
    write_file(path, grid.shape, grid.spacing, NiftiType::kUint8, payload);
  } else {
    require(grid.num_categories <= 32768, "too many categories for int16 labels");
    payload.resize(grid.labels.size() * 2);
    for (std::size_t i = 0; i < grid.labels.size(); ++i)
      store<std::int16_t>(payload.data() + 2 * i, static_cast<std::int16_t>(grid.labels[i]));
    write_file(path, grid.shape, grid.spacing, NiftiType::kInt16, payload);
  }
}

}  // namespace hurmacl
