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

#include "hurmacl/zip.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>
#include <iterator>

#include "hurmacl/error.hpp"

namespace hurmacl::zip {
namespace {

constexpr std::uint32_t kLocalSig = 0x04034b50;
constexpr std::uint32_t kCentralSig = 0x02014b50;
constexpr std::uint32_t kEndSig = 0x06054b50;
constexpr std::uint16_t kDosDate = (0 << 9) | (1 << 5) | 1;  // 1980-01-01

void put16(std::vector<std::uint8_t>& b, std::uint16_t v) {
  b.push_back(static_cast<std::uint8_t>(v));
  b.push_back(static_cast<std::uint8_t>(v >> 8));
}
void put32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
std::uint16_t get16(const std::vector<std::uint8_t>& b, std::size_t at) {
  if (at + 2 > b.size()) fail(ErrorCode::kParse, "zip: truncated archive");
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}
std::uint32_t get32(const std::vector<std::uint8_t>& b, std::size_t at) {
  if (at + 4 > b.size()) fail(ErrorCode::kParse, "zip: truncated archive");
  return static_cast<std::uint32_t>(b[at]) | (static_cast<std::uint32_t>(b[at + 1]) << 8) |
         (static_cast<std::uint32_t>(b[at + 2]) << 16) | (static_cast<std::uint32_t>(b[at + 3]) << 24);
}
std::uint32_t crc(const std::vector<std::uint8_t>& d) {
  uLong c = crc32(0L, Z_NULL, 0);
  std::size_t off = 0;
  while (off < d.size()) {
    const auto n = static_cast<uInt>(std::min<std::size_t>(d.size() - off, 1u << 30));
    c = crc32(c, d.data() + off, n);
    off += n;
  }
  return static_cast<std::uint32_t>(c);
}

}  // namespace

void Writer::add(const std::string& name, std::vector<std::uint8_t> bytes) {
  require(!name.empty() && name.size() < 65535, "zip: bad entry name");
  entries_.emplace_back(name, std::move(bytes));
}

void Writer::write(const std::filesystem::path& path) const {
  std::vector<std::uint8_t> out, central;
  for (const auto& [name, data] : entries_) {
    if (data.size() >= 0xffffffffULL) fail(ErrorCode::kInvalidArgument, "zip: entry too large");
    const auto offset = static_cast<std::uint32_t>(out.size());
    const std::uint32_t c = crc(data);
    const auto size = static_cast<std::uint32_t>(data.size());
    const auto nlen = static_cast<std::uint16_t>(name.size());
    put32(out, kLocalSig);
    put16(out, 20);
    put16(out, 0);
    put16(out, 0);
    put16(out, 0);
    put16(out, kDosDate);
    put32(out, c);
    put32(out, size);
    put32(out, size);
    put16(out, nlen);
    put16(out, 0);
    out.insert(out.end(), name.begin(), name.end());
    out.insert(out.end(), data.begin(), data.end());

    put32(central, kCentralSig);
    put16(central, 20);
    put16(central, 20);
    put16(central, 0);
    put16(central, 0);
    put16(central, 0);
    put16(central, kDosDate);
    put32(central, c);
    put32(central, size);
    put32(central, size);
    put16(central, nlen);
    put16(central, 0);
    put16(central, 0);
    put16(central, 0);
    put16(central, 0);
    put32(central, 0);
    put32(central, offset);
    central.insert(central.end(), name.begin(), name.end());
  }
  const auto cd_offset = static_cast<std::uint32_t>(out.size());
  out.insert(out.end(), central.begin(), central.end());
  put32(out, kEndSig);
  put16(out, 0);
  put16(out, 0);
  put16(out, static_cast<std::uint16_t>(entries_.size()));
  put16(out, static_cast<std::uint16_t>(entries_.size()));
  put32(out, static_cast<std::uint32_t>(central.size()));
  put32(out, cd_offset);
  put16(out, 0);

  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) fail(ErrorCode::kIo, "cannot write " + path.string());
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!f) fail(ErrorCode::kIo, "write failed for " + path.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(ErrorCode::kIo, "cannot rename into " + path.string() + ": " + ec.message());
}

std::map<std::string, std::vector<std::uint8_t>> read(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::kIo, "cannot open " + path.string());
  const std::vector<std::uint8_t> b((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (b.size() < 22) fail(ErrorCode::kParse, "zip: " + path.string() + " is too small");
  std::size_t end = b.size() - 22;
  for (;;) {
    if (get32(b, end) == kEndSig) break;
    if (end == 0 || b.size() - end > 22 + 65535)
      fail(ErrorCode::kParse, "zip: end of central directory not found in " + path.string());
    --end;
  }
  const std::uint16_t count = get16(b, end + 10);
  std::size_t at = get32(b, end + 16);
  std::map<std::string, std::vector<std::uint8_t>> out;
  for (std::uint16_t i = 0; i < count; ++i) {
    if (get32(b, at) != kCentralSig) fail(ErrorCode::kParse, "zip: bad central directory entry");
    const std::uint16_t method = get16(b, at + 10);
    const std::uint32_t c = get32(b, at + 16);
    const std::uint32_t size = get32(b, at + 20);
    const std::uint16_t nlen = get16(b, at + 28);
    const std::uint16_t xlen = get16(b, at + 30);
    const std::uint16_t clen = get16(b, at + 32);
    const std::uint32_t local = get32(b, at + 42);
    if (at + 46 + nlen > b.size()) fail(ErrorCode::kParse, "zip: truncated entry name");
    std::string name(b.begin() + static_cast<std::ptrdiff_t>(at + 46),
                     b.begin() + static_cast<std::ptrdiff_t>(at + 46 + nlen));
    if (method != 0) fail(ErrorCode::kParse, "zip: entry " + name + " is compressed");
    if (get32(b, local) != kLocalSig) fail(ErrorCode::kParse, "zip: bad local header for " + name);
    const std::size_t data = local + 30 + get16(b, local + 26) + get16(b, local + 28);
    if (data + size > b.size()) fail(ErrorCode::kParse, "zip: truncated data for " + name);
    std::vector<std::uint8_t> bytes(b.begin() + static_cast<std::ptrdiff_t>(data),
                                    b.begin() + static_cast<std::ptrdiff_t>(data + size));
    if (crc(bytes) != c) fail(ErrorCode::kParse, "zip: CRC mismatch for " + name);
    out.emplace(std::move(name), std::move(bytes));
    at += 46 + nlen + xlen + clen;
  }
  return out;
}

}  // namespace hurmacl::zip
