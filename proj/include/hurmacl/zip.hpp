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

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace hurmacl::zip {

// Uncompressed (STORED) zip archives: enough for checkpoint containers and
// readable by any standard unzip tool.
class Writer {
 public:
  void add(const std::string& name, std::vector<std::uint8_t> bytes);
  // Writes through a temp file + rename.
  void write(const std::filesystem::path& path) const;

 private:
  std::vector<std::pair<std::string, std::vector<std::uint8_t>>> entries_;
};

// Name -> contents. Throws kParse on malformed archives, CRC mismatches, or
// compressed entries.
std::map<std::string, std::vector<std::uint8_t>> read(const std::filesystem::path& path);

}  // namespace hurmacl::zip
