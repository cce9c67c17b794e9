// Copyright 2026 The memetag Authors
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

#include <array>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>

namespace memetag {

/// One file per (namespace, key) under `root/namespace/key.json`. Writes go
/// through a temp file and rename, serialized per key.
class DiskCache {
 public:
  explicit DiskCache(std::filesystem::path root);

  std::optional<std::string> get(const std::string& ns, const std::string& key) const;
  void put(const std::string& ns, const std::string& key, const std::string& content);
  void erase(const std::string& ns, const std::string& key);

  std::filesystem::path path_for(const std::string& ns, const std::string& key) const;
  const std::filesystem::path& root() const { return root_; }

 private:
  std::mutex& lock_for(const std::string& ns, const std::string& key) const;

  std::filesystem::path root_;
  mutable std::array<std::mutex, 64> locks_;
};

}  // namespace memetag
