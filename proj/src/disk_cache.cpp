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

#include "memetag/disk_cache.hpp"

#include <fstream>
#include <iterator>
#include <stdexcept>
#include <thread>

#include "memetag/hashing.hpp"

namespace memetag {

namespace fs = std::filesystem;

DiskCache::DiskCache(fs::path root) : root_(std::move(root)) { fs::create_directories(root_); }

fs::path DiskCache::path_for(const std::string& ns, const std::string& key) const {
  return root_ / ns / (key + ".json");
}

std::mutex& DiskCache::lock_for(const std::string& ns, const std::string& key) const {
  return locks_[fnv1a64(ns + '\0' + key) % locks_.size()];
}

std::optional<std::string> DiskCache::get(const std::string& ns, const std::string& key) const {
  std::lock_guard guard(lock_for(ns, key));
  std::ifstream in(path_for(ns, key), std::ios::binary);
  if (!in) return std::nullopt;
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void DiskCache::put(const std::string& ns, const std::string& key, const std::string& content) {
  std::lock_guard guard(lock_for(ns, key));
  const fs::path target = path_for(ns, key);
  fs::create_directories(target.parent_path());
  const auto tid = std::hash<std::thread::id>{}(std::this_thread::get_id());
  fs::path tmp = target;
  tmp += ".tmp" + std::to_string(tid);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write cache entry " + tmp.string());
    out << content;
    if (!out.flush()) throw std::runtime_error("cannot write cache entry " + tmp.string());
  }
  fs::rename(tmp, target);
}

void DiskCache::erase(const std::string& ns, const std::string& key) {
  std::lock_guard guard(lock_for(ns, key));
  std::error_code ec;
  fs::remove(path_for(ns, key), ec);
}

}  // namespace memetag
