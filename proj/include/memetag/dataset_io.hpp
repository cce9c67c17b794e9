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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace memetag {

using MemeId = std::int64_t;

/// One meme: an image reference plus its overlaid caption.
struct MemeRecord {
  MemeId id = 0;
  std::string img;
  std::string text;
  std::optional<int> label;  // 0 benign, 1 hateful

  friend bool operator==(const MemeRecord&, const MemeRecord&) = default;
};

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A single malformed line. `line` is 1-based.
struct RecordIssue {
  std::size_t line = 0;
  std::string message;
};

/// Raised when one or more lines fail record-level validation.
class RecordError : public DatasetError {
 public:
  explicit RecordError(std::vector<RecordIssue> issues);
  const std::vector<RecordIssue>& issues() const { return issues_; }

 private:
  std::vector<RecordIssue> issues_;
};

class DuplicateIdError : public DatasetError {
 public:
  DuplicateIdError(MemeId id, std::size_t first_line, std::size_t second_line);
  MemeId id() const { return id_; }

 private:
  MemeId id_;
};

enum class LabelPolicy { kOptional, kRequired };

struct LoadReport {
  std::vector<MemeRecord> records;
  std::vector<RecordIssue> issues;
};

/// Parses one record object. Throws DatasetError with a field-level message.
MemeRecord parse_record(const std::string& line, LabelPolicy policy = LabelPolicy::kOptional);
std::string serialize_record(const MemeRecord& record);

/// Reads every line, collecting malformed ones instead of stopping at the first.
/// A missing file or a duplicate id is still fatal.
LoadReport load_records_lenient(const std::filesystem::path& path,
                                LabelPolicy policy = LabelPolicy::kOptional);

/// Strict variant: throws RecordError listing every malformed line.
std::vector<MemeRecord> load_records(const std::filesystem::path& path,
                                     LabelPolicy policy = LabelPolicy::kOptional);

void write_records(const std::vector<MemeRecord>& records, const std::filesystem::path& path);

inline constexpr double kDefaultDecisionThreshold = 0.5;

struct PredictionRow {
  MemeId id = 0;
  double proba = 0.0;
  int label = 0;

  friend bool operator==(const PredictionRow&, const PredictionRow&) = default;
};

PredictionRow make_prediction_row(MemeId id, double proba,
                                  double threshold = kDefaultDecisionThreshold);

/// Writes `id,proba,label` CSV. Every row is range-checked before the file
/// is touched.
void write_predictions(const std::vector<PredictionRow>& rows, const std::filesystem::path& path);
std::vector<PredictionRow> read_predictions(const std::filesystem::path& path);

}  // namespace memetag
