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

#include "memetag/dataset_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

namespace memetag {

using nlohmann::json;

namespace {

std::string join_issues(const std::vector<RecordIssue>& issues) {
  std::ostringstream os;
  os << issues.size() << " malformed record(s):";
  for (const auto& issue : issues) os << "\n  line " << issue.line << ": " << issue.message;
  return os.str();
}

bool is_blank(const std::string& s) {
  return s.find_first_not_of(" \t\r\n") == std::string::npos;
}

}  // namespace

RecordError::RecordError(std::vector<RecordIssue> issues)
    : DatasetError(join_issues(issues)), issues_(std::move(issues)) {}

DuplicateIdError::DuplicateIdError(MemeId id, std::size_t first_line, std::size_t second_line)
    : DatasetError("duplicate id " + std::to_string(id) + " on lines " + std::to_string(first_line) +
                   " and " + std::to_string(second_line)),
      id_(id) {}

MemeRecord parse_record(const std::string& line, LabelPolicy policy) {
  json obj;
  try {
    obj = json::parse(line);
  } catch (const json::parse_error& e) {
    throw DatasetError(std::string("invalid JSON: ") + e.what());
  }
  if (!obj.is_object()) throw DatasetError("record is not an object");

  MemeRecord rec;
  if (!obj.contains("id")) throw DatasetError("missing required field 'id'");
  if (!obj["id"].is_number_integer()) throw DatasetError("field 'id' must be an integer");
  rec.id = obj["id"].get<MemeId>();
  if (rec.id < 0) throw DatasetError("field 'id' must be non-negative");

  if (!obj.contains("img")) throw DatasetError("missing required field 'img'");
  if (!obj["img"].is_string()) throw DatasetError("field 'img' must be a string");
  rec.img = obj["img"].get<std::string>();

  if (!obj.contains("text")) throw DatasetError("missing required field 'text'");
  if (!obj["text"].is_string()) throw DatasetError("field 'text' must be a string");
  rec.text = obj["text"].get<std::string>();
  if (is_blank(rec.text)) throw DatasetError("field 'text' is empty");

  if (obj.contains("label") && !obj["label"].is_null()) {
    const auto& l = obj["label"];
    if (!l.is_number_integer() || (l.get<int>() != 0 && l.get<int>() != 1)) {
      throw DatasetError("field 'label' must be 0 or 1");
    }
    rec.label = l.get<int>();
  } else if (policy == LabelPolicy::kRequired) {
    throw DatasetError("missing required field 'label'");
  }
  return rec;
}

std::string serialize_record(const MemeRecord& record) {
  json obj = {{"id", record.id}, {"img", record.img}, {"text", record.text}};
  if (record.label) obj["label"] = *record.label;
  return obj.dump();
}

LoadReport load_records_lenient(const std::filesystem::path& path, LabelPolicy policy) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot open dataset file " + path.string());

  LoadReport report;
  std::unordered_map<MemeId, std::size_t> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (is_blank(line)) continue;
    try {
      MemeRecord rec = parse_record(line, policy);
      auto [it, inserted] = seen.emplace(rec.id, lineno);
      if (!inserted) throw DuplicateIdError(rec.id, it->second, lineno);
      report.records.push_back(std::move(rec));
    } catch (const DuplicateIdError&) {
      throw;
    } catch (const DatasetError& e) {
      report.issues.push_back({lineno, e.what()});
    }
  }
  return report;
}

std::vector<MemeRecord> load_records(const std::filesystem::path& path, LabelPolicy policy) {
  LoadReport report = load_records_lenient(path, policy);
  if (!report.issues.empty()) throw RecordError(std::move(report.issues));
  return std::move(report.records);
}

void write_records(const std::vector<MemeRecord>& records, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DatasetError("cannot write " + path.string());
  for (const auto& r : records) out << serialize_record(r) << '\n';
}

PredictionRow make_prediction_row(MemeId id, double proba, double threshold) {
  return PredictionRow{id, proba, proba >= threshold ? 1 : 0};
}

void write_predictions(const std::vector<PredictionRow>& rows, const std::filesystem::path& path) {
  for (const auto& row : rows) {
    if (!(row.proba >= 0.0 && row.proba <= 1.0)) {
      throw DatasetError("probability " + std::to_string(row.proba) + " for id " +
                         std::to_string(row.id) + " is outside [0,1]");
    }
    if (row.label != 0 && row.label != 1) {
      throw DatasetError("label for id " + std::to_string(row.id) + " must be 0 or 1");
    }
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DatasetError("cannot write " + path.string());
  out << "id,proba,label\n";
  char buf[64];
  for (const auto& row : rows) {
    std::snprintf(buf, sizeof(buf), "%lld,%.6f,%d\n", static_cast<long long>(row.id), row.proba,
                  row.label);
    out << buf;
  }
}

std::vector<PredictionRow> read_predictions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot open predictions file " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("id,proba,label", 0) != 0) {
    throw DatasetError(path.string() + ": missing 'id,proba,label' header");
  }
  std::vector<PredictionRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (is_blank(line)) continue;
    PredictionRow row;
    long long id = 0;
    char tail = 0;
    if (std::sscanf(line.c_str(), "%lld,%lf,%d%c", &id, &row.proba, &row.label, &tail) < 3 ||
        (tail != 0 && tail != '\r')) {
      throw DatasetError(path.string() + ":" + std::to_string(lineno) + ": malformed row");
    }
    row.id = id;
    if (!(row.proba >= 0.0 && row.proba <= 1.0) || (row.label != 0 && row.label != 1)) {
      throw DatasetError(path.string() + ":" + std::to_string(lineno) + ": value out of range");
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace memetag
