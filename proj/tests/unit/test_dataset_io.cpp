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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "memetag/dataset_io.hpp"
#include "temp_dir.hpp"

namespace fs = std::filesystem;
using namespace memetag;

namespace {

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  f << text;
}

std::string read_file(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

}  // namespace

TEST(LoadRecords, DirectFieldMapping) {
  memetag::testing::TempDir dir;
  write_file(dir / "a.jsonl", R"({"id": 1, "img": "img/1.png", "text": "hello", "label": 0})" "\n");
  const auto records = load_records(dir / "a.jsonl");
  ASSERT_EQ(records.size(), 1u);
  EXPECT_EQ(records[0], (MemeRecord{1, "img/1.png", "hello", 0}));
}

TEST(LoadRecords, EmptyFile) {
  memetag::testing::TempDir dir;
  write_file(dir / "e.jsonl", "");
  EXPECT_TRUE(load_records(dir / "e.jsonl").empty());
}

TEST(LoadRecords, DuplicateIdNamesTheId) {
  memetag::testing::TempDir dir;
  write_file(dir / "d.jsonl",
             "{\"id\": 7, \"img\": \"a.png\", \"text\": \"x\"}\n{\"id\": 7, \"img\": \"b.png\", \"text\": \"y\"}\n");
  try {
    load_records(dir / "d.jsonl");
    FAIL() << "expected DuplicateIdError";
  } catch (const DuplicateIdError& e) {
    EXPECT_EQ(e.id(), 7);
    EXPECT_NE(std::string(e.what()).find('7'), std::string::npos);
  }
}

TEST(LoadRecords, MissingFileIsFatal) {
  EXPECT_THROW(load_records("/nonexistent/never.jsonl"), DatasetError);
}

TEST(LoadRecords, ReportsEveryMalformedLineWithNumber) {
  memetag::testing::TempDir dir;
  write_file(dir / "m.jsonl",
             "{\"id\": 1, \"img\": \"a.png\", \"text\": \"ok\"}\n"
             "{\"id\": 2, \"text\": \"no image\"}\n"
             "not json\n"
             "{\"id\": 4, \"img\": \"d.png\", \"text\": \"   \"}\n"
             "{\"id\": 5, \"img\": \"e.png\", \"text\": \"bad label\", \"label\": 3}\n");
  try {
    load_records(dir / "m.jsonl");
    FAIL() << "expected RecordError";
  } catch (const RecordError& e) {
    ASSERT_EQ(e.issues().size(), 4u);
    EXPECT_EQ(e.issues()[0].line, 2u);
    EXPECT_EQ(e.issues()[1].line, 3u);
    EXPECT_EQ(e.issues()[2].line, 4u);
    EXPECT_EQ(e.issues()[3].line, 5u);
  }
  const auto lenient = load_records_lenient(dir / "m.jsonl");
  EXPECT_EQ(lenient.records.size(), 1u);
  EXPECT_EQ(lenient.issues.size(), 4u);
}

TEST(LoadRecords, RequiredLabelPolicy) {
  memetag::testing::TempDir dir;
  write_file(dir / "t.jsonl", "{\"id\": 1, \"img\": \"a.png\", \"text\": \"x\"}\n");
  EXPECT_FALSE(load_records(dir / "t.jsonl")[0].label.has_value());
  EXPECT_THROW(load_records(dir / "t.jsonl", LabelPolicy::kRequired), RecordError);
}

TEST(LoadRecords, OrderPreservingAndTotal) {
  memetag::testing::TempDir dir;
  std::vector<MemeRecord> records;
  for (int i = 0; i < 50; ++i) records.push_back({(i * 37) % 101, "img/" + std::to_string(i) + ".png",
                                                 "caption \"quoted\" " + std::to_string(i), i % 2});
  write_records(records, dir / "r.jsonl");
  EXPECT_EQ(load_records(dir / "r.jsonl"), records);
}

TEST(WritePredictions, SingleRow) {
  memetag::testing::TempDir dir;
  write_predictions({{1, 0.25, 0}}, dir / "p.csv");
  EXPECT_EQ(read_file(dir / "p.csv"), "id,proba,label\n1,0.250000,0\n");
}

TEST(WritePredictions, HeaderOnly) {
  memetag::testing::TempDir dir;
  write_predictions({}, dir / "p.csv");
  EXPECT_EQ(read_file(dir / "p.csv"), "id,proba,label\n");
}

TEST(WritePredictions, OutOfRangeFailsBeforeWriting) {
  memetag::testing::TempDir dir;
  EXPECT_THROW(write_predictions({{1, 0.5, 1}, {2, 1.5, 1}}, dir / "p.csv"), DatasetError);
  EXPECT_FALSE(fs::exists(dir / "p.csv"));
}

TEST(WritePredictions, LabelMustMatchThreshold) {
  EXPECT_EQ(make_prediction_row(3, 0.5).label, 1);
  EXPECT_EQ(make_prediction_row(3, 0.4999).label, 0);
  EXPECT_EQ(make_prediction_row(3, 0.6, 0.7).label, 0);
}

TEST(WritePredictions, RoundTripWithinTolerance) {
  memetag::testing::TempDir dir;
  std::vector<PredictionRow> rows;
  for (int i = 0; i < 100; ++i) rows.push_back(make_prediction_row(i, (i * 0.0123456789) - std::floor(i * 0.0123456789)));
  write_predictions(rows, dir / "p.csv");
  const auto back = read_predictions(dir / "p.csv");
  ASSERT_EQ(back.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(back[i].id, rows[i].id);
    EXPECT_NEAR(back[i].proba, rows[i].proba, 1e-6);
    EXPECT_EQ(back[i].label, rows[i].label);
  }
}
