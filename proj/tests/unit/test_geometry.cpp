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

#include <random>
#include <vector>

#include "memetag/geometry.hpp"
#include "oracles.hpp"

using memetag::BoundingBox;
using memetag::InvalidBoxError;
using memetag::map_face_to_person;
using memetag::overlap_area;

TEST(OverlapArea, UnitIntersectionSquare) {
  EXPECT_DOUBLE_EQ(overlap_area({0, 0, 2, 2}, {1, 1, 3, 3}), 1.0);
}

TEST(OverlapArea, SelfOverlapIsArea) {
  EXPECT_DOUBLE_EQ(overlap_area({0, 0, 4, 3}, {0, 0, 4, 3}), 12.0);
}

TEST(OverlapArea, DisjointIsZero) {
  EXPECT_DOUBLE_EQ(overlap_area({0, 0, 1, 1}, {2, 2, 3, 3}), 0.0);
}

TEST(OverlapArea, TouchingEdgeIsZero) {
  EXPECT_DOUBLE_EQ(overlap_area({0, 0, 1, 1}, {1, 0, 2, 1}), 0.0);
}

TEST(OverlapArea, RejectsInvalidBoxes) {
  EXPECT_THROW(overlap_area({2, 0, 1, 1}, {0, 0, 1, 1}), InvalidBoxError);
  EXPECT_THROW(overlap_area({0, 0, 1, 1}, {0, 0, 1, 0}), InvalidBoxError);
  EXPECT_THROW(overlap_area({-1, 0, 1, 1}, {0, 0, 1, 1}), InvalidBoxError);
  EXPECT_THROW(overlap_area({0, 0, std::numeric_limits<double>::infinity(), 1}, {0, 0, 1, 1}), InvalidBoxError);
}

TEST(OverlapArea, PropertiesOnRandomBoxes) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 2000; ++i) {
    const auto s = memetag::testing::random_scene(rng);
    for (const auto& p : s.persons) {
      const double ab = overlap_area(s.face, p);
      EXPECT_EQ(ab, overlap_area(p, s.face));
      EXPECT_GE(ab, 0.0);
      EXPECT_LE(ab, std::min(s.face.area(), p.area()));
      EXPECT_DOUBLE_EQ(ab, memetag::testing::oracle_overlap(s.face, p));
    }
    EXPECT_EQ(overlap_area(s.face, s.face), s.face.area());
  }
}

TEST(MapFaceToPerson, FaceInsideSecondBox) {
  const std::vector<BoundingBox> persons = {{5, 5, 9, 9}, {0, 0, 4, 4}};
  EXPECT_EQ(map_face_to_person({1, 1, 2, 2}, persons), 1u);
}

TEST(MapFaceToPerson, LargestOverlapWins) {
  const std::vector<BoundingBox> persons = {{0, 0, 1, 2}, {1, 0, 2, 1}};
  EXPECT_EQ(map_face_to_person({0, 0, 2, 2}, persons), 0u);
}

TEST(MapFaceToPerson, EmptyPersons) {
  EXPECT_FALSE(map_face_to_person({0, 0, 1, 1}, std::vector<BoundingBox>{}).has_value());
}

TEST(MapFaceToPerson, NoOverlapIsAbsent) {
  const std::vector<BoundingBox> persons = {{5, 5, 6, 6}, {1, 0, 2, 1}};
  EXPECT_FALSE(map_face_to_person({0, 0, 1, 1}, persons).has_value());
}

TEST(MapFaceToPerson, TiesGoToLowestIndex) {
  const std::vector<BoundingBox> persons = {{9, 9, 10, 10}, {0, 0, 1, 2}, {1, 0, 2, 2}, {0, 0, 1, 2}};
  EXPECT_EQ(map_face_to_person({0, 0, 2, 2}, persons), 1u);
}

TEST(MapFaceToPerson, AgreesWithExhaustiveOracle) {
  std::mt19937_64 rng(17);
  int ties = 0;
  for (int i = 0; i < 5000; ++i) {
    const auto s = memetag::testing::random_scene(rng);
    const auto expected = memetag::testing::oracle_map_face(s.face, s.persons);
    ASSERT_EQ(map_face_to_person(s.face, s.persons), expected) << "scene " << i;
    if (expected) {
      for (std::size_t j = *expected + 1; j < s.persons.size(); ++j) {
        if (overlap_area(s.face, s.persons[j]) == overlap_area(s.face, s.persons[*expected])) ++ties;
      }
    }
  }
  EXPECT_GT(ties, 0) << "generator should produce tie cases";
}
