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

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "memetag/dataset_io.hpp"

namespace memetag {

/// Per-meme probability of "hateful" from one model run.
struct PredictionSet {
  std::string model_name;
  std::map<MemeId, double> scores;

  void validate() const;
  std::vector<PredictionRow> to_rows(double threshold = kDefaultDecisionThreshold) const;
  static PredictionSet from_rows(std::string name, const std::vector<PredictionRow>& rows);
};

using LabelMap = std::map<MemeId, int>;

class MetricError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EnsembleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Probability that a random positive outranks a random negative, ties
/// counting 1/2. Computed via average ranks in O(n log n).
double auroc(const PredictionSet& scores, const LabelMap& labels);
double auroc(const std::vector<double>& scores, const std::vector<int>& labels);

double accuracy(const PredictionSet& scores, const LabelMap& labels,
                double threshold = kDefaultDecisionThreshold);
double accuracy(const std::vector<double>& scores, const std::vector<int>& labels,
                double threshold = kDefaultDecisionThreshold);

enum class EnsembleMethod { kMean, kRankMean };

EnsembleMethod parse_ensemble_method(const std::string& name);
std::string to_string(EnsembleMethod method);

/// Average ranks (1-based, ties share their mean rank).
std::vector<double> fractional_ranks(const std::vector<double>& values);

/// Combines equally weighted members. All members must cover the same ids.
PredictionSet ensemble(const std::vector<PredictionSet>& sets,
                       EnsembleMethod method = EnsembleMethod::kMean,
                       std::string name = "ensemble");

}  // namespace memetag
