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

#include "memetag/eval_ensemble.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace memetag {

void PredictionSet::validate() const {
  for (const auto& [id, p] : scores) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw EnsembleError(model_name + ": probability for id " + std::to_string(id) +
                          " outside [0,1]");
    }
  }
}

std::vector<PredictionRow> PredictionSet::to_rows(double threshold) const {
  std::vector<PredictionRow> rows;
  rows.reserve(scores.size());
  for (const auto& [id, p] : scores) rows.push_back(make_prediction_row(id, p, threshold));
  return rows;
}

PredictionSet PredictionSet::from_rows(std::string name, const std::vector<PredictionRow>& rows) {
  PredictionSet set{std::move(name), {}};
  for (const auto& row : rows) {
    if (!set.scores.emplace(row.id, row.proba).second) {
      throw EnsembleError(set.model_name + ": duplicate id " + std::to_string(row.id));
    }
  }
  return set;
}

std::vector<double> fractional_ranks(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    // positions i..j-1 hold ranks i+1..j
    const double mean_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = mean_rank;
    i = j;
  }
  return ranks;
}

double auroc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) throw MetricError("scores and labels differ in length");
  std::size_t n_pos = 0;
  for (int l : labels) {
    if (l != 0 && l != 1) throw MetricError("labels must be 0 or 1");
    n_pos += static_cast<std::size_t>(l);
  }
  const std::size_t n_neg = labels.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw MetricError("AUROC is undefined when only one class is present");
  }
  const auto ranks = fractional_ranks(scores);
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    if (labels[i] == 1) rank_sum += ranks[i];
  }
  const double np = static_cast<double>(n_pos);
  const double u = rank_sum - np * (np + 1.0) / 2.0;
  return u / (np * static_cast<double>(n_neg));
}

namespace {

void align(const PredictionSet& set, const LabelMap& labels, std::vector<double>& s,
           std::vector<int>& l) {
  s.reserve(set.scores.size());
  l.reserve(set.scores.size());
  for (const auto& [id, p] : set.scores) {
    auto it = labels.find(id);
    if (it == labels.end()) throw MetricError("no label for scored id " + std::to_string(id));
    s.push_back(p);
    l.push_back(it->second);
  }
}

}  // namespace

double auroc(const PredictionSet& scores, const LabelMap& labels) {
  std::vector<double> s;
  std::vector<int> l;
  align(scores, labels, s, l);
  return auroc(s, l);
}

double accuracy(const std::vector<double>& scores, const std::vector<int>& labels,
                double threshold) {
  if (scores.size() != labels.size()) throw MetricError("scores and labels differ in length");
  if (scores.empty()) throw MetricError("accuracy of an empty set is undefined");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if ((scores[i] >= threshold ? 1 : 0) == labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(scores.size());
}

double accuracy(const PredictionSet& scores, const LabelMap& labels, double threshold) {
  std::vector<double> s;
  std::vector<int> l;
  align(scores, labels, s, l);
  return accuracy(s, l, threshold);
}

EnsembleMethod parse_ensemble_method(const std::string& name) {
  if (name == "mean") return EnsembleMethod::kMean;
  if (name == "rank_mean") return EnsembleMethod::kRankMean;
  throw EnsembleError("unknown ensemble method '" + name + "' (expected mean or rank_mean)");
}

std::string to_string(EnsembleMethod method) {
  return method == EnsembleMethod::kMean ? "mean" : "rank_mean";
}

PredictionSet ensemble(const std::vector<PredictionSet>& sets, EnsembleMethod method,
                       std::string name) {
  if (sets.empty()) throw EnsembleError("ensemble needs at least one prediction set");
  const auto& ref = sets.front();
  for (std::size_t k = 1; k < sets.size(); ++k) {
    std::vector<MemeId> offending;
    for (const auto& [id, p] : ref.scores) {
      if (!sets[k].scores.contains(id)) offending.push_back(id);
    }
    for (const auto& [id, p] : sets[k].scores) {
      if (!ref.scores.contains(id)) offending.push_back(id);
    }
    if (!offending.empty()) {
      std::sort(offending.begin(), offending.end());
      std::ostringstream os;
      os << "id coverage of '" << sets[k].model_name << "' differs from '" << ref.model_name
         << "'; offending ids:";
      for (MemeId id : offending) os << ' ' << id;
      throw EnsembleError(os.str());
    }
  }
  for (const auto& s : sets) s.validate();

  const std::size_t n = ref.scores.size();
  std::vector<double> acc(n, 0.0);
  for (const auto& s : sets) {
    std::vector<double> column;
    column.reserve(n);
    for (const auto& [id, p] : s.scores) column.push_back(p);
    if (method == EnsembleMethod::kRankMean) {
      column = fractional_ranks(column);
      for (double& r : column) r = n > 1 ? (r - 1.0) / static_cast<double>(n - 1) : 0.5;
    }
    for (std::size_t i = 0; i < n; ++i) acc[i] += column[i];
  }

  PredictionSet out{std::move(name), {}};
  std::size_t i = 0;
  const double k = static_cast<double>(sets.size());
  for (const auto& [id, p] : ref.scores) out.scores.emplace_hint(out.scores.end(), id, acc[i++] / k);
  return out;
}

}  // namespace memetag
