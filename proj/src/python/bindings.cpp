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

#include <sstream>
#include <string>
#include <vector>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "memetag/app/cli.hpp"
#include "memetag/app/pipeline.hpp"
#include "memetag/app/run_config.hpp"
#include "memetag/dataset_io.hpp"
#include "memetag/eval_ensemble.hpp"
#include "memetag/geometry.hpp"
#include "memetag/input_builder.hpp"

namespace py = pybind11;
using namespace memetag;

namespace {

using Box = std::tuple<double, double, double, double>;

BoundingBox to_box(const Box& b) {
  BoundingBox box{std::get<0>(b), std::get<1>(b), std::get<2>(b), std::get<3>(b)};
  box.validate();
  return box;
}

PredictionSet to_set(const std::map<MemeId, double>& scores, std::string name = "scores") {
  PredictionSet s{std::move(name), scores};
  s.validate();
  return s;
}

py::dict record_to_dict(const MemeRecord& r) {
  py::dict d;
  d["id"] = r.id;
  d["img"] = r.img;
  d["text"] = r.text;
  d["label"] = r.label ? py::cast(*r.label) : py::none();
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Native core of memetag: geometry, metrics, ensembling, dataset I/O and pipeline stages.";

  py::register_exception<InvalidBoxError>(m, "InvalidBoxError", PyExc_ValueError);
  py::register_exception<MetricError>(m, "MetricError", PyExc_ValueError);
  py::register_exception<EnsembleError>(m, "EnsembleError", PyExc_ValueError);
  py::register_exception<DatasetError>(m, "DatasetError", PyExc_ValueError);
  py::register_exception<app::MissingArtifactError>(m, "MissingArtifactError", PyExc_FileNotFoundError);
  py::register_exception<app::ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<app::ConfigFileError>(m, "ConfigFileError", PyExc_ValueError);

  m.def("overlap_area", [](const Box& a, const Box& b) { return overlap_area(to_box(a), to_box(b)); },
        py::arg("a"), py::arg("b"), "Intersection area of two (x1, y1, x2, y2) boxes.");
  m.def(
      "map_face_to_person",
      [](const Box& face, const std::vector<Box>& persons) {
        std::vector<BoundingBox> boxes;
        for (const auto& p : persons) boxes.push_back(to_box(p));
        return map_face_to_person(to_box(face), boxes);
      },
      py::arg("face"), py::arg("persons"),
      "Index of the person box overlapping the face most (lowest index on ties), or None.");

  m.def("auroc", py::overload_cast<const std::vector<double>&, const std::vector<int>&>(&auroc), py::arg("scores"),
        py::arg("labels"));
  m.def(
      "auroc_by_id",
      [](const std::map<MemeId, double>& scores, const LabelMap& labels) { return auroc(to_set(scores), labels); },
      py::arg("scores"), py::arg("labels"));
  m.def("accuracy", py::overload_cast<const std::vector<double>&, const std::vector<int>&, double>(&accuracy),
        py::arg("scores"), py::arg("labels"), py::arg("threshold") = kDefaultDecisionThreshold);
  m.def("fractional_ranks", &fractional_ranks, py::arg("values"));
  m.def(
      "ensemble",
      [](const std::vector<std::map<MemeId, double>>& sets, const std::string& method) {
        std::vector<PredictionSet> members;
        for (std::size_t i = 0; i < sets.size(); ++i) members.push_back(to_set(sets[i], "member" + std::to_string(i)));
        return ensemble(members, parse_ensemble_method(method)).scores;
      },
      py::arg("sets"), py::arg("method") = "mean", "Combine id -> probability mappings ('mean' or 'rank_mean').");

  m.def(
      "load_records",
      [](const std::filesystem::path& path, bool require_labels) {
        py::list out;
        for (const auto& r : load_records(path, require_labels ? LabelPolicy::kRequired : LabelPolicy::kOptional)) {
          out.append(record_to_dict(r));
        }
        return out;
      },
      py::arg("path"), py::arg("require_labels") = false);
  m.def(
      "read_predictions",
      [](const std::filesystem::path& path) {
        std::vector<std::tuple<MemeId, double, int>> rows;
        for (const auto& r : read_predictions(path)) rows.emplace_back(r.id, r.proba, r.label);
        return rows;
      },
      py::arg("path"), "Rows of (id, proba, label).");

  m.def("normalize_words", [](const std::string& text) { return normalize_words(text); }, py::arg("text"));

  m.def("stage_names", &app::stage_names);
  m.def(
      "run_stage",
      [](const std::string& command, const std::filesystem::path& config_path, std::optional<std::uint64_t> seed,
         std::optional<std::string> out, const std::string& split, std::optional<std::string> method,
         const std::vector<std::filesystem::path>& files, std::size_t count) {
        app::RunConfig config = app::load_run_config(config_path);
        if (seed) config.seed = *seed;
        if (out) config.paths.out = std::filesystem::absolute(*out).string();
        app::StageOptions options;
        options.split = split;
        options.method = method;
        options.files = files;
        options.count = count;
        py::gil_scoped_release release;
        return app::run_stage(command, config, options).report;
      },
      py::arg("command"), py::arg("config"), py::arg("seed") = py::none(), py::arg("out") = py::none(),
      py::arg("split") = "test", py::arg("method") = py::none(), py::arg("files") = std::vector<std::filesystem::path>{},
      py::arg("count") = 200, "Run one pipeline stage; returns its report lines.");
  m.def(
      "cli",
      [](const std::vector<std::string>& args) {
        std::vector<const char*> argv = {"memetag"};
        for (const auto& a : args) argv.push_back(a.c_str());
        std::ostringstream out, err;
        const int code = app::cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
        return std::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Run the command-line front end in-process; returns (exit_code, stdout, stderr).");
}
