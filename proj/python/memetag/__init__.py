# Copyright 2026 The memetag Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Python access to the memetag native core.

The heavy lifting lives in the compiled ``_core`` extension; this package
re-exports it under friendlier names.
"""

from ._core import (  # noqa: F401
    ConfigFileError,
    DatasetError,
    EnsembleError,
    InvalidBoxError,
    MetricError,
    MissingArtifactError,
    ValidationError,
    accuracy,
    auroc,
    auroc_by_id,
    cli,
    ensemble,
    fractional_ranks,
    load_records,
    map_face_to_person,
    normalize_words,
    overlap_area,
    read_predictions,
    run_stage,
    stage_names,
)

__version__ = "0.1.0"
