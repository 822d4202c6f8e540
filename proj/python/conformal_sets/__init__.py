# Copyright 2026 The conformal-sets Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Class-conditional conformal prediction sets."""

import json

from . import _core
from ._core import (
    Error,
    conformal_quantile,
    decay_counts,
    effective_level,
    label_rank,
    rank_frequency,
    sample_world,
    score_all,
    score_pair,
    topk_errors,
)

__all__ = [
    "Error",
    "calibrate",
    "conformal_quantile",
    "decay_counts",
    "diagnose",
    "effective_level",
    "evaluate",
    "label_rank",
    "predict",
    "rank_frequency",
    "sample_world",
    "score_all",
    "score_pair",
    "topk_errors",
]


def calibrate(method, probs, labels, alpha, **kwargs):
    """Calibrates a model and returns it as a dict (the CLI's JSON schema)."""
    return json.loads(_core.calibrate(method, probs, labels, alpha, **kwargs))


def predict(model, probs):
    """Returns one sorted list of labels per row of `probs`."""
    if not isinstance(model, str):
        model = json.dumps(model)
    return _core.predict(model, probs)


def evaluate(sets, labels, alpha, num_classes):
    return json.loads(_core.evaluate(sets, labels, alpha, num_classes))


def diagnose(rc3p_model, ccp_model, probs, labels):
    return json.loads(
        _core.diagnose(json.dumps(rc3p_model), json.dumps(ccp_model), probs, labels)
    )
