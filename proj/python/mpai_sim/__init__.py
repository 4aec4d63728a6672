# Copyright 2026 The mpai-sim Authors.
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
"""Python front end for the mpai-sim C++ core.

Inputs may be dicts, JSON strings or paths to JSON files. Results come back
as dicts.
"""

import json
import os

from . import _core
from ._core import Error, int8_round_trip, round_to_fp16, sqnr

__all__ = [
    "Error",
    "InfeasibleError",
    "simulate",
    "partition",
    "exhaustive_search",
    "pareto_csv",
    "calibrate",
    "fit_fig2",
    "run_cli",
    "round_to_fp16",
    "int8_round_trip",
    "sqnr",
]


class InfeasibleError(Error):
    """No assignment or profile meets the requested bounds."""

    def __init__(self, message, report):
        super().__init__(message)
        self.report = report


def _doc(x):
    if isinstance(x, (dict, list)):
        return json.dumps(x)
    if isinstance(x, os.PathLike) or (isinstance(x, str) and not x.lstrip().startswith(("{", "["))):
        with open(x, encoding="utf-8") as f:
            return f.read()
    return x


def simulate(graph, platform, assignment=None, *, device=None, accuracy_model=None):
    """Schedule report for an assignment, or for every layer on `device`."""
    if (assignment is None) == (device is None):
        raise ValueError("give exactly one of assignment or device")
    if device is not None:
        return json.loads(_core._simulate_device(_doc(graph), _doc(platform), device))
    acc = None if accuracy_model is None else _doc(accuracy_model)
    return json.loads(_core._simulate(_doc(graph), _doc(platform), _doc(assignment), acc))


def partition(graph, platform, accuracy_model, constraints=None):
    """Returns (assignment, schedule_report); raises InfeasibleError."""
    ok, a, r = _core._partition(_doc(graph), _doc(platform), _doc(accuracy_model),
                                _doc(constraints or {}))
    if not ok:
        report = json.loads(a)
        raise InfeasibleError("infeasible: binding " + ", ".join(report["binding"]), report)
    return json.loads(a), json.loads(r)


def exhaustive_search(graph, platform, accuracy_model, constraints=None):
    return json.loads(_core._exhaustive(_doc(graph), _doc(platform), _doc(accuracy_model),
                                        _doc(constraints or {})))


def pareto_csv(graph, platform, accuracy_model):
    return _core._pareto_csv(_doc(graph), _doc(platform), _doc(accuracy_model))


def calibrate(graph, skeleton, measurements, seed=0):
    """Fits a platform (and accuracy model when the rows carry accuracy)."""
    raw = _core._calibrate(_doc(graph), _doc(skeleton), _doc(measurements), seed)
    return {k: json.loads(v) for k, v in raw.items()}


def fit_fig2(targets, graphs, skeleton, seed=0, scalar_rate_ablation=False):
    """Returns (platform, achieved); raises InfeasibleError with the best attempt."""
    ok, payload, achieved = _core._fit_fig2(_doc(targets), [_doc(g) for g in graphs],
                                            _doc(skeleton), seed, scalar_rate_ablation)
    achieved = [{"graph": g, "achieved": v, "within": w} for g, v, w in achieved]
    if not ok:
        raise InfeasibleError(payload, achieved)
    return json.loads(payload), achieved


def run_cli(*args):
    """Runs a CLI subcommand in-process; returns (exit_code, stdout, stderr)."""
    return _core._run_cli([str(a) for a in args])
