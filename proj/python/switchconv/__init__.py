# Copyright 2026 The switchconv Authors.
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
"""Switching-token disfluency deletion and punctuation restoration."""

from switchconv._core import (
    Decoder,
    Error,
    VariantSet,
    bleu,
    desk_fillers,
    generate_variants,
    gleu,
    meteor,
    remove_disfluencies,
    run_experiment,
    score,
    tokenize,
)

__all__ = [
    "Decoder",
    "Error",
    "VariantSet",
    "bleu",
    "desk_fillers",
    "generate_variants",
    "gleu",
    "meteor",
    "remove_disfluencies",
    "run_experiment",
    "score",
    "tokenize",
]
