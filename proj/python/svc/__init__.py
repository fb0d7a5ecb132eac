# Copyright 2026 The SVC Authors. All Rights Reserved.
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

"""Unsupervised singing voice conversion: Python bindings to the C++ core."""

from ._svc import (
    convert,
    evaluate,
    log_mel,
    make_synthetic_corpus,
    mu_law_decode,
    mu_law_encode,
    read_wav,
    receptive_field,
    spectral_centroid,
    train,
    write_wav,
)

__all__ = [
    "convert",
    "evaluate",
    "log_mel",
    "make_synthetic_corpus",
    "mu_law_decode",
    "mu_law_encode",
    "read_wav",
    "receptive_field",
    "spectral_centroid",
    "train",
    "write_wav",
]
