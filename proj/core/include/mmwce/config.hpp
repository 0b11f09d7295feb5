// SPDX-License-Identifier: Apache-2.0
//
// Copyright 2026 The mmwce Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// JSON experiment configuration. Unknown keys are rejected.

#ifndef MMWCE_CONFIG_HPP
#define MMWCE_CONFIG_HPP

#include "mmwce/harness.hpp"

#include <string>

namespace mmwce {

/// Parses and validates a configuration document. Missing keys keep their
/// defaults; unknown keys, wrong types and invalid values throw Errc::config.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Pretty-printed document holding every field of `cfg`.
std::string dump_config(const ExperimentConfig& cfg);

} // namespace mmwce

#endif // MMWCE_CONFIG_HPP
