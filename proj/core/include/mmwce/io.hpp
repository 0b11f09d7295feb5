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


// Channel tensors and small CSV artifacts.
//
// Channel tensor layout, all fields little-endian:
//   bytes 0..7   magic "MMWCECH1"
//   u32          rows
//   u32          cols
//   u64          steps
//   f64 pairs    re, im of each entry; step-major, then row-major

#ifndef MMWCE_IO_HPP
#define MMWCE_IO_HPP

#include "mmwce/numerics.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace mmwce {

void write_channel_tensor(std::ostream& os, const std::vector<CMatrix>& steps);
/// Throws Errc::io on a bad magic, truncated payload or non-finite entry.
std::vector<CMatrix> read_channel_tensor(std::istream& is);
void save_channel_tensor(const std::string& path, const std::vector<CMatrix>& steps);
std::vector<CMatrix> load_channel_tensor(const std::string& path);

/// One row per step: t, s1, ..., sk.
void write_singular_values_csv(std::ostream& os, const std::vector<std::vector<double>>& per_step);

/// row,col per observed entry.
void write_mask_csv(std::ostream& os, const SamplingMask& mask);
SamplingMask read_mask_csv(std::istream& is, std::size_t rows, std::size_t cols);

} // namespace mmwce

#endif // MMWCE_IO_HPP
