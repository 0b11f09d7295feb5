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

#ifndef MMWCE_ERROR_HPP
#define MMWCE_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace mmwce {

enum class Errc {
    shape,             // operand dimensions do not agree
    size,              // result would exceed the configured element cap
    solver_failure,    // iterative kernel hit its iteration cap
    degenerate_system, // rank-deficient least-squares system
    degenerate_input,  // e.g. rank estimation on a zero matrix
    grid_mismatch,     // ray angle not on the dictionary grid
    infeasible_mask,   // sampling fraction cannot cover every row/column
    config,            // invalid configuration value
    precondition,      // any other violated precondition
    undefined_metric,  // metric undefined for the given input
    io,                // file read/write failure or bad format
};

std::string_view to_string(Errc code) noexcept;

/// Exception type thrown by every module. `detail()` carries an integer
/// payload whose meaning depends on the code (iteration count for
/// solver_failure, numerical rank for degenerate_system, ray index for
/// grid_mismatch).
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what, long detail = -1)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), detail_(detail) {}

    Errc code() const noexcept { return code_; }
    long detail() const noexcept { return detail_; }

private:
    Errc code_;
    long detail_;
};

inline std::string_view to_string(Errc code) noexcept {
    switch (code) {
    case Errc::shape: return "shape error";
    case Errc::size: return "size error";
    case Errc::solver_failure: return "solver failure";
    case Errc::degenerate_system: return "degenerate system";
    case Errc::degenerate_input: return "degenerate input";
    case Errc::grid_mismatch: return "grid mismatch";
    case Errc::infeasible_mask: return "infeasible mask";
    case Errc::config: return "config error";
    case Errc::precondition: return "precondition violated";
    case Errc::undefined_metric: return "undefined metric";
    case Errc::io: return "io error";
    }
    return "unknown error";
}

inline void require(bool cond, Errc code, const std::string& what, long detail = -1) {
    if (!cond) throw Error(code, what, detail);
}

} // namespace mmwce

#endif // MMWCE_ERROR_HPP
