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


#include "mmwce/io.hpp"

#include "mmwce/error.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace mmwce {

namespace {

constexpr std::array<char, 8> kMagic{'M', 'M', 'W', 'C', 'E', 'C', 'H', '1'};

template <class T>
void put_le(std::ostream& os, T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    std::array<unsigned char, sizeof(T)> b;
    std::memcpy(b.data(), &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b.begin(), b.end());
    os.write(reinterpret_cast<const char*>(b.data()), sizeof(T));
}

template <class T>
T get_le(std::istream& is) {
    std::array<unsigned char, sizeof(T)> b;
    if (!is.read(reinterpret_cast<char*>(b.data()), sizeof(T)))
        throw Error(Errc::io, "channel tensor is truncated");
    if constexpr (std::endian::native == std::endian::big) std::reverse(b.begin(), b.end());
    T value;
    std::memcpy(&value, b.data(), sizeof(T));
    return value;
}

std::string num(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

} // namespace

void write_channel_tensor(std::ostream& os, const std::vector<CMatrix>& steps) {
    const std::size_t rows = steps.empty() ? 0 : steps.front().rows();
    const std::size_t cols = steps.empty() ? 0 : steps.front().cols();
    for (const auto& m : steps)
        require(m.rows() == rows && m.cols() == cols, Errc::shape, "channel tensor steps differ in shape");
    require(rows <= UINT32_MAX && cols <= UINT32_MAX, Errc::size, "channel tensor dimensions exceed 32 bits");
    os.write(kMagic.data(), kMagic.size());
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(rows));
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(cols));
    put_le<std::uint64_t>(os, steps.size());
    for (const auto& m : steps)
        for (const cplx& z : m.data()) {
            put_le<double>(os, z.real());
            put_le<double>(os, z.imag());
        }
    if (!os) throw Error(Errc::io, "failed writing channel tensor");
}

std::vector<CMatrix> read_channel_tensor(std::istream& is) {
    std::array<char, 8> magic{};
    if (!is.read(magic.data(), magic.size()) || magic != kMagic) throw Error(Errc::io, "not a channel tensor (bad magic)");
    const auto rows = get_le<std::uint32_t>(is);
    const auto cols = get_le<std::uint32_t>(is);
    const auto steps = get_le<std::uint64_t>(is);
    require(std::uint64_t(rows) * cols <= kMaxMatrixElements, Errc::size, "channel tensor step too large");
    std::vector<CMatrix> out;
    for (std::uint64_t t = 0; t < steps; ++t) {
        std::vector<cplx> entries(std::size_t(rows) * cols);
        for (auto& z : entries) {
            const double re = get_le<double>(is);
            const double im = get_le<double>(is);
            z = {re, im};
        }
        try {
            out.emplace_back(rows, cols, std::move(entries));
        } catch (const Error& e) {
            throw Error(Errc::io, std::string("invalid channel tensor entry: ") + e.what());
        }
    }
    return out;
}

void save_channel_tensor(const std::string& path, const std::vector<CMatrix>& steps) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error(Errc::io, "cannot open " + path);
    write_channel_tensor(os, steps);
}

std::vector<CMatrix> load_channel_tensor(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error(Errc::io, "cannot open " + path);
    return read_channel_tensor(is);
}

void write_singular_values_csv(std::ostream& os, const std::vector<std::vector<double>>& per_step) {
    std::size_t k = 0;
    for (const auto& s : per_step) k = std::max(k, s.size());
    os << 't';
    for (std::size_t i = 1; i <= k; ++i) os << ",s" << i;
    os << '\n';
    for (std::size_t t = 0; t < per_step.size(); ++t) {
        os << t;
        for (std::size_t i = 0; i < k; ++i) os << ',' << (i < per_step[t].size() ? num(per_step[t][i]) : "");
        os << '\n';
    }
}

void write_mask_csv(std::ostream& os, const SamplingMask& mask) {
    os << "row,col\n";
    for (const auto& [i, j] : mask.observed()) os << i << ',' << j << '\n';
}

SamplingMask read_mask_csv(std::istream& is, std::size_t rows, std::size_t cols) {
    std::string line;
    if (!std::getline(is, line)) throw Error(Errc::io, "empty mask file");
    if (line != "row,col") throw Error(Errc::io, "mask header must be 'row,col'");
    std::vector<std::pair<std::size_t, std::size_t>> obs;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        long long i = -1, j = -1;
        char comma = 0;
        if (!(ls >> i >> comma >> j) || comma != ',' || i < 0 || j < 0)
            throw Error(Errc::io, "bad mask entry on line " + std::to_string(lineno), static_cast<long>(lineno));
        obs.emplace_back(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    }
    try {
        return SamplingMask(rows, cols, std::move(obs));
    } catch (const Error& e) {
        throw Error(Errc::io, std::string("invalid mask: ") + e.what());
    }
}

} // namespace mmwce
