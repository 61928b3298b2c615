// Copyright 2026 The Endgate Authors
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

#ifndef ENDGATE_IO_H_
#define ENDGATE_IO_H_

// Small serialization helpers shared by the file formats: little-endian
// float64 payloads, shortest round-trip double formatting, and tokenizing.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace endgate::io {

void WriteDoublesLE(std::ostream& out, std::span<const double> values);

// Reads exactly `count` doubles; throws ParseError when the stream ends early.
std::vector<double> ReadDoublesLE(std::istream& in, std::size_t count);

// Shortest representation that parses back to the identical double.
std::string FormatDouble(double value);

// Strict parsers: the whole token must be consumed. Throw ParseError.
double ParseDouble(std::string_view token);
std::int64_t ParseInt(std::string_view token);
std::uint64_t ParseUint(std::string_view token);

std::vector<std::string_view> Split(std::string_view text, char sep);
// Splits on runs of spaces/tabs, dropping empty fields.
std::vector<std::string_view> SplitWhitespace(std::string_view text);

std::string ReadFile(const std::filesystem::path& path);
// Writes through a temporary sibling and renames, so readers never see a
// half-written file.
void WriteFileAtomic(const std::filesystem::path& path, std::string_view data);

// 64-bit FNV-1a, used for stable seed derivation and fingerprints.
std::uint64_t Fnv1a64(std::string_view data,
                      std::uint64_t basis = 0xcbf29ce484222325ULL);

// Deterministic combination of a root seed with a label and stream index.
std::uint64_t DeriveSeed(std::uint64_t root, std::string_view label,
                         std::uint64_t stream);

}  // namespace endgate::io

#endif  // ENDGATE_IO_H_
