// Copyright 2026 The mpctune Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace mpctune {

/// Round-trippable decimal form of a double (17 significant digits).
std::string format_double(double v);

/// Strict parse of a full field; throws ParseError naming `context`.
double parse_double(std::string_view field, std::string_view context);

/// Split one CSV line on commas (no quoting; fields never contain commas).
std::vector<std::string> split_csv(std::string_view line);

std::string join_csv(const std::vector<std::string>& fields);

}  // namespace mpctune
