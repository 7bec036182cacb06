/*
 * Copyright 2026 The provscope Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "provscope/error.hpp"

namespace provscope {

ParseError::ParseError(const std::string& what, std::int64_t line_no)
    : Error("line " + std::to_string(line_no) + ": " + what), line_(line_no) {}

ExitCode exit_code_for(const std::exception& e) noexcept {
    if (dynamic_cast<const ConfigError*>(&e) != nullptr) return ExitCode::Config;
    if (dynamic_cast<const ValidationError*>(&e) != nullptr) return ExitCode::Validation;
    if (dynamic_cast<const IoError*>(&e) != nullptr) return ExitCode::Io;
    if (dynamic_cast<const DataError*>(&e) != nullptr) return ExitCode::Data;
    if (dynamic_cast<const ParseError*>(&e) != nullptr) return ExitCode::Data;
    if (dynamic_cast<const LookupError*>(&e) != nullptr) return ExitCode::Data;
    return ExitCode::Failure;
}

} // namespace provscope
