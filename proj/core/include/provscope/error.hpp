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

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace provscope {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A single input line could not be parsed. Recoverable: readers skip the line.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::int64_t line_no);

    std::int64_t line() const noexcept { return line_; }

private:
    std::int64_t line_;
};

// Bad or inconsistent configuration (empty corpus, window < 2, ...).
class ConfigError : public Error {
public:
    using Error::Error;
};

// Cross-module validation failure, e.g. a model trained for another path.
class ValidationError : public Error {
public:
    using Error::Error;
};

// Unknown node id or key.
class LookupError : public Error {
public:
    using Error::Error;
};

// Numeric data that violates a precondition (non-finite values, ...).
class DataError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

// Process exit codes used by the CLI.
enum class ExitCode : int {
    Ok = 0,
    Failure = 1,
    Usage = 2,
    Config = 3,
    Io = 4,
    Data = 5,
    Validation = 6,
    CriteriaFailed = 7,
};

// Maps the dynamic type of an exception to its exit code.
ExitCode exit_code_for(const std::exception& e) noexcept;

} // namespace provscope
