/*
 * Copyright 2026 The conformal-sets Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef CONFORMAL_SETS_ERRORS_H_
#define CONFORMAL_SETS_ERRORS_H_

#include <stdexcept>
#include <string>

namespace conformal_sets {

// Base of every error raised by the library. The CLI maps all of them to
// exit status 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Mismatched lengths, out-of-range indices, class-count disagreements.
class InputError : public Error {
 public:
  using Error::Error;
};

// Invalid hyper-parameters (alpha, level, RAPS settings, infeasible rank
// overrides, incompatible models).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed file contents. The message carries the line or byte offset.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Well-formed data that violates a domain invariant (row sums, label range).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Requested diagnostic is not defined for the configured score.
class UnsupportedError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

}  // namespace conformal_sets

#endif  // CONFORMAL_SETS_ERRORS_H_
