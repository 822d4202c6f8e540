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


#ifndef CONFORMAL_SETS_TESTS_JSON_MATCH_H_
#define CONFORMAL_SETS_TESTS_JSON_MATCH_H_

#include <cmath>
#include <string>

#include <gtest/gtest.h>

#include "nlohmann/json.hpp"

namespace conformal_sets::testing {

// Structural comparison. Integers, strings, booleans and nulls must match
// exactly; floating-point leaves may differ by `tol` (absolute).
inline ::testing::AssertionResult JsonMatches(const nlohmann::json& actual,
                                              const nlohmann::json& expected,
                                              double tol = 1e-12,
                                              const std::string& path = "$") {
  using nlohmann::json;
  if (expected.is_number() && actual.is_number()) {
    if (expected.is_number_float() || actual.is_number_float()) {
      const double a = actual.get<double>();
      const double e = expected.get<double>();
      if (std::fabs(a - e) <= tol) return ::testing::AssertionSuccess();
      return ::testing::AssertionFailure()
             << path << ": " << a << " vs expected " << e;
    }
    if (actual.get<long long>() == expected.get<long long>()) {
      return ::testing::AssertionSuccess();
    }
    return ::testing::AssertionFailure()
           << path << ": " << actual << " vs expected " << expected;
  }
  if (actual.type() != expected.type()) {
    return ::testing::AssertionFailure()
           << path << ": type " << actual.type_name() << " vs expected "
           << expected.type_name();
  }
  if (expected.is_object()) {
    if (actual.size() != expected.size()) {
      return ::testing::AssertionFailure()
             << path << ": keys " << actual.size() << " vs expected "
             << expected.size();
    }
    for (const auto& [key, value] : expected.items()) {
      if (!actual.contains(key)) {
        return ::testing::AssertionFailure() << path << ": missing " << key;
      }
      auto r = JsonMatches(actual.at(key), value, tol, path + "." + key);
      if (!r) return r;
    }
    return ::testing::AssertionSuccess();
  }
  if (expected.is_array()) {
    if (actual.size() != expected.size()) {
      return ::testing::AssertionFailure()
             << path << ": length " << actual.size() << " vs expected "
             << expected.size();
    }
    for (std::size_t i = 0; i < expected.size(); ++i) {
      auto r = JsonMatches(actual[i], expected[i], tol,
                           path + "[" + std::to_string(i) + "]");
      if (!r) return r;
    }
    return ::testing::AssertionSuccess();
  }
  if (actual == expected) return ::testing::AssertionSuccess();
  return ::testing::AssertionFailure()
         << path << ": " << actual << " vs expected " << expected;
}

}  // namespace conformal_sets::testing

#endif  // CONFORMAL_SETS_TESTS_JSON_MATCH_H_
