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

#ifndef CONFORMAL_SETS_PARALLEL_H_
#define CONFORMAL_SETS_PARALLEL_H_

#include <cstddef>
#include <functional>

namespace conformal_sets {

// Worker count used by ParallelFor. Defaults to the CONFORMAL_SETS_THREADS
// environment variable when set to a positive integer, otherwise to the
// hardware concurrency.
std::size_t ThreadCount();

// Overrides ThreadCount() for the current process; 0 restores the default.
void SetThreadCount(std::size_t threads);

// Calls body(i) for every i in [0, count), splitting the range into
// contiguous chunks across ThreadCount() workers. Callers write results into
// index-addressed slots, so the output never depends on the schedule. The
// first exception thrown by any chunk is rethrown after all workers join.
void ParallelFor(std::size_t count,
                 const std::function<void(std::size_t)>& body);

}  // namespace conformal_sets

#endif  // CONFORMAL_SETS_PARALLEL_H_
