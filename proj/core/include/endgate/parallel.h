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

#ifndef ENDGATE_PARALLEL_H_
#define ENDGATE_PARALLEL_H_

#include <cstddef>
#include <functional>

namespace endgate {

// Worker count used when a caller passes 0.
std::size_t DefaultJobs();

// Runs fn(i) for i in [0, n) on up to `jobs` threads. Indices are handed out
// in order; the first exception thrown by any worker is rethrown here after
// all workers stop.
void ParallelFor(std::size_t n, std::size_t jobs,
                 const std::function<void(std::size_t)>& fn);

}  // namespace endgate

#endif  // ENDGATE_PARALLEL_H_
