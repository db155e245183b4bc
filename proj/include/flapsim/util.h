// Copyright 2026 The flapsim Authors
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

// Small shared utilities: a portable uniform random stream and a
// deterministic parallel loop.

#pragma once

#include <cstdint>
#include <functional>
#include <random>

namespace flapsim {

// Uniform doubles in [0, 1) from std::mt19937_64, using the top 53 bits so the
// stream is identical on every standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

// Derives an independent stream seed for item `index` (splitmix64 mix).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

// Worker count: FLAPSIM_THREADS if set and positive, otherwise the hardware
// concurrency (at least 1).
int thread_count();

// Calls fn(i) for i in [0, n) on up to thread_count() threads. Each index is
// processed exactly once; callers write results by index, so the outcome does
// not depend on scheduling. The first exception thrown is rethrown.
void parallel_for(int n, const std::function<void(int)>& fn);

}  // namespace flapsim
