/* Copyright 2026 the phmkit authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include "phm/common.hpp"

#include <string>

namespace phm::synth {

/// Generator for run-to-failure trajectories in the 26-column C-MAPSS text
/// layout. Sensors drift with remaining life plus engine-to-engine bias and
/// measurement noise; seven feature columns are held constant so the
/// constant-column filter has real work to do. Used when no real dataset is
/// on disk and as a small fixture factory in tests.
struct SynthConfig {
  int units = 100;
  int min_cycles = 135;
  int max_cycles = 305;
  std::uint64_t seed = 7;
};

std::string generate(const SynthConfig& config);

void write_file(const std::string& path, const SynthConfig& config);

}  // namespace phm::synth
