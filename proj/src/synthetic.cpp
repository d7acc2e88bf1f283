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
#include "phm/synthetic.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <sstream>

namespace phm::synth {

namespace {

Scalar capped(Scalar w, Scalar cap) { return w < cap ? w : cap; }

}  // namespace

std::string generate(const SynthConfig& config) {
  if (config.units < 1) throw std::invalid_argument("synth: units must be >= 1");
  if (config.min_cycles < 2 || config.max_cycles < config.min_cycles) {
    throw std::invalid_argument("synth: need 2 <= min_cycles <= max_cycles");
  }
  Rng rng(config.seed);
  std::ostringstream out;
  char buf[32];
  auto put = [&](Scalar v) {
    std::snprintf(buf, sizeof(buf), " %.4f", v);
    out << buf;
  };

  for (int unit = 1; unit <= config.units; ++unit) {
    const int span = config.max_cycles - config.min_cycles + 1;
    const int life = config.min_cycles + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(span)));
    // engine-to-engine variation on the drifting channels
    std::array<Scalar, 6> bias{};
    for (auto& b : bias) b = rng.normal();

    for (int cycle = 1; cycle <= life; ++cycle) {
      const Scalar w = static_cast<Scalar>(life - cycle);  // remaining life
      out << unit << ' ' << cycle;
      put(-0.0007 + 0.0022 * rng.normal());                                  // setting_1
      put(0.0003 * rng.normal());                                            // setting_2
      put(100.0);                                                            // setting_3 (constant)
      put(518.67);                                                           // s_1 (constant)
      put(641.8 + 8.5 * std::exp(-w / 50.0) + 0.3 * bias[0] + 0.90 * rng.normal());   // s_2
      put(1585.0 + 22.0 * std::exp(-w / 90.0) + 1.5 * bias[1] + 2.80 * rng.normal()); // s_3
      put(1398.0 + 35.0 * std::exp(-w / 70.0) + 1.2 * bias[2] + 3.60 * rng.normal()); // s_4
      put(14.62);                                                            // s_5 (constant)
      put(21.6 + 0.002 * rng.normal());                                      // s_6 (noise only)
      put(554.5 - 0.055 * capped(w, 160.0) + 2.20 * rng.normal());           // s_7
      put(2388.0 + 0.012 * (160.0 - capped(w, 160.0)) + 0.30 * rng.normal());// s_8
      put(9050.0 + 120.0 * std::exp(-w / 120.0) * (1.0 + 0.05 * bias[3]) + 12.0 * rng.normal()); // s_9
      put(1.30);                                                             // s_10 (constant)
      put(47.3 + 5.2 * (1.0 - std::exp(-(160.0 - capped(w, 160.0)) / 80.0)) + 0.50 * rng.normal()); // s_11
      put(522.0 - 0.04 * capped(w, 140.0) + 0.1 * bias[4] + 2.40 * rng.normal());     // s_12
      put(2388.0 + 0.009 * (150.0 - capped(w, 150.0)) + 0.36 * rng.normal());// s_13
      put(8130.0 + 9.5 * std::exp(-w / 100.0) + 0.8 * bias[5] + 9.00 * rng.normal()); // s_14
      put(8.4 + 0.6 * std::exp(-w / 60.0) + 0.08 * rng.normal());            // s_15
      put(0.03);                                                             // s_16 (constant)
      put(392.0 + 1.2 * rng.normal());                                       // s_17 (noise only)
      put(2388.0);                                                           // s_18 (constant)
      put(100.0);                                                            // s_19 (constant)
      put(38.9 + 0.08 * rng.normal());                                       // s_20 (noise only)
      put(23.3 + 0.05 * rng.normal());                                       // s_21 (noise only)
      out << '\n';
    }
  }
  return out.str();
}

void write_file(const std::string& path, const SynthConfig& config) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << generate(config);
}

}  // namespace phm::synth
