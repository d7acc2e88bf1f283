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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

namespace phm::test {

/// C-MAPSS-format text where every sensor value comes from value(unit,
/// cycle, sensor_index 0..23) over the 3 settings + 21 sensors.
inline std::string cmapss_text(const std::vector<int>& unit_lengths,
                               const std::function<Scalar(int, int, int)>& value) {
  std::ostringstream out;
  for (std::size_t u = 0; u < unit_lengths.size(); ++u) {
    for (int c = 1; c <= unit_lengths[u]; ++c) {
      out << (u + 1) << ' ' << c;
      for (int f = 0; f < 24; ++f) out << ' ' << format_double(value(static_cast<int>(u + 1), c, f));
      out << '\n';
    }
  }
  return out.str();
}

/// Real FD001 training file, if one was provided (env PHM_FD001 or a couple
/// of conventional locations). Tests against the published dataset run only
/// when it is present.
inline std::string fd001_path() {
  if (const char* env = std::getenv("PHM_FD001")) {
    if (std::filesystem::exists(env)) return env;
  }
  for (const char* candidate : {"data/train_FD001.txt", "../data/train_FD001.txt",
                                "/root/proj/data/train_FD001.txt"}) {
    if (std::filesystem::exists(candidate)) return candidate;
  }
  return {};
}

inline std::string read_all(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline std::filesystem::path temp_dir(const std::string& tag) {
  auto dir = std::filesystem::temp_directory_path() / ("phmkit_test_" + tag);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace phm::test
