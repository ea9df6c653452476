// Copyright 2026 The rpk Authors. All Rights Reserved.
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

#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <string>
#include <unistd.h>
#include <vector>

#include "rpk/numerics/tensor.hpp"
#include "rpk/rng.hpp"

namespace rpk::testing {

// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("rpk_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline Tensor random_tensor(Rng& rng, Shape shape, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

inline std::vector<double> random_vector(Rng& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(lo, hi);
  return v;
}

// P(id > ood) + 0.5 P(id == ood) over all pairs.
inline double pairwise_auroc(const std::vector<double>& id, const std::vector<double>& ood) {
  double wins = 0;
  for (double a : id)
    for (double b : ood) wins += a > b ? 1.0 : (a == b ? 0.5 : 0.0);
  return wins / (static_cast<double>(id.size()) * static_cast<double>(ood.size()));
}

// Scan every candidate threshold; keep the largest with TPR >= 95%.
inline double scan_fpr95(const std::vector<double>& id, const std::vector<double>& ood) {
  std::vector<double> candidates = id;
  candidates.insert(candidates.end(), ood.begin(), ood.end());
  double best = -1e300;
  bool found = false;
  for (double g : candidates) {
    std::size_t accepted = 0;
    for (double v : id) accepted += v >= g;
    if (100 * accepted >= 95 * id.size() && (!found || g > best)) {
      best = g;
      found = true;
    }
  }
  std::size_t fp = 0;
  for (double v : ood) fp += v >= best;
  return static_cast<double>(fp) / static_cast<double>(ood.size());
}

}  // namespace rpk::testing
