#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <unistd.h>
#include <string>
#include <vector>

#include "iosp/numkernel/autodiff.hpp"
#include "iosp/numkernel/rng.hpp"

namespace testutil {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("iosp_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline iosp::num::Tensor random_tensor(std::vector<std::size_t> shape, iosp::num::Rng& rng,
                                       double scale = 1.0) {
  iosp::num::Tensor t(std::move(shape), 0.0);
  for (double& x : t.values()) x = rng.uniform(-scale, scale);
  return t;
}

inline std::vector<double> random_vector(std::size_t n, iosp::num::Rng& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

// |a - f| <= 1e-7 or relative error below 1e-4, coordinate-wise.
inline bool grads_agree(const iosp::num::Tensor& analytic, const iosp::num::Tensor& numeric,
                        double* worst = nullptr) {
  if (!analytic.same_shape(numeric)) return false;
  double w = 0.0;
  bool ok = true;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double a = analytic[i];
    const double f = numeric[i];
    const double diff = std::abs(a - f);
    const double rel = diff / std::max(std::abs(a), std::abs(f));
    if (diff > 1e-7) {
      w = std::max(w, rel);
      if (rel >= 1e-4) ok = false;
    }
  }
  if (worst) *worst = w;
  return ok;
}

}  // namespace testutil
