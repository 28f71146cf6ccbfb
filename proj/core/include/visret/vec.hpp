#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace visret {

// Vectors are stored as 32-bit floats; all reductions accumulate in 64-bit
// so scores are identical across platforms.

inline double dot(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size())
    throw std::invalid_argument("dot: dimension mismatch");
  double acc = 0.0;
  for (size_t i = 0; i < a.size(); ++i)
    acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return acc;
}

inline double l2_norm(std::span<const float> v) {
  double acc = 0.0;
  for (float x : v) acc += static_cast<double>(x) * static_cast<double>(x);
  return std::sqrt(acc);
}

inline double dot(const float* a, const float* b, size_t n) {
  return dot(std::span<const float>(a, n), std::span<const float>(b, n));
}

inline double l2_norm(const float* v, size_t n) {
  return l2_norm(std::span<const float>(v, n));
}

inline bool is_unit_norm(std::span<const float> v, double tol = 1e-6) {
  return std::fabs(l2_norm(v) - 1.0) <= tol;
}

inline void l2_normalize(std::vector<float>& v) {
  double n = l2_norm(v);
  if (n == 0.0) throw std::invalid_argument("cannot normalize a zero vector");
  for (float& x : v) x = static_cast<float>(static_cast<double>(x) / n);
}

inline std::vector<float> normalized(std::vector<float> v) {
  l2_normalize(v);
  return v;
}

inline bool all_finite(std::span<const float> v) {
  for (float x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace visret
