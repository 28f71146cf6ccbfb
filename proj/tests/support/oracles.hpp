// Independent reference implementations the tests compare against. These are
// deliberately written differently from the library code (full sorts, no
// max-subtraction, perturb-and-reevaluate) so agreement is meaningful.
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_set>
#include <vector>

#include "visret/training.hpp"

namespace oracle {

struct Hit {
  std::string id;
  double score;
};

// Brute force: score everything, full stable sort, cut at k.
inline std::vector<Hit> top_k(const std::vector<std::string>& ids,
                              const std::vector<std::vector<float>>& rows,
                              const std::vector<float>& query, int k,
                              const std::unordered_set<std::string>& exclude = {}) {
  std::vector<Hit> all;
  for (size_t i = 0; i < ids.size(); ++i) {
    if (exclude.count(ids[i])) continue;
    double s = 0.0;
    for (size_t j = 0; j < query.size(); ++j) {
      s += static_cast<double>(query[j]) * static_cast<double>(rows[i][j]);
    }
    all.push_back({ids[i], s});
  }
  std::sort(all.begin(), all.end(), [](const Hit& a, const Hit& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
  });
  if (static_cast<int>(all.size()) > k) all.resize(static_cast<size_t>(k));
  return all;
}

// Direct softmax cross-entropy in long double, no stabilization tricks.
// Positive for row i sits at column i.
inline double softmax_ce(const Eigen::MatrixXd& logits) {
  long double total = 0.0L;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    long double denom = 0.0L;
    for (Eigen::Index j = 0; j < logits.cols(); ++j) {
      denom += expl(static_cast<long double>(logits(i, j)));
    }
    total += -logl(expl(static_cast<long double>(logits(i, i))) / denom);
  }
  return static_cast<double>(total / logits.rows());
}

// Central finite differences of the stage loss over every weight entry.
inline visret::Gradients finite_difference(const visret::TrainingBatch& batch,
                                           const visret::DualEncoderParams& params,
                                           int stage,
                                           visret::NegativeMode mode,
                                           double h = 1e-5) {
  auto eval = [&](const visret::DualEncoderParams& p) {
    return visret::loss_gradients(batch, p, stage, mode).loss;
  };
  visret::Gradients out;
  out.loss = eval(params);
  out.w_query.resizeLike(params.w_query);
  out.w_target.resizeLike(params.w_target);
  for (int which = 0; which < 2; ++which) {
    const Eigen::MatrixXd& src = which == 0 ? params.w_query : params.w_target;
    Eigen::MatrixXd& dst = which == 0 ? out.w_query : out.w_target;
    for (Eigen::Index r = 0; r < src.rows(); ++r) {
      for (Eigen::Index c = 0; c < src.cols(); ++c) {
        visret::DualEncoderParams plus = params;
        visret::DualEncoderParams minus = params;
        (which == 0 ? plus.w_query : plus.w_target)(r, c) += h;
        (which == 0 ? minus.w_query : minus.w_target)(r, c) -= h;
        dst(r, c) = (eval(plus) - eval(minus)) / (2.0 * h);
      }
    }
  }
  return out;
}

// max_{ij} |a-b| / max(|b|, floor); the floor keeps near-zero entries from
// blowing up the relative error.
inline double max_rel_err(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                          double floor = 1e-6) {
  double worst = 0.0;
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    for (Eigen::Index c = 0; c < a.cols(); ++c) {
      double denom = std::max(std::abs(b(r, c)), floor);
      worst = std::max(worst, std::abs(a(r, c) - b(r, c)) / denom);
    }
  }
  return worst;
}

}  // namespace oracle
