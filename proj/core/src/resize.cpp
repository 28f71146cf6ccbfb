#include "visret/resize.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace visret {

namespace {

// Floor-snap the scaled extent to a whole number of patches, never below one.
int64_t patch_count(int64_t px, double beta, bool* clamped) {
  double scaled = static_cast<double>(px) / (kPatchSize * beta);
  auto patches = static_cast<int64_t>(std::floor(scaled));
  if (patches < 1) {
    patches = 1;
    *clamped = true;
  }
  return patches;
}

}  // namespace

ResizePlan smart_resize(ImageDims dims, int64_t max_tokens) {
  if (dims.height_px <= 0 || dims.width_px <= 0) {
    throw std::invalid_argument("smart_resize: dimensions must be positive");
  }
  if (max_tokens < 1) {
    throw std::invalid_argument("smart_resize: max_tokens must be >= 1");
  }

  double area = static_cast<double>(dims.height_px) *
                static_cast<double>(dims.width_px);
  double budget_px = static_cast<double>(max_tokens) * kPatchSize * kPatchSize;

  ResizePlan plan;
  plan.beta = area > budget_px ? std::sqrt(area / budget_px) : 1.0;

  int64_t th = patch_count(dims.height_px, plan.beta, &plan.clamped);
  int64_t tw = patch_count(dims.width_px, plan.beta, &plan.clamped);

  // Snapping one side up to a full patch can overshoot the budget for
  // extreme aspect ratios; trim the larger side until the product fits.
  if (th * tw > max_tokens) {
    if (th >= tw) {
      th = std::max<int64_t>(1, max_tokens / tw);
    } else {
      tw = std::max<int64_t>(1, max_tokens / th);
    }
    plan.clamped = true;
  }

  plan.out_height = th * kPatchSize;
  plan.out_width = tw * kPatchSize;
  plan.token_count = th * tw;
  return plan;
}

}  // namespace visret
