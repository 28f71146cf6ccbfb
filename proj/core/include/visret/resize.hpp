#pragma once

#include <cstdint>

namespace visret {

inline constexpr int64_t kPatchSize = 28;
inline constexpr int64_t kDefaultMaxImageTokens = 2500;

struct ImageDims {
  int64_t height_px = 0;
  int64_t width_px = 0;
};

struct ResizePlan {
  int64_t out_height = 0;  // positive multiple of 28
  int64_t out_width = 0;   // positive multiple of 28
  double beta = 1.0;       // downscale factor applied (1.0 if within budget)
  int64_t token_count = 0; // (out_height/28) * (out_width/28), <= max_tokens
  // True when a dimension was pushed up to the 28px minimum or trimmed to
  // keep the token budget; the aspect ratio is distorted beyond the usual
  // rounding bound in that case.
  bool clamped = false;
};

// Fits an image inside a budget of max_tokens 28x28 patches while
// preserving its aspect ratio. Images already inside the budget are only
// snapped down to patch-aligned dimensions; larger images are scaled by
// beta = sqrt(W*H / (max_tokens*28*28)) before snapping. Output dimensions
// never drop below one patch, and the token budget holds for every input.
ResizePlan smart_resize(ImageDims dims, int64_t max_tokens);

}  // namespace visret
