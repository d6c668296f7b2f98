#pragma once

#include <algorithm>
#include <vector>

#include "embedrank/errors.hpp"
#include "embedrank/rerank.hpp"

namespace embedrank {

// Confidence-based fusion of recognizer scores into a distance vector.
// Training-free: d'_j = d_j * (1 - alpha * c_j), so higher-confidence
// hypotheses move strictly closer while alpha = 0 is the exact identity.
struct CabConfig {
  double alpha = 0.5;  // fusion strength, in [0, 1)
  bool enabled = true;

  void validate() const {
    if (!(alpha >= 0.0 && alpha < 1.0)) {
      throw ConfigError("cab: alpha must be in [0, 1)");
    }
  }
};

struct CabStats {
  long clamped_confidences = 0;
};

inline std::vector<double> cab_fuse(const std::vector<double>& dists,
                                    const std::vector<double>& confs, const CabConfig& cfg,
                                    CabStats* stats = nullptr) {
  cfg.validate();
  if (dists.size() != confs.size()) {
    throw DimensionError("cab_fuse: distances and confidences must have equal length");
  }
  if (!cfg.enabled || cfg.alpha == 0.0) return dists;
  std::vector<double> fused(dists.size());
  for (size_t j = 0; j < dists.size(); ++j) {
    double c = confs[j];
    if (c < 0.0 || c > 1.0) {
      c = std::clamp(c, 0.0, 1.0);
      if (stats) ++stats->clamped_confidences;
    }
    fused[j] = dists[j] * (1.0 - cfg.alpha * c);
  }
  return fused;
}

// rerank_sample with the distance vector passed through cab_fuse before
// ranking. Entries keep the fused distances and the original confidences.
inline RankedList rerank_with_cab(const WordSample& s, const RerankMode& mode, int k_limit,
                                  const CabConfig& cab, RerankStats* stats = nullptr) {
  cab.validate();
  if (!cab.enabled) return rerank_sample(s, mode, k_limit, stats);
  const int k = detail::effective_k(s, k_limit, stats);
  std::vector<double> dists = detail::mode_distances(s, mode, k);
  std::vector<double> confs(static_cast<size_t>(k));
  for (int j = 0; j < k; ++j) confs[j] = s.hyps[j].confidence;
  return detail::rank_hypotheses(s, mode, cab_fuse(dists, confs, cab), k);
}

}  // namespace embedrank
