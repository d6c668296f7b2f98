#pragma once

#include <string>
#include <vector>

#include "embedrank/data.hpp"
#include "embedrank/errors.hpp"
#include "embedrank/model.hpp"
#include "embedrank/rng.hpp"

namespace embedrank {

enum class TripletClass { kHard, kSemiHard, kEasy };

inline const char* triplet_class_name(TripletClass c) {
  switch (c) {
    case TripletClass::kHard: return "hard";
    case TripletClass::kSemiHard: return "semi_hard";
    default: return "easy";
  }
}

// Difficulty from squared anchor-positive / anchor-negative distances.
// Boundary convention: d_an == d_ap is hard (loss is exactly gamma),
// d_an == d_ap + gamma is easy (loss is exactly zero).
inline TripletClass classify_triplet(double d_ap_sq, double d_an_sq, double gamma) {
  if (d_ap_sq < 0.0 || d_an_sq < 0.0) {
    throw DomainError("classify_triplet: squared distances must be nonnegative");
  }
  if (gamma < 0.0) throw DomainError("classify_triplet: margin must be nonnegative");
  if (d_an_sq <= d_ap_sq) return TripletClass::kHard;
  if (d_an_sq < d_ap_sq + gamma) return TripletClass::kSemiHard;
  return TripletClass::kEasy;
}

// max(||a-p||^2 - ||a-n||^2 + gamma, 0)
inline double triplet_loss(const Vec& anchor, const Vec& positive, const Vec& negative,
                           double gamma) {
  const double arg =
      squared_distance(anchor, positive) - squared_distance(anchor, negative) + gamma;
  return arg > 0.0 ? arg : 0.0;
}

// One mined training triplet. The anchor is the sample's image embedding; the
// positive and negative are hypothesis embeddings addressed by index, with -1
// standing for the sample's gt_psi field.
struct Triplet {
  int sample_index = 0;
  int positive_index = 0;
  int negative_index = 0;
  TripletClass cls = TripletClass::kHard;
};

struct MiningStats {
  long hard = 0;
  long semi_hard = 0;
  long easy = 0;
  long total = 0;                // all enumerated combinations
  long skipped_no_positive = 0;  // samples without any usable positive
};

// Positive pool: hypotheses whose text equals the ground truth; if there are
// none, the gt_psi field (index -1) when present.
inline std::vector<int> positive_indices(const WordSample& s) {
  std::vector<int> pool;
  for (size_t j = 0; j < s.hyps.size(); ++j) {
    if (s.hyps[j].text == s.gt_text) pool.push_back(static_cast<int>(j));
  }
  if (pool.empty() && s.gt_psi) pool.push_back(-1);
  return pool;
}

inline std::vector<int> negative_indices(const WordSample& s) {
  std::vector<int> pool;
  for (size_t j = 0; j < s.hyps.size(); ++j) {
    if (s.hyps[j].text != s.gt_text) pool.push_back(static_cast<int>(j));
  }
  return pool;
}

inline const Vec& positive_vec(const WordSample& s, int positive_index) {
  return positive_index < 0 ? *s.gt_psi : s.hyps[positive_index].psi;
}

// Projects every sample through the current model, classifies every
// (anchor, positive, negative) combination, and keeps the hard and semi-hard
// ones; easy triplets carry no loss and are dropped. The result is shuffled
// with the given seed, so the output order is deterministic.
inline std::vector<Triplet> mine_triplets(const std::vector<WordSample>& samples,
                                          const EmbedNetParams& model, double gamma,
                                          uint64_t seed, MiningStats* stats = nullptr) {
  if (gamma < 0.0) throw DomainError("mine_triplets: margin must be nonnegative");
  MiningStats local;
  std::vector<Triplet> mined;
  for (size_t i = 0; i < samples.size(); ++i) {
    const WordSample& s = samples[i];
    const std::vector<int> positives = positive_indices(s);
    if (positives.empty()) {
      ++local.skipped_no_positive;
      continue;
    }
    const std::vector<int> negatives = negative_indices(s);
    if (negatives.empty()) continue;

    const Vec anchor = embednet_forward(model, s.phi);
    std::vector<double> d_ap;
    d_ap.reserve(positives.size());
    for (int pi : positives) {
      d_ap.push_back(squared_distance(anchor, embednet_forward(model, positive_vec(s, pi))));
    }
    for (int ni : negatives) {
      const double d_an = squared_distance(anchor, embednet_forward(model, s.hyps[ni].psi));
      for (size_t p = 0; p < positives.size(); ++p) {
        const TripletClass cls = classify_triplet(d_ap[p], d_an, gamma);
        ++local.total;
        switch (cls) {
          case TripletClass::kHard: ++local.hard; break;
          case TripletClass::kSemiHard: ++local.semi_hard; break;
          case TripletClass::kEasy: ++local.easy; break;
        }
        if (cls != TripletClass::kEasy) {
          mined.push_back(Triplet{static_cast<int>(i), positives[p], ni, cls});
        }
      }
    }
  }
  Rng rng(seed);
  rng.shuffle(mined);
  if (stats) *stats = local;
  return mined;
}

}  // namespace embedrank
