#pragma once

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

#include "embedrank/data.hpp"
#include "embedrank/errors.hpp"
#include "embedrank/model.hpp"

namespace embedrank {

// Space the reported distances were computed in.
enum class RerankSpace { kRaw, kEmbedNet, kMlp };

inline const char* rerank_space_name(RerankSpace s) {
  switch (s) {
    case RerankSpace::kRaw: return "raw";
    case RerankSpace::kEmbedNet: return "embednet";
    default: return "mlp";
  }
}

struct RankedEntry {
  int hyp_index = 0;  // position in the recognizer's hypothesis list
  std::string text;
  double distance = 0.0;
  double confidence = 0.0;
};

// Hypotheses sorted by ascending distance; ties keep recognizer order, so the
// entries are always a permutation of 0..k_used-1 and entries[0] is the
// prediction.
struct RankedList {
  std::string sample_id;
  RerankSpace space = RerankSpace::kRaw;
  int k_used = 0;
  std::vector<RankedEntry> entries;

  const RankedEntry& top() const {
    if (entries.empty()) throw EmptyHypothesesError("ranked list is empty");
    return entries.front();
  }
};

// Euclidean (non-squared) distance from the query to each candidate,
// candidate order preserved.
inline std::vector<double> distances(const Vec& query, const std::vector<Vec>& candidates) {
  std::vector<double> out;
  out.reserve(candidates.size());
  for (const Vec& c : candidates) out.push_back(distance(query, c));
  return out;
}

inline RankedList rank(const std::vector<double>& dists, const std::vector<std::string>& texts,
                       const std::vector<double>& confs) {
  if (dists.empty()) throw EmptyHypothesesError("rank: no hypotheses");
  if (dists.size() != texts.size() || dists.size() != confs.size()) {
    throw DimensionError("rank: distances, texts and confidences must have equal length");
  }
  std::vector<int> order(dists.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return dists[a] < dists[b]; });
  RankedList out;
  out.k_used = static_cast<int>(dists.size());
  out.entries.reserve(dists.size());
  for (int idx : order) {
    out.entries.push_back(RankedEntry{idx, texts[idx], dists[idx], confs[idx]});
  }
  return out;
}

struct RerankMode {
  RerankSpace space = RerankSpace::kRaw;
  const EmbedNetParams* embednet = nullptr;
  const MlpParams* mlp = nullptr;

  static RerankMode raw() { return RerankMode{}; }
  static RerankMode embednet_space(const EmbedNetParams& m) {
    return RerankMode{RerankSpace::kEmbedNet, &m, nullptr};
  }
  static RerankMode mlp_space(const MlpParams& m) {
    return RerankMode{RerankSpace::kMlp, nullptr, &m};
  }
};

struct RerankStats {
  long clamped_k = 0;  // requests for more hypotheses than a sample has
};

namespace detail {

inline int effective_k(const WordSample& s, int k_limit, RerankStats* stats) {
  if (k_limit < 1) throw DomainError("k_limit must be >= 1");
  if (s.hyps.empty()) throw EmptyHypothesesError("sample '" + s.id + "' has no hypotheses");
  if (k_limit > static_cast<int>(s.hyps.size())) {
    if (stats) ++stats->clamped_k;
    return static_cast<int>(s.hyps.size());
  }
  return k_limit;
}

// Distances from the query to the first k hypotheses, in the mode's space.
inline std::vector<double> mode_distances(const WordSample& s, const RerankMode& mode, int k) {
  std::vector<double> d(static_cast<size_t>(k));
  switch (mode.space) {
    case RerankSpace::kRaw: {
      for (int j = 0; j < k; ++j) d[j] = distance(s.phi, s.hyps[j].psi);
      break;
    }
    case RerankSpace::kEmbedNet: {
      if (!mode.embednet) throw ConfigError("embednet reranking needs a model");
      const Vec query = embednet_forward(*mode.embednet, s.phi);
      for (int j = 0; j < k; ++j) {
        d[j] = distance(query, embednet_forward(*mode.embednet, s.hyps[j].psi));
      }
      break;
    }
    case RerankSpace::kMlp: {
      if (!mode.mlp) throw ConfigError("mlp reranking needs a model");
      const Vec query = mlp_forward(*mode.mlp, s.phi);
      for (int j = 0; j < k; ++j) d[j] = distance(query, s.hyps[j].psi);
      break;
    }
  }
  return d;
}

inline RankedList rank_hypotheses(const WordSample& s, const RerankMode& mode,
                                  const std::vector<double>& dists, int k) {
  std::vector<std::string> texts(static_cast<size_t>(k));
  std::vector<double> confs(static_cast<size_t>(k));
  for (int j = 0; j < k; ++j) {
    texts[j] = s.hyps[j].text;
    confs[j] = s.hyps[j].confidence;
  }
  RankedList out = rank(dists, texts, confs);
  out.sample_id = s.id;
  out.space = mode.space;
  return out;
}

}  // namespace detail

// Ranks the first k_limit hypotheses of one sample by embedding distance.
// Raw mode measures distances between the stored embeddings; embednet mode
// projects the query and the candidates first; mlp mode projects only the
// query. A k_limit beyond the hypothesis count clamps (counted, not an error).
inline RankedList rerank_sample(const WordSample& s, const RerankMode& mode, int k_limit,
                                RerankStats* stats = nullptr) {
  const int k = detail::effective_k(s, k_limit, stats);
  return detail::rank_hypotheses(s, mode, detail::mode_distances(s, mode, k), k);
}

}  // namespace embedrank
