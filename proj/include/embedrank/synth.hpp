#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "embedrank/data.hpp"
#include "embedrank/errors.hpp"
#include "embedrank/rng.hpp"

namespace embedrank {

// Synthetic stand-in for the image/text embedding source and the recognizer.
//
// Every sample starts from a latent vector z with ||z|| ~ 1. The text-side
// embedding of the correct transcription is z plus a little noise. The
// image-side embedding passes half of the coordinates through a hidden
// orthogonal mix plus a coordinate-wise squash before noise is added, so
// nearest-neighbor search in the raw space is imperfect, while a projection
// that learns to undo (or ignore) the distorted half can do strictly better.
// Incorrect hypotheses are scattered around z with a spread that grows with
// their generation rank, and recognizer confidences decay with that rank,
// with a bump for the correct hypothesis. A lognormal per-sample quality
// factor scales the image noise so that a tail of hard samples exists; those
// are the queries that pick up wrong neighbors as more hypotheses enter.
struct SynthConfig {
  int n_train = 2000;
  int n_val = 500;
  int n_test = 500;
  int k = 20;    // hypotheses per sample
  int dim = 2048;

  double map_strength = 0.7;    // 0 = image map is the identity
  double squash = 3.0;          // strength of the coordinate-wise nonlinearity
  double sigma_embed = 0.18;    // image embedding noise scale
  double sigma_quality = 0.6;   // lognormal sigma of the per-sample quality factor
  double sigma_pos = 0.03;      // correct-text embedding noise
  double sigma_distract = 0.35; // base spread of incorrect hypothesis embeddings
  double distract_ramp = 2.0;   // later hypotheses are up to (1+ramp) times noisier
  double conf_base = 0.60;      // recognizer confidence before decay/boost
  double conf_decay = 0.45;     // confidence falloff from first to last rank
  double conf_boost = 0.12;     // extra confidence for the correct hypothesis
  double conf_noise = 0.15;     // confidence jitter
  uint64_t seed = 7;
};

struct SynthDataset {
  std::vector<WordSample> train;
  std::vector<WordSample> val;
  std::vector<WordSample> test;
  // sample id -> index of the planted correct hypothesis in that sample's list
  std::map<std::string, int> oracle;
};

namespace detail {

// Random orthogonal matrix via modified Gram-Schmidt on a Gaussian matrix.
inline Matrix random_orthogonal(int n, Rng& rng) {
  Matrix m(n, n);
  for (double& x : m.data) x = rng.normal();
  for (int c = 0; c < n; ++c) {
    for (int prev = 0; prev < c; ++prev) {
      double proj = 0.0;
      for (int r = 0; r < n; ++r) proj += m(r, c) * m(r, prev);
      for (int r = 0; r < n; ++r) m(r, c) -= proj * m(r, prev);
    }
    double nrm = 0.0;
    for (int r = 0; r < n; ++r) nrm += m(r, c) * m(r, c);
    nrm = std::sqrt(nrm);
    for (int r = 0; r < n; ++r) m(r, c) /= nrm;
  }
  return m;
}

inline std::string zero_padded(const char* prefix, int value, int width) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%0*d", prefix, width, value);
  return buf;
}

}  // namespace detail

inline SynthDataset synth_generate(const SynthConfig& cfg) {
  if (cfg.dim < 2) throw ConfigError("synth: dim must be >= 2");
  if (cfg.k < 1) throw ConfigError("synth: k must be >= 1");
  if (cfg.n_train < 1 || cfg.n_val < 1 || cfg.n_test < 1) {
    throw ConfigError("synth: every split needs at least one sample");
  }
  for (double s : {cfg.sigma_embed, cfg.sigma_quality, cfg.sigma_pos, cfg.sigma_distract,
                   cfg.conf_noise}) {
    if (s < 0.0) throw ConfigError("synth: noise scales must be >= 0");
  }

  const int dim = cfg.dim;
  const int d_clean = dim / 2;          // first half is passed through unchanged
  const int d_warp = dim - d_clean;     // second half gets mixed and squashed
  const double coord_scale = 1.0 / std::sqrt(static_cast<double>(dim));

  Rng map_rng(mix_seed(cfg.seed, 0x6d6170ULL));
  const Matrix warp_mix = detail::random_orthogonal(d_warp, map_rng);

  SynthDataset out;
  int global_index = 0;

  auto squash = [&](double t) {
    if (cfg.squash <= 0.0) return t;
    const double s = cfg.squash / coord_scale;  // work on O(1)-scaled coordinates
    return std::tanh(s * t) / s;
  };

  auto generate_split = [&](std::vector<WordSample>& split, int n, const char* id_prefix,
                            uint64_t split_tag) {
    Rng rng(mix_seed(cfg.seed, split_tag));
    split.reserve(n);
    for (int i = 0; i < n; ++i, ++global_index) {
      WordSample s;
      s.id = detail::zero_padded(id_prefix, i, 5);
      s.gt_text = detail::zero_padded("w", global_index, 5);

      Vec z(dim);
      for (double& x : z) x = rng.normal() * coord_scale;

      // image-side embedding
      const double quality = std::exp(cfg.sigma_quality * rng.normal());
      const double noise_sd = cfg.sigma_embed * quality * coord_scale;
      s.phi.assign(dim, 0.0);
      for (int c = 0; c < d_clean; ++c) s.phi[c] = z[c];
      Vec warped(d_warp, 0.0);
      for (int r = 0; r < d_warp; ++r) {
        double acc = 0.0;
        for (int c = 0; c < d_warp; ++c) acc += warp_mix(r, c) * squash(z[d_clean + c]);
        warped[r] = acc;
      }
      for (int c = 0; c < d_warp; ++c) {
        s.phi[d_clean + c] =
            (1.0 - cfg.map_strength) * z[d_clean + c] + cfg.map_strength * warped[c];
      }
      for (double& x : s.phi) x += noise_sd * rng.normal();

      // text-side embedding of the correct transcription
      Vec psi_correct(dim);
      const double pos_sd = cfg.sigma_pos * coord_scale;
      for (int c = 0; c < dim; ++c) psi_correct[c] = z[c] + pos_sd * rng.normal();
      s.gt_psi = psi_correct;

      std::vector<Hypothesis> hyps;
      hyps.reserve(cfg.k);
      {
        Hypothesis h;
        h.text = s.gt_text;
        h.psi = psi_correct;  // the same text maps to the same embedding
        h.confidence = cfg.conf_base + cfg.conf_boost + cfg.conf_noise * rng.normal();
        hyps.push_back(std::move(h));
      }
      for (int j = 1; j < cfg.k; ++j) {
        Hypothesis h;
        h.text = s.gt_text + "x" + detail::zero_padded("", j, 2);
        const double ramp = cfg.k > 2 ? static_cast<double>(j - 1) / (cfg.k - 2) : 0.0;
        const double spread = cfg.sigma_distract * (1.0 + cfg.distract_ramp * ramp) * coord_scale;
        h.psi.resize(dim);
        for (int c = 0; c < dim; ++c) h.psi[c] = z[c] + spread * rng.normal();
        const double decay = cfg.k > 1 ? cfg.conf_decay * j / (cfg.k - 1) : 0.0;
        h.confidence = cfg.conf_base - decay + cfg.conf_noise * rng.normal();
        hyps.push_back(std::move(h));
      }
      for (Hypothesis& h : hyps) h.confidence = std::clamp(h.confidence, 0.0, 1.0);

      // recognizer order: descending confidence, stable so ties keep generation order
      std::vector<int> order(hyps.size());
      for (size_t idx = 0; idx < order.size(); ++idx) order[idx] = static_cast<int>(idx);
      std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return hyps[a].confidence > hyps[b].confidence;
      });
      int planted = 0;
      for (size_t pos = 0; pos < order.size(); ++pos) {
        if (order[pos] == 0) planted = static_cast<int>(pos);
        s.hyps.push_back(std::move(hyps[order[pos]]));
      }
      out.oracle[s.id] = planted;
      split.push_back(std::move(s));
    }
  };

  generate_split(out.train, cfg.n_train, "tr", 0x747261696eULL);
  generate_split(out.val, cfg.n_val, "va", 0x76616cULL);
  generate_split(out.test, cfg.n_test, "te", 0x74657374ULL);
  return out;
}

// Oracle sidecar: one "id<TAB>index" line per sample.
inline void write_oracle(const std::map<std::string, int>& oracle, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open oracle file for writing: " + path);
  for (const auto& [id, index] : oracle) out << id << '\t' << index << '\n';
  if (!out) throw IoError("failed writing oracle file: " + path);
}

inline std::map<std::string, int> load_oracle(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open oracle file: " + path);
  std::map<std::string, int> oracle;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw FormatError(path + ":" + std::to_string(line_no) + ": expected 'id<TAB>index'");
    }
    try {
      oracle[line.substr(0, tab)] = std::stoi(line.substr(tab + 1));
    } catch (const std::exception&) {
      throw FormatError(path + ":" + std::to_string(line_no) + ": bad index");
    }
  }
  return oracle;
}

}  // namespace embedrank
