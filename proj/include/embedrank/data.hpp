#pragma once

#include <algorithm>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "embedrank/errors.hpp"
#include "embedrank/linalg.hpp"

namespace embedrank {

struct Hypothesis {
  std::string text;
  double confidence = 0.0;  // in [0, 1] after load-time clamping
  Vec psi;                  // text embedding
};

// One query word image with its recognizer hypotheses. Hypotheses are stored
// in recognizer order, i.e. descending confidence.
struct WordSample {
  std::string id;
  std::string gt_text;
  Vec phi;                      // word image embedding
  std::optional<Vec> gt_psi;    // embedding of the ground-truth text, when known
  std::vector<Hypothesis> hyps;
};

struct LoadStats {
  long clamped_confidences = 0;
};

// Dataset interchange format: one JSON object per line.
//
//   {"id":"tr00001","gt":"w00012","phi":[...],"gt_psi":[...],
//    "hyps":[{"text":"w00012","conf":0.91,"psi":[...]}, ...]}
//
// "gt_psi" is optional. Every embedding in a file must share one dimension,
// each record needs at least one hypothesis, and ids must be unique.
// Embedding values are written in shortest round-trip decimal form, so a
// write/load cycle is bit-exact.

inline void write_dataset(const std::vector<WordSample>& samples, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open dataset file for writing: " + path);
  for (const WordSample& s : samples) {
    nlohmann::json rec;
    rec["id"] = s.id;
    rec["gt"] = s.gt_text;
    rec["phi"] = s.phi;
    if (s.gt_psi) rec["gt_psi"] = *s.gt_psi;
    nlohmann::json hyps = nlohmann::json::array();
    for (const Hypothesis& h : s.hyps) {
      hyps.push_back({{"text", h.text}, {"conf", h.confidence}, {"psi", h.psi}});
    }
    rec["hyps"] = std::move(hyps);
    out << rec.dump() << '\n';
  }
  if (!out) throw IoError("failed writing dataset file: " + path);
}

namespace detail {

inline Vec parse_embedding(const nlohmann::json& j, const std::string& where) {
  if (!j.is_array()) throw FormatError(where + ": embedding is not an array");
  Vec v;
  v.reserve(j.size());
  for (const auto& x : j) {
    if (!x.is_number()) throw FormatError(where + ": embedding holds a non-numeric value");
    v.push_back(x.get<double>());
  }
  if (v.empty()) throw FormatError(where + ": empty embedding");
  if (!all_finite(v)) throw FormatError(where + ": embedding holds a non-finite value");
  return v;
}

}  // namespace detail

inline std::vector<WordSample> load_dataset(const std::string& path, LoadStats* stats = nullptr) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset file: " + path);

  std::vector<WordSample> samples;
  std::set<std::string> seen_ids;
  LoadStats local;
  size_t dim = 0;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(line_no);

    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(where + ": invalid JSON record: " + e.what());
    }

    WordSample s;
    try {
      s.id = rec.at("id").get<std::string>();
      s.gt_text = rec.at("gt").get<std::string>();
      s.phi = detail::parse_embedding(rec.at("phi"), where);
      if (rec.contains("gt_psi") && !rec["gt_psi"].is_null()) {
        s.gt_psi = detail::parse_embedding(rec["gt_psi"], where);
      }
      const auto& hyps = rec.at("hyps");
      if (!hyps.is_array() || hyps.empty()) {
        throw FormatError(where + ": record has no hypotheses");
      }
      for (const auto& jh : hyps) {
        Hypothesis h;
        h.text = jh.at("text").get<std::string>();
        h.confidence = jh.at("conf").get<double>();
        if (!std::isfinite(h.confidence)) throw FormatError(where + ": non-finite confidence");
        if (h.confidence < 0.0 || h.confidence > 1.0) {
          h.confidence = std::clamp(h.confidence, 0.0, 1.0);
          ++local.clamped_confidences;
        }
        h.psi = detail::parse_embedding(jh.at("psi"), where);
        s.hyps.push_back(std::move(h));
      }
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(where + ": malformed record: " + e.what());
    }

    if (dim == 0) dim = s.phi.size();
    auto check_dim = [&](const Vec& v, const char* what) {
      if (v.size() != dim) {
        throw FormatError(where + ": " + what + " has dimension " + std::to_string(v.size()) +
                          ", expected " + std::to_string(dim));
      }
    };
    check_dim(s.phi, "phi");
    if (s.gt_psi) check_dim(*s.gt_psi, "gt_psi");
    for (const Hypothesis& h : s.hyps) check_dim(h.psi, "hypothesis psi");

    if (!seen_ids.insert(s.id).second) {
      throw FormatError(where + ": duplicate sample id '" + s.id + "'");
    }
    samples.push_back(std::move(s));
  }
  if (stats) *stats = local;
  return samples;
}

}  // namespace embedrank
