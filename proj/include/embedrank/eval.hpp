#pragma once

#include <algorithm>
#include <cctype>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "embedrank/cab.hpp"
#include "embedrank/data.hpp"
#include "embedrank/errors.hpp"
#include "embedrank/rerank.hpp"
#include "embedrank/train.hpp"

namespace embedrank {

enum class Method { kCrnnTop1, kRaw, kMlp, kEmbedNet };

inline const char* method_name(Method m) {
  switch (m) {
    case Method::kCrnnTop1: return "crnn_top1";
    case Method::kRaw: return "raw";
    case Method::kMlp: return "mlp";
    default: return "embednet";
  }
}

inline Method method_from_name(const std::string& name) {
  if (name == "crnn_top1" || name == "crnn") return Method::kCrnnTop1;
  if (name == "raw") return Method::kRaw;
  if (name == "mlp") return Method::kMlp;
  if (name == "embednet") return Method::kEmbedNet;
  throw ConfigError("unknown method '" + name + "'");
}

// Optional text normalization before comparing predictions against ground
// truth. Default is byte-exact comparison; kAsciiFold trims ASCII whitespace
// and lowercases ASCII letters, leaving all other bytes untouched.
enum class TextNorm { kNone, kAsciiFold };

inline std::string normalize_text(const std::string& s, TextNorm norm) {
  if (norm == TextNorm::kNone) return s;
  size_t begin = 0, end = s.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
  std::string out = s.substr(begin, end - begin);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Word recognition accuracy: percentage of exact prediction/ground-truth
// matches.
inline double wra(const std::vector<std::string>& predictions,
                  const std::vector<std::string>& ground_truth, TextNorm norm = TextNorm::kNone) {
  if (predictions.size() != ground_truth.size()) {
    throw DimensionError("wra: predictions and ground truth must have equal length");
  }
  if (predictions.empty()) throw DimensionError("wra: empty input");
  long correct = 0;
  for (size_t i = 0; i < predictions.size(); ++i) {
    if (normalize_text(predictions[i], norm) == normalize_text(ground_truth[i], norm)) ++correct;
  }
  return 100.0 * static_cast<double>(correct) / static_cast<double>(predictions.size());
}

struct ModelSet {
  const EmbedNetParams* embednet = nullptr;
  const MlpParams* mlp = nullptr;
};

struct WraReport {
  std::string method;  // method label, with "+cab" appended when fusion is on
  int k = 0;
  double wra = 0.0;    // percent
  long correct = 0;
  long total = 0;
  bool cab = false;
  double alpha = 0.0;
};

namespace detail {

inline RerankMode make_mode(Method method, const ModelSet& models) {
  switch (method) {
    case Method::kRaw: return RerankMode::raw();
    case Method::kMlp:
      if (!models.mlp) throw ConfigError("evaluate: mlp model required but not provided");
      return RerankMode::mlp_space(*models.mlp);
    case Method::kEmbedNet:
      if (!models.embednet) {
        throw ConfigError("evaluate: embednet model required but not provided");
      }
      return RerankMode::embednet_space(*models.embednet);
    default: throw ConfigError("evaluate: crnn_top1 does not rerank");
  }
}

inline std::string predict_one(const WordSample& s, Method method, const ModelSet& models,
                               const CabConfig& cab, int k) {
  if (method == Method::kCrnnTop1) {
    if (s.hyps.empty()) throw EmptyHypothesesError("sample '" + s.id + "' has no hypotheses");
    return s.hyps.front().text;  // recognizer order puts its best hypothesis first
  }
  return rerank_with_cab(s, make_mode(method, models), k, cab).top().text;
}

}  // namespace detail

// Evaluates one method over a split. Reranking across samples is independent,
// so with threads > 1 the split is partitioned and per-chunk match counts are
// summed; results are identical for any thread count.
inline WraReport evaluate_method(const std::vector<WordSample>& split, Method method,
                                 const ModelSet& models, const CabConfig& cab, int k,
                                 TextNorm norm = TextNorm::kNone, int threads = 1) {
  if (k < 1) throw ConfigError("evaluate: k must be >= 1");
  if (split.empty()) throw ConfigError("evaluate: empty split");
  cab.validate();
  const bool cab_on = cab.enabled && method != Method::kCrnnTop1;

  auto count_range = [&](size_t begin, size_t end) {
    long correct = 0;
    for (size_t i = begin; i < end; ++i) {
      const WordSample& s = split[i];
      const std::string pred = detail::predict_one(s, method, models, cab, k);
      if (normalize_text(pred, norm) == normalize_text(s.gt_text, norm)) ++correct;
    }
    return correct;
  };

  long correct = 0;
  const int n_threads = std::max(1, std::min<int>(threads, static_cast<int>(split.size())));
  if (n_threads == 1) {
    correct = count_range(0, split.size());
  } else {
    std::vector<long> partial(n_threads, 0);
    std::vector<std::exception_ptr> errors(n_threads);
    std::vector<std::thread> workers;
    const size_t chunk = (split.size() + n_threads - 1) / n_threads;
    for (int t = 0; t < n_threads; ++t) {
      workers.emplace_back([&, t] {
        const size_t begin = t * chunk;
        const size_t end = std::min(begin + chunk, split.size());
        try {
          if (begin < end) partial[t] = count_range(begin, end);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    for (auto& w : workers) w.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
    for (long p : partial) correct += p;
  }

  WraReport r;
  r.method = method_name(method);
  if (cab_on) r.method += "+cab";
  r.k = method == Method::kCrnnTop1 ? 1 : k;
  r.correct = correct;
  r.total = static_cast<long>(split.size());
  r.wra = 100.0 * static_cast<double>(correct) / static_cast<double>(r.total);
  r.cab = cab_on;
  r.alpha = cab_on ? cab.alpha : 0.0;
  return r;
}

struct SweepRow {
  double axis = 0.0;
  std::vector<WraReport> reports;
};

struct SweepTable {
  std::string axis;  // "k", "gamma" or "alpha"
  std::vector<SweepRow> rows;
};

struct MethodBest {
  std::string method;
  int k_high = 0;     // smallest axis value attaining the method's maximum WRA
  double wra = 0.0;
};

struct KSweepResult {
  SweepTable table;
  std::vector<MethodBest> k_high;
};

inline KSweepResult k_sweep(const std::vector<WordSample>& split,
                            const std::vector<Method>& methods, const ModelSet& models,
                            const CabConfig& cab, const std::vector<int>& k_values,
                            TextNorm norm = TextNorm::kNone, int threads = 1) {
  if (k_values.empty()) throw ConfigError("k_sweep: no k values");
  if (methods.empty()) throw ConfigError("k_sweep: no methods");
  for (size_t i = 0; i < k_values.size(); ++i) {
    if (k_values[i] < 1) throw ConfigError("k_sweep: k values must be >= 1");
    if (i > 0 && k_values[i] <= k_values[i - 1]) {
      throw ConfigError("k_sweep: k values must be strictly increasing");
    }
  }
  KSweepResult result;
  result.table.axis = "k";
  for (int k : k_values) {
    SweepRow row;
    row.axis = k;
    for (Method m : methods) {
      row.reports.push_back(evaluate_method(split, m, models, cab, k, norm, threads));
    }
    result.table.rows.push_back(std::move(row));
  }
  for (size_t mi = 0; mi < methods.size(); ++mi) {
    MethodBest best;
    best.method = result.table.rows.front().reports[mi].method;
    best.wra = -1.0;
    for (const SweepRow& row : result.table.rows) {
      if (row.reports[mi].wra > best.wra) {
        best.wra = row.reports[mi].wra;
        best.k_high = static_cast<int>(row.axis);
      }
    }
    result.k_high.push_back(std::move(best));
  }
  return result;
}

struct MarginSweepResult {
  SweepTable table;
  double best_gamma = 0.0;
  double best_wra = 0.0;
};

// Trains one projection network per margin value, always from the same seed,
// and scores validation WRA without fusion so differences are attributable to
// the margin alone.
inline MarginSweepResult margin_sweep(const std::vector<WordSample>& train,
                                      const std::vector<WordSample>& val,
                                      const std::vector<double>& gammas, const TrainConfig& base,
                                      int k) {
  if (gammas.empty()) throw ConfigError("margin_sweep: no gamma values");
  for (size_t i = 0; i < gammas.size(); ++i) {
    if (gammas[i] < 0.0) throw ConfigError("margin_sweep: gamma must be >= 0");
    if (i > 0 && gammas[i] <= gammas[i - 1]) {
      throw ConfigError("margin_sweep: gamma values must be strictly increasing");
    }
  }
  MarginSweepResult result;
  result.table.axis = "gamma";
  result.best_wra = -1.0;
  const CabConfig no_cab{0.0, false};
  for (double gamma : gammas) {
    TrainConfig cfg = base;
    cfg.gamma = gamma;
    auto [params, history] = train_embednet(train, val, cfg);
    ModelSet models;
    models.embednet = &params;
    SweepRow row;
    row.axis = gamma;
    row.reports.push_back(evaluate_method(val, Method::kEmbedNet, models, no_cab, k));
    if (row.reports.front().wra > result.best_wra) {
      result.best_wra = row.reports.front().wra;
      result.best_gamma = gamma;
    }
    result.table.rows.push_back(std::move(row));
  }
  return result;
}

struct AlphaGridResult {
  SweepTable table;
  double best_alpha = 0.0;
  double best_wra = 0.0;
};

// Grid search over fusion strengths on a validation split; ties resolve to the
// smallest alpha.
inline AlphaGridResult alpha_grid(const std::vector<WordSample>& val, Method method,
                                  const ModelSet& models, int k,
                                  const std::vector<double>& alphas,
                                  TextNorm norm = TextNorm::kNone, int threads = 1) {
  if (alphas.empty()) throw ConfigError("alpha_grid: no alpha values");
  for (size_t i = 0; i < alphas.size(); ++i) {
    if (!(alphas[i] >= 0.0 && alphas[i] < 1.0)) {
      throw ConfigError("alpha_grid: alpha must be in [0, 1)");
    }
    if (i > 0 && alphas[i] <= alphas[i - 1]) {
      throw ConfigError("alpha_grid: alpha values must be strictly increasing");
    }
  }
  AlphaGridResult result;
  result.table.axis = "alpha";
  result.best_wra = -1.0;
  for (double alpha : alphas) {
    const CabConfig cab{alpha, true};
    SweepRow row;
    row.axis = alpha;
    row.reports.push_back(evaluate_method(val, method, models, cab, k, norm, threads));
    if (row.reports.front().wra > result.best_wra) {
      result.best_wra = row.reports.front().wra;
      result.best_alpha = alpha;
    }
    result.table.rows.push_back(std::move(row));
  }
  return result;
}

}  // namespace embedrank
