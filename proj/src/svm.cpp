#include "ppdetect/svm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "ppdetect/rng.hpp"

namespace ppdetect {

using json = nlohmann::json;

namespace {

constexpr double kStepEps = 1e-12;

// Kernel matrix for the training set: precomputed below this many rows,
// computed on demand above it.
constexpr std::size_t kFullCacheLimit = 2800;

void validate_mask(const std::vector<std::size_t>& mask) {
  if (mask.empty()) throw std::invalid_argument("feature_mask must not be empty");
  for (std::size_t f : mask)
    if (f >= kNumFeatures) throw std::invalid_argument("feature_mask index out of range");
}

/// State of the dual problem during optimization. Labels are +-1; f_i is
/// the bias-free decision value sum_j alpha_j y_j K_ij, and the gradient
/// statistic g_i = y_i - f_i drives both pair selection and the stopping
/// rule (max g over the up-set minus min g over the down-set <= tol).
class SmoSolver {
 public:
  SmoSolver(std::vector<std::vector<double>> x, std::vector<int> y, const TrainConfig& cfg)
      : x_(std::move(x)), y_(std::move(y)), cfg_(cfg), n_(x_.size()), rng_(cfg.seed) {
    alpha_.assign(n_, 0.0);
    f_.assign(n_, 0.0);
    if (n_ <= kFullCacheLimit) {
      cache_.assign(n_ * n_, 0.0);
      for (std::size_t i = 0; i < n_; ++i) {
        cache_[i * n_ + i] = 1.0;
        for (std::size_t j = i + 1; j < n_; ++j)
          cache_[i * n_ + j] = cache_[j * n_ + i] = rbf_kernel(x_[i], x_[j], cfg_.gamma);
      }
    }
  }

  void solve() {
    long steps = 0;
    while (true) {
      auto [i_up, m_up] = max_up();
      auto [j_low, m_low] = min_low();
      if (m_up - m_low <= cfg_.kkt_tol) {
        converged_ = true;
        break;
      }
      if (steps >= cfg_.max_passes) break;
      if (!optimize_some_pair(i_up, j_low)) break;  // numerically stuck
      ++steps;
    }
    auto [i_up, m_up] = max_up();
    auto [j_low, m_low] = min_low();
    bias_ = (m_up + m_low) / 2.0;
  }

  bool converged() const { return converged_; }
  double bias() const { return bias_; }
  const std::vector<double>& alpha() const { return alpha_; }

 private:
  bool in_up(std::size_t i) const {
    return y_[i] > 0 ? alpha_[i] < cfg_.c : alpha_[i] > 0.0;
  }
  bool in_low(std::size_t i) const {
    return y_[i] > 0 ? alpha_[i] > 0.0 : alpha_[i] < cfg_.c;
  }
  double g(std::size_t i) const { return static_cast<double>(y_[i]) - f_[i]; }

  std::pair<std::size_t, double> max_up() const {
    std::size_t best = n_;
    double value = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n_; ++i)
      if (in_up(i) && g(i) > value) value = g(i), best = i;
    return {best, value};
  }

  std::pair<std::size_t, double> min_low() const {
    std::size_t best = n_;
    double value = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n_; ++i)
      if (in_low(i) && g(i) < value) value = g(i), best = i;
    return {best, value};
  }

  double kernel(std::size_t i, std::size_t j) const {
    if (!cache_.empty()) return cache_[i * n_ + j];
    if (i == j) return 1.0;
    return rbf_kernel(x_[i], x_[j], cfg_.gamma);
  }

  /// Tries the first-order pair, then seeded random partners for the top
  /// violator, then the remaining violators in descending order.
  bool optimize_some_pair(std::size_t i_up, std::size_t j_low) {
    if (take_step(i_up, j_low)) return true;

    std::vector<std::size_t> partners;
    partners.reserve(n_);
    for (std::size_t j = 0; j < n_; ++j)
      if (j != i_up && j != j_low && in_low(j)) partners.push_back(j);
    rng_.shuffle(partners);
    for (std::size_t j : partners)
      if (take_step(i_up, j)) return true;

    std::vector<std::size_t> violators;
    for (std::size_t i = 0; i < n_; ++i)
      if (i != i_up && in_up(i)) violators.push_back(i);
    std::sort(violators.begin(), violators.end(),
              [&](std::size_t a, std::size_t b) { return g(a) > g(b); });
    for (std::size_t i : violators) {
      if (take_step(i, j_low)) return true;
      for (std::size_t j : partners)
        if (j != i && take_step(i, j)) return true;
    }
    return false;
  }

  bool take_step(std::size_t i, std::size_t j) {
    if (i == j || i >= n_ || j >= n_) return false;
    const double c = cfg_.c;
    const int s = y_[i] * y_[j];
    const double ai = alpha_[i], aj = alpha_[j];

    double lo, hi;
    if (s < 0) {
      lo = std::max(0.0, aj - ai);
      hi = std::min(c, c + aj - ai);
    } else {
      lo = std::max(0.0, ai + aj - c);
      hi = std::min(c, ai + aj);
    }
    if (hi - lo < kStepEps) return false;

    const double k_ij = kernel(i, j);
    const double eta = 2.0 - 2.0 * k_ij;  // K_ii = K_jj = 1 for RBF
    const double slope = y_[j] * (g(j) - g(i));

    double aj_new;
    if (eta > kStepEps) {
      aj_new = std::clamp(aj + slope / eta, lo, hi);
    } else {
      // Flat (duplicate points): the subproblem is linear in alpha_j, so
      // the better endpoint wins.
      auto gain = [&](double a) {
        const double q = a - aj;
        return slope * q - 0.5 * eta * q * q;
      };
      const double lo_gain = gain(lo), hi_gain = gain(hi);
      if (std::max(lo_gain, hi_gain) <= kStepEps) return false;
      aj_new = lo_gain > hi_gain ? lo : hi;
    }
    if (std::abs(aj_new - aj) < kStepEps * (aj_new + aj + kStepEps)) return false;

    double ai_new = ai + s * (aj - aj_new);
    if (ai_new < kStepEps * c) ai_new = 0.0;
    if (ai_new > c * (1.0 - kStepEps)) ai_new = c;

    const double di = (ai_new - ai) * y_[i];
    const double dj = (aj_new - aj) * y_[j];
    if (!cache_.empty()) {
      const double* row_i = &cache_[i * n_];
      const double* row_j = &cache_[j * n_];
      for (std::size_t k = 0; k < n_; ++k) f_[k] += di * row_i[k] + dj * row_j[k];
    } else {
      for (std::size_t k = 0; k < n_; ++k) f_[k] += di * kernel(i, k) + dj * kernel(j, k);
    }
    alpha_[i] = ai_new;
    alpha_[j] = aj_new;
    return true;
  }

  std::vector<std::vector<double>> x_;
  std::vector<int> y_;
  TrainConfig cfg_;
  std::size_t n_;
  Rng rng_;
  std::vector<double> alpha_;
  std::vector<double> f_;
  std::vector<double> cache_;
  double bias_ = 0.0;
  bool converged_ = false;
};

}  // namespace

ScalingParams scale_fit(const std::vector<LabeledVector>& data,
                        const std::vector<std::size_t>& mask) {
  validate_mask(mask);
  if (data.empty()) throw std::invalid_argument("scale_fit needs at least one vector");
  ScalingParams scaling;
  scaling.min.assign(mask.size(), std::numeric_limits<double>::infinity());
  scaling.max.assign(mask.size(), -std::numeric_limits<double>::infinity());
  for (const LabeledVector& row : data) {
    const auto values = row.features.as_array();
    for (std::size_t k = 0; k < mask.size(); ++k) {
      scaling.min[k] = std::min(scaling.min[k], values[mask[k]]);
      scaling.max[k] = std::max(scaling.max[k], values[mask[k]]);
    }
  }
  return scaling;
}

std::vector<double> scale_apply(const FeatureVector& v, const ScalingParams& scaling,
                                const std::vector<std::size_t>& mask) {
  const auto values = v.as_array();
  std::vector<double> out(mask.size());
  for (std::size_t k = 0; k < mask.size(); ++k) {
    const double range = scaling.max[k] - scaling.min[k];
    out[k] = range > 0.0 ? (values[mask[k]] - scaling.min[k]) / range : 0.0;
  }
  return out;
}

double rbf_kernel(std::span<const double> x, std::span<const double> z, double gamma) {
  if (x.size() != z.size())
    throw std::invalid_argument("rbf_kernel: dimension mismatch (" + std::to_string(x.size()) +
                                " vs " + std::to_string(z.size()) + ")");
  double d2 = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double d = x[k] - z[k];
    d2 += d * d;
  }
  return std::exp(-gamma * d2);
}

SvmModel train(const std::vector<LabeledVector>& data, const TrainConfig& cfg) {
  validate_mask(cfg.feature_mask);
  if (cfg.c <= 0.0 || cfg.gamma <= 0.0 || cfg.kkt_tol <= 0.0)
    throw std::invalid_argument("c, gamma and kkt_tol must be positive");
  if (data.size() < 2) throw std::invalid_argument("training needs at least two rows");

  std::vector<int> y;
  y.reserve(data.size());
  bool saw_paid = false, saw_normal = false;
  for (const LabeledVector& row : data) {
    if (!row.label) throw std::invalid_argument("unlabeled row '" + row.user_id + "' in training data");
    const auto values = row.features.as_array();
    for (std::size_t f : cfg.feature_mask)
      if (!std::isfinite(values[f]))
        throw std::invalid_argument("non-finite feature in row '" + row.user_id + "'");
    const bool paid = *row.label == Label::paid;
    (paid ? saw_paid : saw_normal) = true;
    y.push_back(paid ? +1 : -1);
  }
  if (!saw_paid || !saw_normal)
    throw std::invalid_argument("training data contains a single class");

  SvmModel model;
  model.gamma = cfg.gamma;
  model.c = cfg.c;
  model.feature_mask = cfg.feature_mask;
  model.scaling = scale_fit(data, cfg.feature_mask);

  std::vector<std::vector<double>> x;
  x.reserve(data.size());
  for (const LabeledVector& row : data)
    x.push_back(scale_apply(row.features, model.scaling, cfg.feature_mask));

  SmoSolver solver(std::move(x), std::move(y), cfg);
  solver.solve();

  model.bias = solver.bias();
  model.converged = solver.converged();
  const std::vector<double>& alpha = solver.alpha();
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (alpha[i] <= 0.0) continue;
    model.support_vectors.push_back(
        scale_apply(data[i].features, model.scaling, cfg.feature_mask));
    model.dual_coefs.push_back(alpha[i] * (*data[i].label == Label::paid ? 1.0 : -1.0));
  }
  return model;
}

double decision_value(const SvmModel& model, std::span<const double> scaled) {
  double sum = model.bias;
  for (std::size_t i = 0; i < model.support_vectors.size(); ++i)
    sum += model.dual_coefs[i] * rbf_kernel(model.support_vectors[i], scaled, model.gamma);
  return sum;
}

Prediction predict(const SvmModel& model, const FeatureVector& v) {
  const std::vector<double> scaled = scale_apply(v, model.scaling, model.feature_mask);
  const double dv = decision_value(model, scaled);
  return {dv > 0.0 ? Label::paid : Label::normal, dv};
}

double dual_objective(const SvmModel& model) {
  double sum_alpha = 0.0;
  for (double coef : model.dual_coefs) sum_alpha += std::abs(coef);
  double quad = 0.0;
  for (std::size_t i = 0; i < model.support_vectors.size(); ++i) {
    quad += model.dual_coefs[i] * model.dual_coefs[i];  // K_ii = 1
    for (std::size_t j = i + 1; j < model.support_vectors.size(); ++j)
      quad += 2.0 * model.dual_coefs[i] * model.dual_coefs[j] *
              rbf_kernel(model.support_vectors[i], model.support_vectors[j], model.gamma);
  }
  return sum_alpha - 0.5 * quad;
}

std::vector<int> stratified_folds(const std::vector<LabeledVector>& data, int folds,
                                  std::uint64_t seed) {
  if (folds < 2) throw std::invalid_argument("folds must be >= 2");
  if (data.size() < static_cast<std::size_t>(folds))
    throw std::invalid_argument("fewer rows than folds");

  std::vector<std::size_t> paid_idx, normal_idx;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!data[i].label)
      throw std::invalid_argument("unlabeled row '" + data[i].user_id + "' in training data");
    (*data[i].label == Label::paid ? paid_idx : normal_idx).push_back(i);
  }
  const std::size_t minority = std::min(paid_idx.size(), normal_idx.size());
  if (minority < static_cast<std::size_t>(folds))
    throw std::invalid_argument("minority class smaller than fold count");

  // Shuffle within each class, deal round-robin.
  Rng rng(seed);
  rng.shuffle(paid_idx);
  rng.shuffle(normal_idx);
  std::vector<int> fold_of(data.size());
  for (std::size_t k = 0; k < paid_idx.size(); ++k)
    fold_of[paid_idx[k]] = static_cast<int>(k % folds);
  for (std::size_t k = 0; k < normal_idx.size(); ++k)
    fold_of[normal_idx[k]] = static_cast<int>(k % folds);
  return fold_of;
}

CvResult cross_validate(const std::vector<LabeledVector>& data, const TrainConfig& cfg) {
  const std::vector<int> fold_of = stratified_folds(data, cfg.folds, cfg.seed);

  std::vector<std::pair<double, double>> grid = cfg.grid;
  if (grid.empty()) grid.push_back({cfg.c, cfg.gamma});

  CvResult result;
  for (const auto& [c, gamma] : grid) {
    double accuracy_sum = 0.0;
    for (int fold = 0; fold < cfg.folds; ++fold) {
      std::vector<LabeledVector> train_rows, test_rows;
      for (std::size_t i = 0; i < data.size(); ++i)
        (fold_of[i] == fold ? test_rows : train_rows).push_back(data[i]);
      TrainConfig fold_cfg = cfg;
      fold_cfg.c = c;
      fold_cfg.gamma = gamma;
      fold_cfg.seed = cfg.seed + static_cast<std::uint64_t>(fold);
      const SvmModel model = train(train_rows, fold_cfg);
      std::size_t correct = 0;
      for (const LabeledVector& row : test_rows)
        if (predict(model, row.features).label == *row.label) ++correct;
      accuracy_sum += static_cast<double>(correct) / static_cast<double>(test_rows.size());
    }
    result.candidates.push_back({c, gamma, accuracy_sum / cfg.folds});
  }

  const CvCandidate* best = &result.candidates.front();
  for (const CvCandidate& cand : result.candidates) {
    if (cand.mean_accuracy > best->mean_accuracy ||
        (cand.mean_accuracy == best->mean_accuracy &&
         (cand.c < best->c || (cand.c == best->c && cand.gamma < best->gamma))))
      best = &cand;
  }
  result.best_c = best->c;
  result.best_gamma = best->gamma;
  return result;
}

namespace {
constexpr const char* kModelFormat = "ppdetect-svm";
constexpr int kModelVersion = 1;
}  // namespace

void save_model(const SvmModel& model, const std::string& path) {
  json doc{{"format", kModelFormat},
           {"format_version", kModelVersion},
           {"c", model.c},
           {"gamma", model.gamma},
           {"bias", model.bias},
           {"converged", model.converged},
           {"feature_mask", model.feature_mask},
           {"scaling_min", model.scaling.min},
           {"scaling_max", model.scaling.max},
           {"support_vectors", model.support_vectors},
           {"dual_coefs", model.dual_coefs}};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << doc.dump(2) << '\n';
}

SvmModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded() || !doc.is_object())
    throw std::runtime_error("'" + path + "' is not a model file");
  if (doc.value("format", "") != kModelFormat)
    throw std::runtime_error("'" + path + "' is not a model file");
  if (doc.value("format_version", -1) != kModelVersion)
    throw std::runtime_error("unsupported model format version in '" + path + "'");

  SvmModel model;
  try {
    model.c = doc.at("c").get<double>();
    model.gamma = doc.at("gamma").get<double>();
    model.bias = doc.at("bias").get<double>();
    model.converged = doc.at("converged").get<bool>();
    model.feature_mask = doc.at("feature_mask").get<std::vector<std::size_t>>();
    model.scaling.min = doc.at("scaling_min").get<std::vector<double>>();
    model.scaling.max = doc.at("scaling_max").get<std::vector<double>>();
    model.support_vectors = doc.at("support_vectors").get<std::vector<std::vector<double>>>();
    model.dual_coefs = doc.at("dual_coefs").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw std::runtime_error("corrupt model file '" + path + "': " + e.what());
  }
  if (model.support_vectors.size() != model.dual_coefs.size() || model.support_vectors.empty())
    throw std::runtime_error("corrupt model file '" + path + "': inconsistent support vectors");
  const std::size_t dim = model.feature_mask.size();
  if (model.scaling.min.size() != dim || model.scaling.max.size() != dim)
    throw std::runtime_error("corrupt model file '" + path + "': inconsistent scaling");
  for (const auto& sv : model.support_vectors)
    if (sv.size() != dim)
      throw std::runtime_error("corrupt model file '" + path + "': inconsistent support vectors");
  return model;
}

}  // namespace ppdetect
