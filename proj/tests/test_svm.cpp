#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>

#include "ppdetect/rng.hpp"
#include "ppdetect/svm.hpp"
#include "qp_oracle.hpp"
#include "svm_checks.hpp"
#include "test_util.hpp"

using namespace ppdetect;

namespace {

LabeledVector row(const std::string& id, double f0, double f1, Label label) {
  LabeledVector r;
  r.user_id = id;
  r.features.reply_ratio = f0;
  r.features.avg_interval_s = f1;
  r.label = label;
  return r;
}

/// Random rows over the two real-valued feature slots (plus an integer
/// one when dim is 3), labeled so that both classes appear.
std::vector<LabeledVector> random_rows(Rng& rng, int n, int dim) {
  std::vector<LabeledVector> rows;
  for (int i = 0; i < n; ++i) {
    LabeledVector r;
    r.user_id = "u" + std::to_string(i);
    r.features.reply_ratio = rng.real() * 2.0 - 1.0;
    if (dim >= 2) r.features.avg_interval_s = rng.real() * 2.0 - 1.0;
    if (dim >= 3) r.features.similar_pairs = static_cast<int>(rng.between(-3, 3));
    r.label = i % 2 == 0 ? Label::paid : Label::normal;
    rows.push_back(std::move(r));
  }
  rows[rng.below(rows.size())].label = Label::paid;
  rows[rng.below(rows.size())].label = Label::normal;
  return rows;
}

std::vector<std::size_t> mask_for_dim(int dim) {
  if (dim == 1) return {0};
  if (dim == 2) return {0, 1};
  return {0, 1, 4};
}

}  // namespace

TEST_CASE("rbf kernel values") {
  const std::vector<double> x{0.0, 0.0}, z{1.0, 1.0};
  CHECK(rbf_kernel(x, x, 0.7) == 1.0);
  CHECK(rbf_kernel(x, z, 0.0) == 1.0);
  CHECK(rbf_kernel(x, z, 0.5) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  CHECK(rbf_kernel(x, z, 0.5) == doctest::Approx(0.36787944117144233).epsilon(1e-12));
  CHECK_THROWS_AS(rbf_kernel(x, std::vector<double>{1.0}, 0.5), std::invalid_argument);
}

TEST_CASE("min-max scaling maps the training range onto [0,1]") {
  std::vector<LabeledVector> data{row("a", 0.0, 5.0, Label::paid),
                                  row("b", 1.0, 5.0, Label::normal),
                                  row("c", 0.25, 5.0, Label::normal)};
  const std::vector<std::size_t> mask{0, 1};
  const ScalingParams scaling = scale_fit(data, mask);
  CHECK(scaling.min[0] == 0.0);
  CHECK(scaling.max[0] == 1.0);

  CHECK(scale_apply(data[0].features, scaling, mask)[0] == 0.0);
  CHECK(scale_apply(data[1].features, scaling, mask)[0] == 1.0);
  CHECK(scale_apply(data[2].features, scaling, mask)[0] == doctest::Approx(0.25));

  // Constant feature scales to 0 for any input value.
  CHECK(scale_apply(data[0].features, scaling, mask)[1] == 0.0);
  FeatureVector outside;
  outside.reply_ratio = 2.0;
  outside.avg_interval_s = 123.0;
  const std::vector<double> scaled = scale_apply(outside, scaling, mask);
  CHECK(scaled[0] == 2.0);  // beyond the training range, not clamped
  CHECK(scaled[1] == 0.0);
}

TEST_CASE("a separable pair trains to perfect separation") {
  std::vector<LabeledVector> data{row("p", 1.0, 0.0, Label::paid),
                                  row("n", 0.0, 1.0, Label::normal)};
  TrainConfig cfg;
  cfg.feature_mask = {0, 1};
  const SvmModel model = train(data, cfg);
  CHECK(model.converged);
  CHECK(predict(model, data[0].features).label == Label::paid);
  CHECK(predict(model, data[1].features).label == Label::normal);
  CHECK(predict(model, data[0].features).decision_value > 0.0);
  CHECK(predict(model, data[1].features).decision_value < 0.0);
}

TEST_CASE("conflicting duplicate labels stay inseparable but train fine") {
  std::vector<LabeledVector> data{row("a", 0.5, 0.5, Label::paid),
                                  row("b", 0.5, 0.5, Label::normal),
                                  row("c", 0.9, 0.1, Label::paid),
                                  row("d", 0.1, 0.9, Label::normal)};
  TrainConfig cfg;
  cfg.c = 0.1;
  cfg.feature_mask = {0, 1};
  const SvmModel model = train(data, cfg);
  int correct = 0;
  for (const LabeledVector& r : data)
    if (predict(model, r.features).label == *r.label) ++correct;
  CHECK(correct < 4);
}

TEST_CASE("training rejects bad inputs") {
  std::vector<LabeledVector> one_class{row("a", 0.0, 0.0, Label::paid),
                                       row("b", 1.0, 1.0, Label::paid)};
  CHECK_THROWS_AS(train(one_class, TrainConfig{}), std::invalid_argument);

  std::vector<LabeledVector> nonfinite{row("a", 0.0, 0.0, Label::paid),
                                       row("b", std::nan(""), 1.0, Label::normal)};
  CHECK_THROWS_AS(train(nonfinite, TrainConfig{}), std::invalid_argument);

  std::vector<LabeledVector> single{row("a", 0.0, 0.0, Label::paid)};
  CHECK_THROWS_AS(train(single, TrainConfig{}), std::invalid_argument);

  std::vector<LabeledVector> unlabeled{row("a", 0.0, 0.0, Label::paid),
                                       row("b", 1.0, 1.0, Label::normal)};
  unlabeled[1].label.reset();
  CHECK_THROWS_AS(train(unlabeled, TrainConfig{}), std::invalid_argument);

  TrainConfig bad;
  bad.feature_mask = {};
  std::vector<LabeledVector> ok{row("a", 0.0, 0.0, Label::paid), row("b", 1.0, 1.0, Label::normal)};
  CHECK_THROWS_AS(train(ok, bad), std::invalid_argument);
  bad.feature_mask = {9};
  CHECK_THROWS_AS(train(ok, bad), std::invalid_argument);
}

TEST_CASE("dual objective matches the brute-force oracle on small sets") {
  Rng rng(314159);
  for (int trial = 0; trial < 6; ++trial) {
    const int n = static_cast<int>(rng.between(4, 8));
    const int dim = static_cast<int>(rng.between(1, 3));
    std::vector<LabeledVector> data = random_rows(rng, n, dim);

    TrainConfig cfg;
    cfg.feature_mask = mask_for_dim(dim);
    cfg.c = trial % 2 == 0 ? 1.0 : 7.5;
    cfg.gamma = 0.8;
    cfg.kkt_tol = 1e-9;
    cfg.max_passes = 200000;
    const SvmModel model = train(data, cfg);

    std::vector<std::vector<double>> x;
    std::vector<int> y;
    for (const LabeledVector& r : data) {
      x.push_back(scale_apply(r.features, model.scaling, cfg.feature_mask));
      y.push_back(*r.label == Label::paid ? 1 : -1);
    }
    const qp_oracle::Solution reference = qp_oracle::solve(x, y, cfg.c, cfg.gamma);
    REQUIRE(reference.found);
    CHECK(std::abs(dual_objective(model) - reference.objective) <= 1e-6);
  }
}

TEST_CASE("KKT conditions hold on trained models") {
  Rng rng(777);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<LabeledVector> data = random_rows(rng, 40, 2);
    TrainConfig cfg;
    cfg.feature_mask = {0, 1};
    cfg.c = 2.0;
    const SvmModel model = train(data, cfg);
    CHECK(model.converged);
    const svm_checks::KktReport report = svm_checks::check_kkt(model, data);
    CHECK(report.support_vectors_matched);
    CHECK(report.max_violation <= cfg.kkt_tol + 1e-6);
    CHECK(std::abs(report.balance) <= 1e-8 * std::max(1.0, cfg.c));
    CHECK(report.max_alpha_excess <= 1e-9);
  }
}

TEST_CASE("the dual objective is non-decreasing along the optimization path") {
  Rng rng(2718);
  std::vector<LabeledVector> data = random_rows(rng, 24, 2);
  TrainConfig cfg;
  cfg.feature_mask = {0, 1};
  cfg.kkt_tol = 1e-8;
  double previous = -1e300;
  for (long passes : {1, 2, 4, 8, 16, 32, 64, 128, 256}) {
    cfg.max_passes = passes;
    const SvmModel model = train(data, cfg);
    const double objective = model.support_vectors.empty() ? 0.0 : dual_objective(model);
    CHECK(objective >= previous - 1e-9);
    previous = objective;
  }
}

TEST_CASE("training is deterministic for a fixed seed") {
  Rng rng(55);
  std::vector<LabeledVector> data = random_rows(rng, 30, 2);
  TrainConfig cfg;
  cfg.feature_mask = {0, 1};
  cfg.seed = 99;
  const SvmModel a = train(data, cfg);
  const SvmModel b = train(data, cfg);
  REQUIRE(a.support_vectors.size() == b.support_vectors.size());
  CHECK(a.bias == b.bias);
  CHECK(a.dual_coefs == b.dual_coefs);
  CHECK(a.support_vectors == b.support_vectors);
}

TEST_CASE("the trained model does not depend on row order") {
  Rng rng(808);
  std::vector<LabeledVector> data = random_rows(rng, 20, 2);
  TrainConfig cfg;
  cfg.feature_mask = {0, 1};
  cfg.kkt_tol = 1e-10;
  cfg.max_passes = 1000000;
  const SvmModel a = train(data, cfg);

  std::vector<LabeledVector> permuted = data;
  rng.shuffle(permuted);
  const SvmModel b = train(permuted, cfg);

  auto supports = [](const SvmModel& m) {
    std::vector<std::pair<std::vector<double>, double>> s;
    for (std::size_t i = 0; i < m.support_vectors.size(); ++i)
      if (std::abs(m.dual_coefs[i]) > 1e-8) s.push_back({m.support_vectors[i], m.dual_coefs[i]});
    std::sort(s.begin(), s.end());
    return s;
  };
  const auto sa = supports(a), sb = supports(b);
  REQUIRE(sa.size() == sb.size());
  for (std::size_t i = 0; i < sa.size(); ++i) {
    CHECK(sa[i].first == sb[i].first);
    CHECK(std::abs(sa[i].second - sb[i].second) <= 1e-6);
  }
  for (int probe = 0; probe < 20; ++probe) {
    FeatureVector v;
    v.reply_ratio = rng.real() * 2.0 - 1.0;
    v.avg_interval_s = rng.real() * 2.0 - 1.0;
    CHECK(std::abs(predict(a, v).decision_value - predict(b, v).decision_value) <= 1e-6);
  }
}

TEST_CASE("stratified folds balance both classes within one member") {
  Rng rng(17);
  std::vector<LabeledVector> data;
  for (int i = 0; i < 47; ++i) {
    LabeledVector r = row("u" + std::to_string(i), rng.real(), rng.real(),
                          i < 13 ? Label::paid : Label::normal);
    data.push_back(r);
  }
  const int folds = 5;
  const std::vector<int> fold_of = stratified_folds(data, folds, 3);
  std::vector<int> paid_count(folds, 0), normal_count(folds, 0);
  for (std::size_t i = 0; i < data.size(); ++i)
    (*data[i].label == Label::paid ? paid_count : normal_count)[fold_of[i]]++;
  for (int f = 0; f < folds; ++f) {
    CHECK(std::abs(paid_count[f] - paid_count[0]) <= 1);
    CHECK(std::abs(normal_count[f] - normal_count[0]) <= 1);
  }
  CHECK(stratified_folds(data, folds, 3) == fold_of);  // same seed, same split
}

TEST_CASE("cross_validate returns the single candidate and is deterministic") {
  Rng rng(23);
  std::vector<LabeledVector> data;
  for (int i = 0; i < 40; ++i) {
    const bool paid = i % 2 == 0;
    // Separable: paid cluster near (0,0), normal near (1,1), tiny jitter.
    data.push_back(row("u" + std::to_string(i), (paid ? 0.0 : 1.0) + rng.real() * 0.05,
                       (paid ? 0.0 : 1.0) + rng.real() * 0.05,
                       paid ? Label::paid : Label::normal));
  }
  TrainConfig cfg;
  cfg.feature_mask = {0, 1};
  cfg.folds = 5;
  cfg.c = 10.0;
  const CvResult result = cross_validate(data, cfg);
  REQUIRE(result.candidates.size() == 1);
  CHECK(result.best_c == 10.0);
  CHECK(result.best_gamma == cfg.gamma);
  CHECK(result.candidates[0].mean_accuracy == 1.0);  // separable

  const CvResult again = cross_validate(data, cfg);
  REQUIRE(again.candidates.size() == result.candidates.size());
  CHECK(again.candidates[0].mean_accuracy == result.candidates[0].mean_accuracy);

  SUBCASE("grid ties prefer smaller c, then smaller gamma") {
    cfg.grid = {{10.0, 0.5}, {1.0, 0.5}, {1.0, 0.25}};
    const CvResult grid_result = cross_validate(data, cfg);
    REQUIRE(grid_result.candidates.size() == 3);
    CHECK(grid_result.best_c == 1.0);       // all reach accuracy 1.0
    CHECK(grid_result.best_gamma == 0.25);
  }
}

TEST_CASE("cross_validate rejects undersized minorities") {
  std::vector<LabeledVector> data;
  for (int i = 0; i < 12; ++i)
    data.push_back(row("u" + std::to_string(i), i / 12.0, 0.0,
                       i < 3 ? Label::paid : Label::normal));
  TrainConfig cfg;
  cfg.folds = 10;  // only 3 paid rows
  CHECK_THROWS_AS(cross_validate(data, cfg), std::invalid_argument);
  cfg.folds = 20;  // more folds than rows
  CHECK_THROWS_AS(cross_validate(data, cfg), std::invalid_argument);
}

TEST_CASE("model save/load round trip preserves predictions bit for bit") {
  Rng rng(4096);
  std::vector<LabeledVector> data = random_rows(rng, 25, 3);
  TrainConfig cfg;
  cfg.feature_mask = {0, 1, 4};
  const SvmModel model = train(data, cfg);

  const std::string path = testutil::temp_path("model.svm");
  save_model(model, path);
  const SvmModel loaded = load_model(path);

  CHECK(loaded.support_vectors.size() == model.support_vectors.size());
  CHECK(loaded.dual_coefs == model.dual_coefs);
  CHECK(loaded.bias == model.bias);
  CHECK(loaded.gamma == model.gamma);
  CHECK(loaded.feature_mask == model.feature_mask);
  CHECK(loaded.converged == model.converged);

  for (int probe = 0; probe < 100; ++probe) {
    FeatureVector v;
    v.reply_ratio = rng.real() * 4.0 - 2.0;
    v.avg_interval_s = rng.real() * 4.0 - 2.0;
    v.similar_pairs = static_cast<int>(rng.between(-5, 5));
    CHECK(predict(model, v).decision_value == predict(loaded, v).decision_value);
  }
}

TEST_CASE("model loader rejects unknown versions and corrupt files") {
  CHECK_THROWS_AS(load_model(testutil::write_temp("garbage.svm", "not json")),
                  std::runtime_error);
  CHECK_THROWS_AS(
      load_model(testutil::write_temp(
          "badversion.svm", R"({"format":"ppdetect-svm","format_version":99})")),
      std::runtime_error);
  CHECK_THROWS_AS(
      load_model(testutil::write_temp("wrongformat.svm",
                                      R"({"format":"something-else","format_version":1})")),
      std::runtime_error);
  CHECK_THROWS_AS(
      load_model(testutil::write_temp(
          "inconsistent.svm",
          R"({"format":"ppdetect-svm","format_version":1,"c":1.0,"gamma":0.2,"bias":0.0,)"
          R"("converged":true,"feature_mask":[0,1],"scaling_min":[0.0],"scaling_max":[1.0],)"
          R"("support_vectors":[[0.0,1.0]],"dual_coefs":[1.0]})")),
      std::runtime_error);
}
