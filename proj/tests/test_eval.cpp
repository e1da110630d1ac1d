#include <doctest.h>

#include <cmath>

#include "ppdetect/eval.hpp"
#include "ppdetect/rng.hpp"

using namespace ppdetect;

TEST_CASE("confusion counts with paid as the positive class") {
  std::map<std::string, Label> truth{{"a", Label::paid},
                                     {"b", Label::paid},
                                     {"c", Label::paid},
                                     {"d", Label::normal},
                                     {"e", Label::normal}};
  const ConfusionMatrix all_correct = confusion(truth, truth);
  CHECK(all_correct.tp == 3);
  CHECK(all_correct.fp == 0);
  CHECK(all_correct.fn == 0);
  CHECK(all_correct.tn == 2);

  std::map<std::string, Label> all_normal;
  std::map<std::string, Label> benchmark;
  for (int i = 0; i < 82; ++i) benchmark["p" + std::to_string(i)] = Label::paid;
  for (int i = 0; i < 141; ++i) benchmark["n" + std::to_string(i)] = Label::normal;
  for (const auto& [user, label] : benchmark) all_normal[user] = Label::normal;
  const ConfusionMatrix degenerate = confusion(all_normal, benchmark);
  CHECK(degenerate.tp == 0);
  CHECK(degenerate.fp == 0);
  CHECK(degenerate.fn == 82);
  CHECK(degenerate.tn == 141);
  CHECK(degenerate.total() == 223);
}

TEST_CASE("confusion requires identical user sets") {
  std::map<std::string, Label> pred{{"a", Label::paid}};
  std::map<std::string, Label> truth{{"a", Label::paid}, {"b", Label::normal}};
  CHECK_THROWS_WITH_AS(confusion(pred, truth), doctest::Contains("b"), std::invalid_argument);
}

TEST_CASE("metrics implement the four formulas exactly") {
  const Metrics five = metrics({60, 3, 22, 138});
  CHECK(five.precision == 60.0 / 63.0);
  CHECK(five.recall == 60.0 / 82.0);
  CHECK(five.f_measure ==
        2.0 * (60.0 / 63.0) * (60.0 / 82.0) / (60.0 / 63.0 + 60.0 / 82.0));
  CHECK(five.accuracy == 198.0 / 223.0);
  CHECK(five.precision_defined);
  CHECK(five.recall_defined);

  const Metrics two = metrics({2, 0, 80, 141});
  CHECK(two.precision == 1.0);
  CHECK(two.recall == 2.0 / 82.0);
  CHECK(two.accuracy == 143.0 / 223.0);

  const Metrics four = metrics({32, 33, 50, 108});
  CHECK(four.precision == 32.0 / 65.0);
  CHECK(four.recall == 32.0 / 82.0);
  CHECK(four.accuracy == 140.0 / 223.0);
}

TEST_CASE("percent rendering at two decimals") {
  CHECK(format_percent(60.0 / 63.0) == "95.24%");
  CHECK(format_percent(60.0 / 82.0) == "73.17%");
  CHECK(format_percent(metrics({60, 3, 22, 138}).f_measure) == "82.76%");
  CHECK(format_percent(198.0 / 223.0) == "88.79%");
  CHECK(format_percent(1.0) == "100.00%");
  CHECK(format_percent(metrics({2, 0, 80, 141}).f_measure) == "4.76%");
  CHECK(format_percent(32.0 / 65.0) == "49.23%");
  CHECK(format_percent(32.0 / 82.0) == "39.02%");
  CHECK(format_percent(metrics({32, 33, 50, 108}).f_measure) == "43.54%");
  CHECK(format_percent(140.0 / 223.0) == "62.78%");
  CHECK(format_percent(0.0) == "0.00%");
}

TEST_CASE("undefined precision and recall are flagged, not fatal") {
  const Metrics no_positive_predictions = metrics({0, 0, 5, 10});
  CHECK(no_positive_predictions.precision == 0.0);
  CHECK(!no_positive_predictions.precision_defined);
  CHECK(no_positive_predictions.recall_defined);
  CHECK(no_positive_predictions.f_measure == 0.0);

  const Metrics no_positive_users = metrics({0, 4, 0, 10});
  CHECK(!no_positive_users.recall_defined);
  CHECK(no_positive_users.recall == 0.0);

  CHECK_THROWS_AS(metrics({0, 0, 0, 0}), std::invalid_argument);
}

TEST_CASE("swapping predictions and truth transposes fp and fn") {
  Rng rng(64);
  for (int trial = 0; trial < 20; ++trial) {
    std::map<std::string, Label> pred, truth;
    for (int i = 0; i < 30; ++i) {
      const std::string user = "u" + std::to_string(i);
      pred[user] = rng.below(2) ? Label::paid : Label::normal;
      truth[user] = rng.below(2) ? Label::paid : Label::normal;
    }
    const ConfusionMatrix forward = confusion(pred, truth);
    const ConfusionMatrix swapped = confusion(truth, pred);
    CHECK(forward.tp == swapped.tp);
    CHECK(forward.tn == swapped.tn);
    CHECK(forward.fp == swapped.fn);
    CHECK(forward.fn == swapped.fp);
    CHECK(metrics(forward).accuracy == metrics(swapped).accuracy);
  }
}

TEST_CASE("harmonic-mean identity F(P+R) = 2PR") {
  Rng rng(128);
  for (int trial = 0; trial < 50; ++trial) {
    ConfusionMatrix m{static_cast<long>(rng.between(0, 50)), static_cast<long>(rng.between(0, 50)),
                      static_cast<long>(rng.between(0, 50)), static_cast<long>(rng.between(1, 50))};
    const Metrics k = metrics(m);
    CHECK(std::abs(k.f_measure * (k.precision + k.recall) - 2.0 * k.precision * k.recall) <=
          1e-12);
    CHECK(k.accuracy >= 0.0);
    CHECK(k.accuracy <= 1.0);
  }
}

TEST_CASE("machine-readable metrics line") {
  const ConfusionMatrix m{60, 3, 22, 138};
  CHECK(metrics_csv_line(m, metrics(m)) == "60,3,22,138,95.24,73.17,82.76,88.79");
}
