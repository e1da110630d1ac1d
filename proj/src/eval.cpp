#include "ppdetect/eval.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace ppdetect {

ConfusionMatrix confusion(const std::map<std::string, Label>& predictions,
                          const std::map<std::string, Label>& truth) {
  std::string missing;
  int missing_count = 0;
  auto note_missing = [&](const std::string& user, const char* where) {
    if (++missing_count <= 5) missing += "\n  " + user + " (" + where + ")";
  };
  for (const auto& [user, label] : predictions)
    if (truth.find(user) == truth.end()) note_missing(user, "no ground truth");
  for (const auto& [user, label] : truth)
    if (predictions.find(user) == predictions.end()) note_missing(user, "no prediction");
  if (missing_count > 0)
    throw std::invalid_argument("prediction and truth cover different users (" +
                                std::to_string(missing_count) + " mismatches):" + missing);

  ConfusionMatrix m;
  for (const auto& [user, predicted] : predictions) {
    const Label actual = truth.at(user);
    if (actual == Label::paid)
      (predicted == Label::paid ? m.tp : m.fn)++;
    else
      (predicted == Label::paid ? m.fp : m.tn)++;
  }
  return m;
}

Metrics metrics(const ConfusionMatrix& m) {
  if (m.total() == 0) throw std::invalid_argument("empty confusion matrix");
  Metrics k;
  if (m.tp + m.fp > 0) {
    k.precision = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp);
  } else {
    k.precision_defined = false;
  }
  if (m.tp + m.fn > 0) {
    k.recall = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn);
  } else {
    k.recall_defined = false;
  }
  if (k.precision + k.recall > 0)
    k.f_measure = 2.0 * k.precision * k.recall / (k.precision + k.recall);
  k.accuracy = static_cast<double>(m.tp + m.tn) / static_cast<double>(m.total());
  return k;
}

std::string format_percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", fraction * 100.0);
  return buf;
}

std::string metrics_csv_line(const ConfusionMatrix& m, const Metrics& k) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%ld,%ld,%ld,%ld,%.2f,%.2f,%.2f,%.2f", m.tp, m.fp, m.fn, m.tn,
                k.precision * 100.0, k.recall * 100.0, k.f_measure * 100.0, k.accuracy * 100.0);
  return buf;
}

std::string metrics_table(const ConfusionMatrix& m, const Metrics& k) {
  std::ostringstream out;
  out << "True Negative   " << m.tn << '\n'
      << "False Positive  " << m.fp << '\n'
      << "False Negative  " << m.fn << '\n'
      << "True Positive   " << m.tp << '\n'
      << "Precision       " << format_percent(k.precision)
      << (k.precision_defined ? "" : " (undefined: no positive predictions)") << '\n'
      << "Recall          " << format_percent(k.recall)
      << (k.recall_defined ? "" : " (undefined: no positive users)") << '\n'
      << "F-measure       " << format_percent(k.f_measure) << '\n'
      << "Accuracy        " << format_percent(k.accuracy) << '\n';
  return out.str();
}

}  // namespace ppdetect
