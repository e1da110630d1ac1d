#pragma once

// Post-hoc verification of the KKT optimality conditions on a trained
// model, reconstructing each training row's multiplier by matching its
// scaled vector against the stored support vectors.

#include <cmath>
#include <cstddef>
#include <vector>

#include "ppdetect/svm.hpp"

namespace svm_checks {

struct KktReport {
  double max_violation = 0.0;   // worst slack in the three per-point conditions
  double balance = 0.0;         // sum alpha_i y_i
  double max_alpha_excess = 0.0;
  bool support_vectors_matched = true;
};

inline KktReport check_kkt(const ppdetect::SvmModel& model,
                           const std::vector<ppdetect::LabeledVector>& rows) {
  using namespace ppdetect;
  KktReport report;
  std::vector<bool> consumed(model.support_vectors.size(), false);
  const double c = model.c;

  for (const LabeledVector& row : rows) {
    const std::vector<double> scaled = scale_apply(row.features, model.scaling, model.feature_mask);
    const double y = *row.label == Label::paid ? 1.0 : -1.0;

    double alpha = 0.0;
    for (std::size_t s = 0; s < model.support_vectors.size(); ++s) {
      if (consumed[s] || model.support_vectors[s] != scaled) continue;
      consumed[s] = true;
      alpha = model.dual_coefs[s] * y;  // coef = alpha * y
      break;
    }

    report.balance += alpha * y;
    report.max_alpha_excess =
        std::max(report.max_alpha_excess, std::max(-alpha, alpha - c));

    const double margin = y * decision_value(model, scaled);
    double violation = 0.0;
    if (alpha <= 1e-12 * c)
      violation = 1.0 - margin;  // alpha = 0: margin >= 1
    else if (alpha >= c * (1.0 - 1e-12))
      violation = margin - 1.0;  // alpha = C: margin <= 1
    else
      violation = std::abs(margin - 1.0);  // free: margin = 1
    report.max_violation = std::max(report.max_violation, violation);
  }

  for (bool used : consumed) report.support_vectors_matched &= used;
  return report;
}

}  // namespace svm_checks
