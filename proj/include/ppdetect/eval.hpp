#pragma once

#include <map>
#include <string>

#include "ppdetect/corpus.hpp"

namespace ppdetect {

/// Paid poster is the positive class.
struct ConfusionMatrix {
  long tp = 0;
  long fp = 0;
  long fn = 0;
  long tn = 0;
  long total() const { return tp + fp + fn + tn; }
};

struct Metrics {
  double precision = 0.0;
  double recall = 0.0;
  double f_measure = 0.0;
  double accuracy = 0.0;
  // tp+fp = 0 (resp. tp+fn = 0) leaves the ratio undefined; it is then
  // reported as 0 with the flag cleared so batch runs stay total.
  bool precision_defined = true;
  bool recall_defined = true;
};

/// Counts agreement between predicted and benchmark classes. Both maps
/// must cover exactly the same users.
ConfusionMatrix confusion(const std::map<std::string, Label>& predictions,
                          const std::map<std::string, Label>& truth);

Metrics metrics(const ConfusionMatrix& m);

/// 0.9524 -> "95.24%".
std::string format_percent(double fraction);

/// `tp,fp,fn,tn,precision,recall,f_measure,accuracy` (percentages, 2 decimals).
std::string metrics_csv_line(const ConfusionMatrix& m, const Metrics& k);

std::string metrics_table(const ConfusionMatrix& m, const Metrics& k);

}  // namespace ppdetect
