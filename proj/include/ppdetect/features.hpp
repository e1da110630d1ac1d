#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <vector>

#include "ppdetect/corpus.hpp"

namespace ppdetect {

inline constexpr std::size_t kNumFeatures = 5;

/// Gap (seconds) above which two consecutive comments fall into different
/// activity epochs.
inline constexpr std::int64_t kEpochGapS = 86400;

/// avg_interval for users with no multi-comment epoch.
inline constexpr double kIntervalSentinelS = 86400.0;

/// Per-user classifier input. The index order is fixed and is what trained
/// models refer to in their feature masks.
struct FeatureVector {
  double reply_ratio = 0.0;    // 0
  double avg_interval_s = 0.0; // 1
  int active_days = 0;         // 2
  int num_reports = 0;         // 3
  int similar_pairs = 0;       // 4

  std::array<double, kNumFeatures> as_array() const {
    return {reply_ratio, avg_interval_s, static_cast<double>(active_days),
            static_cast<double>(num_reports), static_cast<double>(similar_pairs)};
  }
  double operator[](std::size_t i) const { return as_array()[i]; }
};

/// Half-open index range [begin, end) into a profile's comment list; every
/// consecutive gap inside an epoch is <= kEpochGapS.
struct Epoch {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
};

struct FeatureOptions {
  int utc_offset_s = 0;  // zone used to resolve calendar dates
  double interval_sentinel_s = kIntervalSentinelS;
};

/// Fraction of this user's comments that are replies.
double reply_ratio(const UserProfile& profile);

/// Greedy left-to-right partition of the (time-sorted) comments: a new
/// epoch starts whenever the gap to the previous comment exceeds 24 hours.
std::vector<Epoch> split_epochs(const UserProfile& profile);

/// Mean consecutive gap within each epoch, averaged (unweighted) over the
/// epochs that have one; `sentinel` when no epoch has two comments.
double avg_interval(const UserProfile& profile, double sentinel = kIntervalSentinelS);

/// Distinct calendar dates with at least one comment.
int active_days(const UserProfile& profile, int utc_offset_s = 0);

/// Distinct report ids commented on.
int num_reports(const UserProfile& profile);

FeatureVector extract(const UserProfile& profile, int similar_pairs,
                      const FeatureOptions& opts = {});

struct LabeledVector {
  std::string user_id;
  FeatureVector features;
  std::optional<Label> label;
};

/// Feature dump: one `user_id,reply_ratio,avg_interval_s,active_days,
/// num_reports,similar_pairs,label` line per user (label may be empty).
void write_feature_file(const std::vector<LabeledVector>& rows, const std::string& path);
void write_feature_file(const std::vector<LabeledVector>& rows, std::ostream& out);
std::vector<LabeledVector> read_feature_file(const std::string& path);

}  // namespace ppdetect
