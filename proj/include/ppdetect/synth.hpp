#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ppdetect/corpus.hpp"

namespace ppdetect {

/// Per-class marginal weights over the published feature groupings.
struct ClassMarginals {
  std::array<double, 2> reply_weights{};         // ratio <= 0.5, > 0.5
  std::array<double, 7> interval_weights{};      // [0,150) ... [750,900), >= 900 s
  std::array<double, 7> active_day_weights{};    // 1..6 days, > 6
  std::array<double, 7> report_weights{};        // 1..6 reports, > 6
  std::array<double, 7> similar_pair_weights{};  // 0..5 pairs, >= 6
};

struct ClassDistributions {
  ClassMarginals normal;
  ClassMarginals paid;
  /// Throws unless every weight vector is non-negative and sums to 1
  /// within 1e-9.
  void validate() const;
};

/// The per-class tables observed on the 552-user reference corpus.
ClassDistributions reference_distributions();

struct SynthConfig {
  long n_normal = 0;
  long n_paid = 0;
  std::uint64_t seed = 1;
  /// Tokens used for filler text; a built-in list applies when empty.
  std::vector<std::string> vocabulary;
  ClassDistributions distributions = reference_distributions();
  int max_retries = 32;
};

/// Bins drawn for one synthetic user, realized exactly by its timeline.
struct UserPlan {
  std::string user_id;
  Label label = Label::normal;
  int reply_bin = 0;
  int interval_bin = 0;
  int active_day_bin = 0;
  int report_bin = 0;
  int similar_pair_bin = 0;
};

struct SynthResult {
  Corpus corpus;
  std::vector<UserPlan> plans;
};

/// Deterministic for a fixed seed. Every generated user has at least four
/// comments and survives the default cleaning pipeline unchanged.
SynthResult generate_with_plans(const SynthConfig& cfg);
Corpus generate(const SynthConfig& cfg);

struct RoundTripMismatch {
  std::string user_id;
  std::string feature;
  int drawn_bin = 0;
  int realized_bin = 0;
};

struct RoundTripReport {
  long users_checked = 0;
  std::vector<RoundTripMismatch> mismatches;
  bool ok() const { return mismatches.empty(); }
};

/// Regenerates from cfg, runs the cleaning + feature pipeline over the
/// result and verifies that every user's realized bins equal the drawn
/// ones. Generation is constructive, so any mismatch is a bug.
RoundTripReport round_trip_check(const SynthConfig& cfg);

/// Declarative `key = value` config; see the reference file format in the
/// README (n_normal, n_paid, seed, vocabulary, <class>.<feature>_weights).
SynthConfig load_synth_config(const std::string& path);

// Bin resolution shared by the generator and its verification.
int reply_bin_of(double ratio);        // 0: <= 0.5, 1: > 0.5
int interval_bin_of(double seconds);   // 0..6
int count_bin_of(int value);           // 1..6 -> 0..5, >6 -> 6
int pair_bin_of(int pairs);            // 0..5 -> 0..5, >=6 -> 6

}  // namespace ppdetect
