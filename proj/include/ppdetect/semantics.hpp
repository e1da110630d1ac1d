#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "ppdetect/corpus.hpp"

namespace ppdetect {

/// Ordered content words of one comment; stop words removed, ASCII
/// case-folded, repeats kept.
using ContentWordList = std::vector<std::string>;

struct Segmenter {
  enum class Mode {
    whitespace,  // split on whitespace and punctuation
    dictionary,  // greedy longest match against `dictionary`
  };
  Mode mode = Mode::whitespace;
  /// Required in dictionary mode. Entries are matched against case-folded
  /// text, so they should be lower case themselves.
  std::vector<std::string> dictionary;
  std::set<std::string> stop_words;
};

struct SimilarityConfig {
  double ratio_threshold = 0.8;  // common words / shorter list
  int pair_flag_threshold = 3;   // similar pairs marking a user as suspect
};

/// Tokenizes `text`. Whitespace and punctuation never produce tokens and
/// act as match boundaries in dictionary mode, where unmatched single
/// characters come through as singleton tokens.
ContentWordList segment(std::string_view text, const Segmenter& seg);

/// |multiset intersection| / min(|a|, |b|); 0 when either list is empty.
double pair_similarity(const ContentWordList& a, const ContentWordList& b);

bool is_similar(const ContentWordList& a, const ContentWordList& b,
                const SimilarityConfig& cfg = {});

/// Number of unordered comment pairs of this user whose similarity reaches
/// the threshold. Every pair is examined; similarity is not transitive.
int count_similar_pairs(const UserProfile& profile, const Segmenter& seg,
                        const SimilarityConfig& cfg = {});

/// The standalone suspicion heuristic: true once a user has accumulated
/// `pair_flag_threshold` similar pairs.
bool semantic_flag(int similar_pairs, const SimilarityConfig& cfg = {});

/// One token per line, `#` comments allowed.
std::set<std::string> read_stop_word_file(const std::string& path);

/// One word per line; entries are case-folded on load.
std::vector<std::string> read_dictionary_file(const std::string& path);

}  // namespace ppdetect
