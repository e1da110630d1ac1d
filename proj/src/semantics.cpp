#include "ppdetect/semantics.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

#include "utf8.hpp"

namespace ppdetect {

namespace {

bool is_separator(char32_t cp) {
  if (cp < 0x80) {
    return !((cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z') || (cp >= '0' && cp <= '9'));
  }
  // Common non-ASCII whitespace and punctuation, incl. the CJK ranges.
  return cp == 0x00A0 || cp == 0x00B7 || cp == 0x00AB || cp == 0x00BB ||
         (cp >= 0x2000 && cp <= 0x206F) ||  // general punctuation + spaces
         cp == 0x3000 ||                    // ideographic space
         (cp >= 0x3001 && cp <= 0x303F) ||  // CJK symbols and punctuation
         (cp >= 0xFE30 && cp <= 0xFE4F) ||  // CJK compatibility forms
         (cp >= 0xFF01 && cp <= 0xFF0F) || (cp >= 0xFF1A && cp <= 0xFF20) ||
         (cp >= 0xFF3B && cp <= 0xFF40) || (cp >= 0xFF5B && cp <= 0xFF65);
}

void append_folded(std::string& out, std::string_view src) {
  for (char c : src) out.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : c);
}

/// Maximal separator-free spans of the input, case-folded.
std::vector<std::string> split_spans(std::string_view text) {
  std::vector<std::string> spans;
  std::string current;
  std::size_t i = 0;
  while (i < text.size()) {
    const std::size_t start = i;
    const char32_t cp = utf8::decode(text, i);
    if (cp == utf8::kInvalid || is_separator(cp)) {
      if (!current.empty()) spans.push_back(std::move(current)), current.clear();
    } else {
      append_folded(current, text.substr(start, i - start));
    }
  }
  if (!current.empty()) spans.push_back(std::move(current));
  return spans;
}

/// Byte offsets of code-point starts in `span`, plus the end offset.
std::vector<std::size_t> codepoint_starts(std::string_view span) {
  std::vector<std::size_t> starts;
  std::size_t i = 0;
  while (i < span.size()) {
    starts.push_back(i);
    utf8::decode(span, i);
  }
  starts.push_back(span.size());
  return starts;
}

void segment_span_dictionary(const std::string& span, const std::set<std::string>& dict,
                             std::size_t max_word_cp, ContentWordList& out) {
  const std::vector<std::size_t> starts = codepoint_starts(span);
  const std::size_t n = starts.size() - 1;  // code points in span
  std::size_t pos = 0;
  std::string probe;
  while (pos < n) {
    std::size_t matched = 0;
    const std::size_t longest = std::min(max_word_cp, n - pos);
    for (std::size_t len = longest; len >= 1; --len) {
      probe.assign(span, starts[pos], starts[pos + len] - starts[pos]);
      if (dict.count(probe) > 0) {
        matched = len;
        break;
      }
    }
    if (matched == 0) matched = 1;  // unmatched single character
    out.emplace_back(span, starts[pos], starts[pos + matched] - starts[pos]);
    pos += matched;
  }
}

}  // namespace

ContentWordList segment(std::string_view text, const Segmenter& seg) {
  std::vector<std::string> spans = split_spans(text);
  ContentWordList words;

  if (seg.mode == Segmenter::Mode::whitespace) {
    words = std::move(spans);
  } else {
    if (seg.dictionary.empty())
      throw std::invalid_argument("dictionary mode requires a dictionary");
    std::set<std::string> dict(seg.dictionary.begin(), seg.dictionary.end());
    std::size_t max_word_cp = 1;
    for (const std::string& w : dict)
      max_word_cp = std::max(max_word_cp, codepoint_starts(w).size() - 1);
    for (const std::string& span : spans)
      segment_span_dictionary(span, dict, max_word_cp, words);
  }

  if (!seg.stop_words.empty())
    std::erase_if(words, [&](const std::string& w) { return seg.stop_words.count(w) > 0; });
  return words;
}

double pair_similarity(const ContentWordList& a, const ContentWordList& b) {
  if (a.empty() || b.empty()) return 0.0;
  ContentWordList sa = a, sb = b;
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  std::size_t common = 0, i = 0, j = 0;
  while (i < sa.size() && j < sb.size()) {
    if (sa[i] < sb[j])
      ++i;
    else if (sb[j] < sa[i])
      ++j;
    else
      ++common, ++i, ++j;
  }
  return static_cast<double>(common) / static_cast<double>(std::min(sa.size(), sb.size()));
}

bool is_similar(const ContentWordList& a, const ContentWordList& b, const SimilarityConfig& cfg) {
  return pair_similarity(a, b) >= cfg.ratio_threshold;
}

int count_similar_pairs(const UserProfile& profile, const Segmenter& seg,
                        const SimilarityConfig& cfg) {
  // Segment and sort once per comment; each pair is then a linear merge.
  std::vector<ContentWordList> lists;
  lists.reserve(profile.comments.size());
  for (const CommentRecord& rec : profile.comments) {
    ContentWordList words = segment(rec.content, seg);
    std::sort(words.begin(), words.end());
    lists.push_back(std::move(words));
  }

  int pairs = 0;
  for (std::size_t i = 0; i < lists.size(); ++i) {
    if (lists[i].empty()) continue;  // blank comments match nothing
    for (std::size_t j = i + 1; j < lists.size(); ++j) {
      if (lists[j].empty()) continue;
      const ContentWordList& a = lists[i];
      const ContentWordList& b = lists[j];
      std::size_t common = 0, x = 0, y = 0;
      while (x < a.size() && y < b.size()) {
        if (a[x] < b[y])
          ++x;
        else if (b[y] < a[x])
          ++y;
        else
          ++common, ++x, ++y;
      }
      const double ratio =
          static_cast<double>(common) / static_cast<double>(std::min(a.size(), b.size()));
      if (ratio >= cfg.ratio_threshold) ++pairs;
    }
  }
  return pairs;
}

bool semantic_flag(int similar_pairs, const SimilarityConfig& cfg) {
  return similar_pairs >= cfg.pair_flag_threshold;
}

std::set<std::string> read_stop_word_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::size_t b = line.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    std::size_t e = line.find_last_not_of(" \t");
    std::string folded;
    append_folded(folded, std::string_view(line).substr(b, e - b + 1));
    words.insert(folded);
  }
  return words;
}

std::vector<std::string> read_dictionary_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::vector<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::size_t b = line.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    std::size_t e = line.find_last_not_of(" \t");
    std::string folded;
    append_folded(folded, std::string_view(line).substr(b, e - b + 1));
    words.push_back(std::move(folded));
  }
  return words;
}

}  // namespace ppdetect
