#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace ppdetect {

enum class Label { normal, paid };

std::string to_string(Label label);
std::optional<Label> parse_label(std::string_view text);

/// One posted comment. `post_time` is UTC epoch seconds.
struct CommentRecord {
  std::string report_id;
  std::int64_t sequence_no = 0;  // order within the report
  std::int64_t post_time = 0;
  std::string post_location;
  std::string user_id;
  std::string content;
  bool is_reply = false;
};

/// Records are kept sorted by (report_id, sequence_no).
struct Corpus {
  std::vector<CommentRecord> records;
  std::map<std::string, Label> label_map;
};

/// All comments of one user, sorted by post_time.
struct UserProfile {
  std::string user_id;
  std::vector<CommentRecord> comments;
  std::optional<Label> label;
};

struct CleaningConfig {
  int min_comments = 4;
  std::set<std::string> excluded_user_ids = {"Mobile User"};
  bool drop_anonymous = true;
  std::set<std::string> anonymous_user_ids;  // empty user_id always counts as anonymous
  bool dedup = true;
};

enum class CorpusFormat { delimited_text, jsonl };

struct IngestOptions {
  CorpusFormat format = CorpusFormat::jsonl;
  char delimiter = ',';
  /// Zone of naive timestamps, seconds east of UTC. A `# timezone: ...`
  /// header line in the file overrides this.
  int utc_offset_s = 0;
  /// Structurally malformed rows above this fraction abort the ingest.
  double max_error_ratio = 0.10;
};

struct RecordError {
  std::size_t line = 0;
  std::string message;
};

struct IngestResult {
  Corpus corpus;
  std::vector<RecordError> errors;
};

/// Reads a comment file into a sorted Corpus. Rows with bad field values
/// (e.g. an unparseable post_time) are reported in `errors` and skipped;
/// structurally broken rows count toward `max_error_ratio`.
IngestResult ingest(const std::string& path, const IngestOptions& opts = {});

/// The cleaning pipeline, applied in this order: exact-duplicate removal
/// (key: report_id, user_id, post_time, content; first occurrence kept),
/// excluded user ids, anonymous records, then users left with fewer than
/// `min_comments` records. Idempotent; the input is not modified.
Corpus clean(const Corpus& corpus, const CleaningConfig& cfg = {});

/// Partitions a cleaned corpus into per-user profiles, sorted by user_id,
/// each profile's comments sorted by post_time. Labels are attached from
/// corpus.label_map where present.
std::vector<UserProfile> group_by_user(const Corpus& corpus);

void write_corpus_jsonl(const Corpus& corpus, const std::string& path);
void write_corpus_jsonl(const Corpus& corpus, std::ostream& out);

/// Label file: one `user_id<TAB>label` per line, label in {paid, normal}.
std::map<std::string, Label> read_label_file(const std::string& path);
void write_label_file(const std::map<std::string, Label>& labels, const std::string& path);

}  // namespace ppdetect
