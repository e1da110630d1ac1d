#include "ppdetect/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include <json.hpp>

#include "ppdetect/timeutil.hpp"
#include "utf8.hpp"

namespace ppdetect {

using json = nlohmann::json;

std::string to_string(Label label) { return label == Label::paid ? "paid" : "normal"; }

std::optional<Label> parse_label(std::string_view text) {
  if (text == "paid") return Label::paid;
  if (text == "normal") return Label::normal;
  return std::nullopt;
}

namespace {

const char* const kFieldNames[] = {"report_id", "sequence_no", "post_time", "post_location",
                                   "user_id",   "content",     "is_reply"};
constexpr std::size_t kNumFields = 7;

std::string trim(std::string_view s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  std::size_t e = s.find_last_not_of(" \t\r");
  return b == std::string_view::npos ? std::string() : std::string(s.substr(b, e - b + 1));
}

std::optional<bool> parse_bool(std::string_view s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  return std::nullopt;
}

/// One delimited row; `line` is where it started (rows may span lines when
/// a quoted field embeds a newline).
struct Row {
  std::size_t line = 0;
  std::vector<std::string> fields;
};

// RFC-4180-style reader: fields may be quoted, quotes are escaped by
// doubling, quoted fields may contain the delimiter and newlines.
std::vector<Row> read_delimited(std::istream& in, char delim, std::size_t& line_no) {
  std::vector<Row> rows;
  Row row;
  std::string field;
  bool in_quotes = false;
  bool row_open = false;
  row.line = line_no;

  auto end_field = [&] {
    row.fields.push_back(std::move(field));
    field.clear();
  };
  auto end_row = [&] {
    end_field();
    rows.push_back(std::move(row));
    row = Row{};
    row_open = false;
  };

  char c;
  while (in.get(c)) {
    if (!row_open) {
      row.line = line_no;
      row_open = true;
    }
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line_no;
        field.push_back(c);
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == delim) {
      end_field();
    } else if (c == '\n') {
      ++line_no;
      if (!field.empty() || !row.fields.empty()) end_row();
      row_open = false;
    } else if (c != '\r') {
      field.push_back(c);
    }
  }
  if (!field.empty() || !row.fields.empty()) end_row();
  return rows;
}

/// Scans leading `#` lines for a `timezone:` directive. Returns the byte
/// offset where data starts and the line count consumed.
void read_file_header(std::istream& in, int& utc_offset_s, std::size_t& line_no) {
  while (in.peek() == '#') {
    std::string line;
    std::getline(in, line);
    ++line_no;
    std::size_t pos = line.find("timezone:");
    if (pos != std::string::npos) {
      auto offset = parse_utc_offset(trim(std::string_view(line).substr(pos + 9)));
      if (offset) utc_offset_s = *offset;
    }
  }
}

struct FieldIssue {
  std::string message;
};

std::optional<CommentRecord> record_from_fields(const std::vector<std::string>& f,
                                                const std::vector<std::size_t>& order,
                                                int utc_offset_s, std::string& err) {
  CommentRecord rec;
  for (std::size_t k = 0; k < kNumFields; ++k) {
    const std::string& v = f[order[k]];
    switch (k) {
      case 0:
        rec.report_id = v;
        break;
      case 1: {
        std::int64_t seq = 0;
        auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), seq);
        if (ec != std::errc() || p != v.data() + v.size() || seq < 0) {
          err = "bad sequence_no '" + v + "'";
          return std::nullopt;
        }
        rec.sequence_no = seq;
        break;
      }
      case 2: {
        auto t = parse_timestamp(v, utc_offset_s);
        if (!t) {
          err = "unparseable post_time '" + v + "'";
          return std::nullopt;
        }
        rec.post_time = *t;
        break;
      }
      case 3:
        rec.post_location = v;
        break;
      case 4:
        rec.user_id = v;
        break;
      case 5:
        if (!utf8::valid(v)) {
          err = "content is not valid UTF-8";
          return std::nullopt;
        }
        rec.content = v;
        break;
      case 6: {
        auto b = parse_bool(v);
        if (!b) {
          err = "bad is_reply '" + v + "'";
          return std::nullopt;
        }
        rec.is_reply = *b;
        break;
      }
    }
  }
  return rec;
}

void ingest_delimited(std::istream& in, const IngestOptions& opts, IngestResult& result,
                      std::size_t& structural_errors, std::size_t& total_rows) {
  std::size_t line_no = 1;
  int utc_offset_s = opts.utc_offset_s;
  read_file_header(in, utc_offset_s, line_no);

  std::vector<Row> rows = read_delimited(in, opts.delimiter, line_no);
  if (rows.empty()) return;

  // Header row maps column names to field slots.
  std::vector<std::size_t> order(kNumFields, kNumFields);
  const Row& header = rows.front();
  for (std::size_t k = 0; k < kNumFields; ++k) {
    for (std::size_t c = 0; c < header.fields.size(); ++c) {
      if (trim(header.fields[c]) == kFieldNames[k]) {
        order[k] = c;
        break;
      }
    }
    if (order[k] == kNumFields)
      throw std::runtime_error(std::string("missing column '") + kFieldNames[k] +
                               "' in header row");
  }

  for (std::size_t r = 1; r < rows.size(); ++r) {
    ++total_rows;
    const Row& row = rows[r];
    if (row.fields.size() != header.fields.size()) {
      ++structural_errors;
      result.errors.push_back({row.line, "expected " + std::to_string(header.fields.size()) +
                                             " fields, got " +
                                             std::to_string(row.fields.size())});
      continue;
    }
    std::string err;
    auto rec = record_from_fields(row.fields, order, utc_offset_s, err);
    if (!rec) {
      result.errors.push_back({row.line, err});
      continue;
    }
    result.corpus.records.push_back(std::move(*rec));
  }
}

void ingest_jsonl(std::istream& in, const IngestOptions& opts, IngestResult& result,
                  std::size_t& structural_errors, std::size_t& total_rows) {
  std::size_t line_no = 1;
  int utc_offset_s = opts.utc_offset_s;
  read_file_header(in, utc_offset_s, line_no);

  std::string line;
  for (; std::getline(in, line); ++line_no) {
    if (trim(line).empty()) continue;
    ++total_rows;
    json obj = json::parse(line, nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) {
      ++structural_errors;
      result.errors.push_back({line_no, "not a JSON object"});
      continue;
    }
    bool missing = false;
    for (const char* name : kFieldNames) {
      if (!obj.contains(name)) {
        ++structural_errors;
        result.errors.push_back({line_no, std::string("missing field '") + name + "'"});
        missing = true;
        break;
      }
    }
    if (missing) continue;

    CommentRecord rec;
    try {
      rec.report_id = obj["report_id"].is_string() ? obj["report_id"].get<std::string>()
                                                   : obj["report_id"].dump();
      if (!obj["sequence_no"].is_number_integer() || obj["sequence_no"].get<std::int64_t>() < 0) {
        result.errors.push_back({line_no, "bad sequence_no"});
        continue;
      }
      rec.sequence_no = obj["sequence_no"].get<std::int64_t>();
      const json& t = obj["post_time"];
      if (t.is_number_integer()) {
        rec.post_time = t.get<std::int64_t>();
      } else if (t.is_string()) {
        auto parsed = parse_timestamp(t.get<std::string>(), utc_offset_s);
        if (!parsed) {
          result.errors.push_back({line_no, "unparseable post_time '" + t.get<std::string>() + "'"});
          continue;
        }
        rec.post_time = *parsed;
      } else {
        result.errors.push_back({line_no, "post_time must be a string or integer"});
        continue;
      }
      rec.post_location = obj["post_location"].get<std::string>();
      rec.user_id = obj["user_id"].get<std::string>();
      rec.content = obj["content"].get<std::string>();
      if (!utf8::valid(rec.content)) {
        result.errors.push_back({line_no, "content is not valid UTF-8"});
        continue;
      }
      if (!obj["is_reply"].is_boolean()) {
        result.errors.push_back({line_no, "is_reply must be a boolean"});
        continue;
      }
      rec.is_reply = obj["is_reply"].get<bool>();
    } catch (const json::exception& e) {
      result.errors.push_back({line_no, e.what()});
      continue;
    }
    result.corpus.records.push_back(std::move(rec));
  }
}

void sort_records(std::vector<CommentRecord>& records) {
  std::stable_sort(records.begin(), records.end(),
                   [](const CommentRecord& a, const CommentRecord& b) {
                     return std::tie(a.report_id, a.sequence_no) <
                            std::tie(b.report_id, b.sequence_no);
                   });
}

}  // namespace

IngestResult ingest(const std::string& path, const IngestOptions& opts) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");

  IngestResult result;
  std::size_t structural_errors = 0;
  std::size_t total_rows = 0;
  if (opts.format == CorpusFormat::delimited_text)
    ingest_delimited(in, opts, result, structural_errors, total_rows);
  else
    ingest_jsonl(in, opts, result, structural_errors, total_rows);

  if (total_rows > 0 &&
      static_cast<double>(structural_errors) / static_cast<double>(total_rows) >
          opts.max_error_ratio)
    throw std::runtime_error("ingest aborted: " + std::to_string(structural_errors) + " of " +
                             std::to_string(total_rows) + " rows are malformed");

  sort_records(result.corpus.records);
  return result;
}

Corpus clean(const Corpus& corpus, const CleaningConfig& cfg) {
  if (cfg.min_comments < 1) throw std::invalid_argument("min_comments must be >= 1");

  auto is_anonymous = [&](const std::string& user_id) {
    return user_id.empty() || cfg.anonymous_user_ids.count(user_id) > 0;
  };

  Corpus out;
  out.label_map = corpus.label_map;
  out.records.reserve(corpus.records.size());

  using DedupKey = std::tuple<std::string_view, std::string_view, std::int64_t, std::string_view>;
  std::set<DedupKey> seen;
  for (const CommentRecord& rec : corpus.records) {
    if (cfg.dedup) {
      DedupKey key{rec.report_id, rec.user_id, rec.post_time, rec.content};
      if (!seen.insert(key).second) continue;
    }
    if (cfg.excluded_user_ids.count(rec.user_id) > 0) continue;
    if (cfg.drop_anonymous && is_anonymous(rec.user_id)) continue;
    out.records.push_back(rec);
  }

  std::map<std::string, int> counts;
  for (const CommentRecord& rec : out.records) ++counts[rec.user_id];
  std::erase_if(out.records, [&](const CommentRecord& rec) {
    return counts[rec.user_id] < cfg.min_comments;
  });
  return out;
}

std::vector<UserProfile> group_by_user(const Corpus& corpus) {
  std::map<std::string, UserProfile> by_user;
  for (const CommentRecord& rec : corpus.records) {
    UserProfile& profile = by_user[rec.user_id];
    profile.user_id = rec.user_id;
    profile.comments.push_back(rec);
  }
  std::vector<UserProfile> profiles;
  profiles.reserve(by_user.size());
  for (auto& [user_id, profile] : by_user) {
    std::stable_sort(
        profile.comments.begin(), profile.comments.end(),
        [](const CommentRecord& a, const CommentRecord& b) { return a.post_time < b.post_time; });
    auto lbl = corpus.label_map.find(user_id);
    if (lbl != corpus.label_map.end()) profile.label = lbl->second;
    profiles.push_back(std::move(profile));
  }
  return profiles;
}

void write_corpus_jsonl(const Corpus& corpus, std::ostream& out) {
  for (const CommentRecord& rec : corpus.records) {
    json obj{{"report_id", rec.report_id},     {"sequence_no", rec.sequence_no},
             {"post_time", rec.post_time},     {"post_location", rec.post_location},
             {"user_id", rec.user_id},         {"content", rec.content},
             {"is_reply", rec.is_reply}};
    out << obj.dump() << '\n';
  }
}

void write_corpus_jsonl(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  write_corpus_jsonl(corpus, out);
}

std::map<std::string, Label> read_label_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::map<std::string, Label> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::size_t tab = t.find('\t');
    if (tab == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": expected user_id<TAB>label");
    auto label = parse_label(trim(std::string_view(t).substr(tab + 1)));
    if (!label)
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": label must be 'paid' or 'normal'");
    labels[trim(std::string_view(t).substr(0, tab))] = *label;
  }
  return labels;
}

void write_label_file(const std::map<std::string, Label>& labels, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  for (const auto& [user_id, label] : labels) out << user_id << '\t' << to_string(label) << '\n';
}

}  // namespace ppdetect
