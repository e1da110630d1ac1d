#include "ppdetect/features.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "ppdetect/timeutil.hpp"

namespace ppdetect {

namespace {

void require_non_empty(const UserProfile& profile) {
  if (profile.comments.empty())
    throw std::invalid_argument("profile '" + profile.user_id + "' has no comments");
}

}  // namespace

double reply_ratio(const UserProfile& profile) {
  require_non_empty(profile);
  std::size_t replies = 0;
  for (const CommentRecord& rec : profile.comments) replies += rec.is_reply ? 1 : 0;
  return static_cast<double>(replies) / static_cast<double>(profile.comments.size());
}

std::vector<Epoch> split_epochs(const UserProfile& profile) {
  require_non_empty(profile);
  std::vector<Epoch> epochs;
  Epoch current{0, 1};
  for (std::size_t i = 1; i < profile.comments.size(); ++i) {
    if (profile.comments[i].post_time - profile.comments[i - 1].post_time > kEpochGapS) {
      epochs.push_back(current);
      current.begin = i;
    }
    current.end = i + 1;
  }
  epochs.push_back(current);
  return epochs;
}

double avg_interval(const UserProfile& profile, double sentinel) {
  double sum_of_means = 0.0;
  std::size_t epochs_with_gaps = 0;
  for (const Epoch& epoch : split_epochs(profile)) {
    if (epoch.size() < 2) continue;
    std::int64_t span = 0;
    for (std::size_t i = epoch.begin + 1; i < epoch.end; ++i)
      span += profile.comments[i].post_time - profile.comments[i - 1].post_time;
    sum_of_means += static_cast<double>(span) / static_cast<double>(epoch.size() - 1);
    ++epochs_with_gaps;
  }
  if (epochs_with_gaps == 0) return sentinel;
  return sum_of_means / static_cast<double>(epochs_with_gaps);
}

int active_days(const UserProfile& profile, int utc_offset_s) {
  require_non_empty(profile);
  std::set<std::int64_t> days;
  for (const CommentRecord& rec : profile.comments)
    days.insert(day_index(rec.post_time, utc_offset_s));
  return static_cast<int>(days.size());
}

int num_reports(const UserProfile& profile) {
  require_non_empty(profile);
  std::set<std::string_view> reports;
  for (const CommentRecord& rec : profile.comments) reports.insert(rec.report_id);
  return static_cast<int>(reports.size());
}

FeatureVector extract(const UserProfile& profile, int similar_pairs, const FeatureOptions& opts) {
  FeatureVector fv;
  fv.reply_ratio = reply_ratio(profile);
  fv.avg_interval_s = avg_interval(profile, opts.interval_sentinel_s);
  fv.active_days = active_days(profile, opts.utc_offset_s);
  fv.num_reports = num_reports(profile);
  fv.similar_pairs = similar_pairs;
  return fv;
}

namespace {

std::string format_double(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(field);
      field.clear();
    } else if (c != '\r') {
      field.push_back(c);
    }
  }
  fields.push_back(field);
  return fields;
}

}  // namespace

void write_feature_file(const std::vector<LabeledVector>& rows, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  write_feature_file(rows, out);
}

void write_feature_file(const std::vector<LabeledVector>& rows, std::ostream& out) {
  out << "user_id,reply_ratio,avg_interval_s,active_days,num_reports,similar_pairs,label\n";
  for (const LabeledVector& row : rows) {
    out << row.user_id << ',' << format_double(row.features.reply_ratio) << ','
        << format_double(row.features.avg_interval_s) << ',' << row.features.active_days << ','
        << row.features.num_reports << ',' << row.features.similar_pairs << ','
        << (row.label ? to_string(*row.label) : std::string()) << '\n';
  }
}

std::vector<LabeledVector> read_feature_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::vector<LabeledVector> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> f = split_csv_line(line);
    if (line_no == 1 && !f.empty() && f[0] == "user_id") continue;  // header
    if (f.size() != 6 && f.size() != 7)
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": expected 6 or 7 comma-separated fields");
    LabeledVector row;
    row.user_id = f[0];
    try {
      row.features.reply_ratio = std::stod(f[1]);
      row.features.avg_interval_s = std::stod(f[2]);
      row.features.active_days = std::stoi(f[3]);
      row.features.num_reports = std::stoi(f[4]);
      row.features.similar_pairs = std::stoi(f[5]);
    } catch (const std::exception&) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": bad numeric field");
    }
    if (f.size() == 7 && !f[6].empty()) {
      auto label = parse_label(f[6]);
      if (!label)
        throw std::runtime_error(path + ":" + std::to_string(line_no) + ": bad label '" + f[6] +
                                 "'");
      row.label = label;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace ppdetect
