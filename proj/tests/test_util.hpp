#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "ppdetect/corpus.hpp"

namespace testutil {

/// Writes `content` to a fresh file under the system temp directory.
inline std::string write_temp(const std::string& stem, const std::string& content) {
  static int counter = 0;
  const std::filesystem::path dir = std::filesystem::temp_directory_path() / "ppdetect_tests";
  std::filesystem::create_directories(dir);
  const std::filesystem::path path = dir / (stem + "_" + std::to_string(counter++));
  std::ofstream out(path, std::ios::binary);
  out << content;
  return path.string();
}

inline std::string temp_path(const std::string& stem) {
  static int counter = 0;
  const std::filesystem::path dir = std::filesystem::temp_directory_path() / "ppdetect_tests";
  std::filesystem::create_directories(dir);
  return (dir / (stem + "_out_" + std::to_string(counter++))).string();
}

inline ppdetect::CommentRecord record(const std::string& report, std::int64_t seq,
                                      std::int64_t time, const std::string& user,
                                      const std::string& content, bool is_reply) {
  ppdetect::CommentRecord rec;
  rec.report_id = report;
  rec.sequence_no = seq;
  rec.post_time = time;
  rec.user_id = user;
  rec.content = content;
  rec.is_reply = is_reply;
  return rec;
}

/// Profile with the given post times; all other fields constant.
inline ppdetect::UserProfile profile_at(const std::vector<std::int64_t>& times) {
  ppdetect::UserProfile p;
  p.user_id = "u";
  for (std::size_t i = 0; i < times.size(); ++i)
    p.comments.push_back(record("r", static_cast<std::int64_t>(i), times[i], "u", "text", false));
  return p;
}

}  // namespace testutil
