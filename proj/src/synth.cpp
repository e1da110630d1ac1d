#include "ppdetect/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "ppdetect/features.hpp"
#include "ppdetect/kvconfig.hpp"
#include "ppdetect/rng.hpp"
#include "ppdetect/semantics.hpp"

namespace ppdetect {

int reply_bin_of(double ratio) { return ratio <= 0.5 ? 0 : 1; }

int interval_bin_of(double seconds) {
  if (seconds >= 900.0) return 6;
  return static_cast<int>(seconds / 150.0);
}

int count_bin_of(int value) { return value > 6 ? 6 : value - 1; }

int pair_bin_of(int pairs) { return pairs >= 6 ? 6 : pairs; }

ClassDistributions reference_distributions() {
  ClassDistributions d;
  d.normal.reply_weights = {0.2677, 0.7323};
  d.paid.reply_weights = {0.8429, 0.1571};
  d.normal.interval_weights = {0.2291, 0.3394, 0.2067, 0.0916, 0.0783, 0.0252, 0.0297};
  d.paid.interval_weights = {0.5000, 0.2857, 0.1428, 0.0429, 0.0000, 0.0143, 0.0143};
  d.normal.active_day_weights = {0.5633, 0.2191, 0.1195, 0.0619, 0.0252, 0.0066, 0.0044};
  d.paid.active_day_weights = {0.6143, 0.2571, 0.1143, 0.0143, 0.0000, 0.0000, 0.0000};
  d.normal.report_weights = {0.4425, 0.2522, 0.1593, 0.0863, 0.0332, 0.0177, 0.0088};
  d.paid.report_weights = {0.4429, 0.2857, 0.1285, 0.0714, 0.0429, 0.0143, 0.0143};
  d.normal.similar_pair_weights = {0.7965, 0.0841, 0.0177, 0.0420, 0.0155, 0.0022, 0.0420};
  d.paid.similar_pair_weights = {0.0571, 0.0429, 0.0286, 0.0571, 0.0286, 0.0000, 0.7857};
  return d;
}

namespace {

void validate_weights(std::span<const double> w, const char* name) {
  double sum = 0.0;
  for (double v : w) {
    if (v < 0.0 || !std::isfinite(v))
      throw std::invalid_argument(std::string(name) + ": negative or non-finite weight");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument(std::string(name) + ": weights sum to " + std::to_string(sum) +
                                ", expected 1");
}

const std::vector<std::string>& default_vocabulary() {
  static const std::vector<std::string> kWords = {
      "brand", "promo",  "deal",  "launch", "event", "click", "link",  "win",
      "free",  "sale",   "team",  "play",   "game",  "phone", "app",   "news",
      "story", "host",   "show",  "fans",   "price", "gift",  "code",  "fast",
      "best",  "top",    "hot",   "new",    "big",   "real",  "cool",  "fun",
      "look",  "share",  "like",  "good",   "wait",  "time",  "day",   "week"};
  return kWords;
}

const std::vector<std::string>& location_pool() {
  static const std::vector<std::string> kLocations = {
      "guangdong", "beijing", "jiangsu", "zhejiang", "shanghai", "sichuan", ""};
  return kLocations;
}

constexpr int kReportPoolSize = 22;
constexpr std::int64_t kDayS = 86400;
// Longest span an epoch may occupy so that it stays inside one calendar
// day and clear of the next epoch two days later.
constexpr std::int64_t kMaxEpochSpanS = 82800;

std::string report_name(int k) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "r%02d", k + 1);
  return buf;
}

std::string user_name(long k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "u%06ld", k + 1);
  return buf;
}

const ClassMarginals& marginals_of(const ClassDistributions& d, Label label) {
  return label == Label::paid ? d.paid : d.normal;
}

struct UserDraw {
  UserPlan plan;
  int days = 0;
  int reports = 0;
  int pairs = 0;
  std::int64_t gap_s = 0;
};

UserDraw draw_user(const ClassMarginals& m, Rng& rng) {
  UserDraw d;
  d.plan.reply_bin = static_cast<int>(rng.weighted(m.reply_weights));
  d.plan.interval_bin = static_cast<int>(rng.weighted(m.interval_weights));
  d.plan.active_day_bin = static_cast<int>(rng.weighted(m.active_day_weights));
  d.plan.report_bin = static_cast<int>(rng.weighted(m.report_weights));
  d.plan.similar_pair_bin = static_cast<int>(rng.weighted(m.similar_pair_weights));

  d.days = d.plan.active_day_bin < 6 ? d.plan.active_day_bin + 1
                                     : static_cast<int>(rng.between(7, 12));
  d.reports = d.plan.report_bin < 6 ? d.plan.report_bin + 1
                                    : static_cast<int>(rng.between(7, 12));
  d.pairs = d.plan.similar_pair_bin < 6 ? d.plan.similar_pair_bin
                                        : static_cast<int>(rng.between(6, 12));
  d.gap_s = d.plan.interval_bin < 6
                ? rng.between(std::max<std::int64_t>(150 * d.plan.interval_bin, 1),
                              150 * (d.plan.interval_bin + 1) - 1)
                : rng.between(900, 3600);
  return d;
}

/// Emits all comments of one user into `records`. The timeline realizes
/// the drawn bins exactly: every epoch sits alone on its calendar day
/// (days are two apart so inter-epoch gaps exceed 24h), all intra-epoch
/// gaps equal the drawn value, and similar comments come in groups whose
/// token overlap is exactly 8 of 10 words.
void emit_user(const UserDraw& draw, const std::string& user_id,
               const std::vector<std::string>& vocab, Rng& rng,
               std::vector<CommentRecord>& records) {
  // Similar pairs decompose into triples (3 pairs each) and pairs.
  const int triples = draw.pairs / 3;
  const int duos = draw.pairs % 3;
  const int similar_comments = 3 * triples + 2 * duos;

  long n = std::max({4, draw.days, draw.reports, similar_comments});
  if (n == draw.days) ++n;  // at least one epoch with a measurable gap

  // Comment counts per active day: everyone gets one, the rest go round
  // robin up to the per-day capacity.
  const long capacity = 1 + kMaxEpochSpanS / draw.gap_s;
  std::vector<long> per_day(draw.days, 1);
  long remaining = n - draw.days;
  for (long k = 0; remaining > 0; k = (k + 1) % draw.days) {
    if (per_day[k] < capacity) {
      ++per_day[k];
      --remaining;
    }
  }

  std::vector<std::int64_t> times;
  times.reserve(n);
  const std::int64_t base_day = rng.between(14860, 14950);  // late 2010
  for (int day = 0; day < draw.days; ++day) {
    const std::int64_t start = (base_day + 2 * day) * kDayS + 5;
    for (long j = 0; j < per_day[day]; ++j) times.push_back(start + j * draw.gap_s);
  }

  // Contents. Group tokens are unique to (user, group); filler comments
  // mix three vocabulary words with five single-use tokens, which keeps
  // any cross-group or filler pair far below the similarity threshold.
  std::vector<std::string> contents;
  contents.reserve(n);
  int group_index = 0;
  auto emit_group = [&](int size) {
    std::vector<std::string> base(10);
    for (int w = 0; w < 10; ++w)
      base[w] = user_id + "g" + std::to_string(group_index) + "w" + std::to_string(w);
    for (int member = 0; member < size; ++member) {
      std::vector<std::string> words = base;
      words[member] = user_id + "g" + std::to_string(group_index) + "v" + std::to_string(member);
      std::string text = words[0];
      for (std::size_t w = 1; w < words.size(); ++w) text += " " + words[w];
      contents.push_back(std::move(text));
    }
    ++group_index;
  };
  for (int t = 0; t < triples; ++t) emit_group(3);
  for (int p = 0; p < duos; ++p) emit_group(2);
  for (long filler = static_cast<long>(contents.size()); filler < n; ++filler) {
    std::string text;
    for (int w = 0; w < 3; ++w)
      text += (w ? " " : "") + vocab[rng.below(vocab.size())];
    for (int w = 0; w < 5; ++w) text += " " + user_id + "x" + std::to_string(filler) + "y" + std::to_string(w);
    contents.push_back(std::move(text));
  }
  rng.shuffle(contents);

  // Reports: `reports` distinct ids from the shared pool, each used at
  // least once.
  std::vector<int> pool(kReportPoolSize);
  for (int k = 0; k < kReportPoolSize; ++k) pool[k] = k;
  rng.shuffle(pool);
  std::vector<std::string> report_of(n);
  for (long c = 0; c < n; ++c)
    report_of[c] = report_name(
        pool[c < draw.reports ? c : rng.between(0, draw.reports - 1)]);

  // Replies: a count inside the drawn ratio bin, spread over random slots.
  const long replies = draw.plan.reply_bin == 0 ? rng.between(0, n / 2)
                                                : rng.between(n / 2 + 1, n);
  std::vector<std::size_t> slots(n);
  for (long c = 0; c < n; ++c) slots[c] = c;
  rng.shuffle(slots);
  std::vector<bool> is_reply(n, false);
  for (long c = 0; c < replies; ++c) is_reply[slots[c]] = true;

  const std::vector<std::string>& locations = location_pool();
  for (long c = 0; c < n; ++c) {
    CommentRecord rec;
    rec.report_id = report_of[c];
    rec.post_time = times[c];
    rec.post_location = locations[rng.below(locations.size())];
    rec.user_id = user_id;
    rec.content = contents[c];
    rec.is_reply = is_reply[c];
    records.push_back(std::move(rec));
  }
}

std::vector<std::string> sanitize_vocabulary(const std::vector<std::string>& vocab) {
  Segmenter plain;
  std::vector<std::string> out;
  for (const std::string& word : vocab) {
    ContentWordList tokens = segment(word, plain);
    if (tokens.size() == 1) out.push_back(tokens.front());
  }
  if (out.empty()) throw std::invalid_argument("vocabulary has no usable tokens");
  return out;
}

}  // namespace

void ClassDistributions::validate() const {
  validate_weights(normal.reply_weights, "normal.reply_weights");
  validate_weights(normal.interval_weights, "normal.interval_weights");
  validate_weights(normal.active_day_weights, "normal.active_day_weights");
  validate_weights(normal.report_weights, "normal.report_weights");
  validate_weights(normal.similar_pair_weights, "normal.similar_pair_weights");
  validate_weights(paid.reply_weights, "paid.reply_weights");
  validate_weights(paid.interval_weights, "paid.interval_weights");
  validate_weights(paid.active_day_weights, "paid.active_day_weights");
  validate_weights(paid.report_weights, "paid.report_weights");
  validate_weights(paid.similar_pair_weights, "paid.similar_pair_weights");
}

SynthResult generate_with_plans(const SynthConfig& cfg) {
  if (cfg.n_normal < 0 || cfg.n_paid < 0)
    throw std::invalid_argument("user counts must be non-negative");
  cfg.distributions.validate();
  const std::vector<std::string> vocab =
      sanitize_vocabulary(cfg.vocabulary.empty() ? default_vocabulary() : cfg.vocabulary);

  Rng rng(cfg.seed);
  SynthResult result;
  const long total = cfg.n_normal + cfg.n_paid;
  result.plans.reserve(total);

  for (long u = 0; u < total; ++u) {
    const Label label = u < cfg.n_normal ? Label::normal : Label::paid;
    const ClassMarginals& marginals = marginals_of(cfg.distributions, label);
    const std::string user_id = user_name(u);

    UserDraw draw;
    bool feasible = false;
    for (int attempt = 0; attempt < cfg.max_retries; ++attempt) {
      draw = draw_user(marginals, rng);
      const int triples = draw.pairs / 3;
      const int duos = draw.pairs % 3;
      long n = std::max({4, draw.days, draw.reports, 3 * triples + 2 * duos});
      if (n == draw.days) ++n;
      const long capacity = 1 + kMaxEpochSpanS / draw.gap_s;
      if (n <= capacity * draw.days) {
        feasible = true;
        break;
      }
    }
    if (!feasible)
      throw std::runtime_error("no feasible timeline for user " + user_id + " after " +
                               std::to_string(cfg.max_retries) + " draws");

    draw.plan.user_id = user_id;
    draw.plan.label = label;
    emit_user(draw, user_id, vocab, rng, result.corpus.records);
    result.corpus.label_map[user_id] = label;
    result.plans.push_back(draw.plan);
  }

  // Comments are ordered within each report by time, which fixes the
  // sequence numbers; ties cannot occur across a report's records of one
  // user, so (time, user) is a total order.
  std::stable_sort(result.corpus.records.begin(), result.corpus.records.end(),
                   [](const CommentRecord& a, const CommentRecord& b) {
                     return std::tie(a.report_id, a.post_time, a.user_id) <
                            std::tie(b.report_id, b.post_time, b.user_id);
                   });
  std::string current_report;
  std::int64_t seq = 0;
  for (CommentRecord& rec : result.corpus.records) {
    if (rec.report_id != current_report) {
      current_report = rec.report_id;
      seq = 0;
    }
    rec.sequence_no = seq++;
  }
  return result;
}

Corpus generate(const SynthConfig& cfg) { return generate_with_plans(cfg).corpus; }

RoundTripReport round_trip_check(const SynthConfig& cfg) {
  SynthResult generated = generate_with_plans(cfg);
  const Corpus cleaned = clean(generated.corpus);
  const std::vector<UserProfile> profiles = group_by_user(cleaned);

  std::map<std::string, const UserProfile*> by_id;
  for (const UserProfile& p : profiles) by_id[p.user_id] = &p;

  const Segmenter plain;
  const SimilarityConfig similarity;

  RoundTripReport report;
  for (const UserPlan& plan : generated.plans) {
    ++report.users_checked;
    auto it = by_id.find(plan.user_id);
    if (it == by_id.end()) {
      report.mismatches.push_back({plan.user_id, "presence", 1, 0});
      continue;
    }
    const UserProfile& profile = *it->second;
    auto check = [&](const char* feature, int drawn, int realized) {
      if (drawn != realized) report.mismatches.push_back({plan.user_id, feature, drawn, realized});
    };
    check("reply_ratio", plan.reply_bin, reply_bin_of(reply_ratio(profile)));
    check("avg_interval", plan.interval_bin, interval_bin_of(avg_interval(profile)));
    check("active_days", plan.active_day_bin, count_bin_of(active_days(profile)));
    check("num_reports", plan.report_bin, count_bin_of(num_reports(profile)));
    check("similar_pairs", plan.similar_pair_bin,
          pair_bin_of(count_similar_pairs(profile, plain, similarity)));
  }
  return report;
}

SynthConfig load_synth_config(const std::string& path) {
  const std::map<std::string, std::string> kv = read_kv_config(path);
  SynthConfig cfg;

  auto take_long = [&](const char* key, long& out) {
    auto it = kv.find(key);
    if (it == kv.end()) return;
    try {
      out = std::stol(it->second);
    } catch (const std::exception&) {
      throw std::runtime_error(path + ": bad integer for '" + key + "'");
    }
  };
  take_long("n_normal", cfg.n_normal);
  take_long("n_paid", cfg.n_paid);
  long seed = static_cast<long>(cfg.seed);
  take_long("seed", seed);
  cfg.seed = static_cast<std::uint64_t>(seed);
  long retries = cfg.max_retries;
  take_long("max_retries", retries);
  cfg.max_retries = static_cast<int>(retries);

  if (auto it = kv.find("vocabulary"); it != kv.end()) cfg.vocabulary = split_list(it->second);

  auto take_weights = [&](const char* key, std::span<double> out) {
    auto it = kv.find(key);
    if (it == kv.end()) return;
    std::vector<double> w = parse_double_list(it->second);
    if (w.size() != out.size())
      throw std::runtime_error(path + ": '" + key + "' needs " + std::to_string(out.size()) +
                               " weights");
    double sum = 0.0;
    for (double v : w) sum += v;
    if (sum <= 0.0) throw std::runtime_error(path + ": '" + key + "' has no positive weight");
    for (std::size_t k = 0; k < w.size(); ++k) out[k] = w[k] / sum;
  };
  for (const auto& [cls, marg] :
       {std::pair<const char*, ClassMarginals*>{"normal", &cfg.distributions.normal},
        std::pair<const char*, ClassMarginals*>{"paid", &cfg.distributions.paid}}) {
    const std::string prefix = cls;
    take_weights((prefix + ".reply_weights").c_str(), marg->reply_weights);
    take_weights((prefix + ".interval_weights").c_str(), marg->interval_weights);
    take_weights((prefix + ".active_day_weights").c_str(), marg->active_day_weights);
    take_weights((prefix + ".report_weights").c_str(), marg->report_weights);
    take_weights((prefix + ".similar_pair_weights").c_str(), marg->similar_pair_weights);
  }
  return cfg;
}

}  // namespace ppdetect
