#pragma once

// Per-day adherence counts and the percentage series derived from them.
// DailyAggregate is a commutative monoid under merge(), so partial
// aggregates from any partition of the records can be combined.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "maskscope/civil_date.hpp"
#include "maskscope/config.hpp"
#include "maskscope/error.hpp"
#include "maskscope/mask_fit.hpp"
#include "maskscope/records.hpp"
#include "maskscope/series.hpp"

namespace maskscope {

struct DailyAggregate {
  Date date;
  std::uint64_t n_posts = 0;
  std::uint64_t n_faces = 0;
  std::uint64_t n_masked = 0;
  std::uint64_t n_group_posts = 0;  // posts with two or more faces
  std::uint64_t n_faces_in_groups = 0;
  std::uint64_t n_masked_in_groups = 0;
  std::uint64_t n_celebrity_posts = 0;
  std::uint64_t n_blm_posts = 0;
  std::uint64_t n_posts_with_mask = 0;
  std::uint64_t n_celebrity_posts_with_mask = 0;
  FitHistogram fit_hist;

  friend bool operator==(const DailyAggregate&, const DailyAggregate&) = default;
};

/// Adds counts of `from` into `into`, ignoring dates.
inline void accumulate(DailyAggregate& into, const DailyAggregate& from) {
  into.n_posts += from.n_posts;
  into.n_faces += from.n_faces;
  into.n_masked += from.n_masked;
  into.n_group_posts += from.n_group_posts;
  into.n_faces_in_groups += from.n_faces_in_groups;
  into.n_masked_in_groups += from.n_masked_in_groups;
  into.n_celebrity_posts += from.n_celebrity_posts;
  into.n_blm_posts += from.n_blm_posts;
  into.n_posts_with_mask += from.n_posts_with_mask;
  into.n_celebrity_posts_with_mask += from.n_celebrity_posts_with_mask;
  into.fit_hist += from.fit_hist;
}

inline DailyAggregate merge(const DailyAggregate& a, const DailyAggregate& b) {
  if (a.date != b.date)
    throw Error(Errc::merge_mismatch, "cannot merge aggregates for " + format_date(a.date) + " and " +
                                          format_date(b.date));
  DailyAggregate r = a;
  accumulate(r, b);
  return r;
}

inline void add_post(DailyAggregate& agg, const PostRecord& post, const StudyConfig& cfg) {
  const std::uint64_t faces = post.faces.size();
  const std::uint64_t masked = post.masked_faces();
  const bool celebrity = is_celebrity(post, cfg.celebrity_like_threshold);
  agg.n_posts += 1;
  agg.n_faces += faces;
  agg.n_masked += masked;
  if (faces >= 2) {
    agg.n_group_posts += 1;
    agg.n_faces_in_groups += faces;
    agg.n_masked_in_groups += masked;
  }
  agg.n_celebrity_posts += celebrity;
  agg.n_blm_posts += classify_blm(post.tags, cfg.blm_tags);
  if (masked > 0) {
    agg.n_posts_with_mask += 1;
    agg.n_celebrity_posts_with_mask += celebrity;
  }
  for (const auto& f : post.faces)
    if (f.fit_score) agg.fit_hist.add(*f.fit_score);
}

inline Date bucket_date(const PostRecord& post, const StudyConfig& cfg) {
  const City* c = cfg.find_city(post.city_id);
  return local_date(post.timestamp, c ? c->utc_offset_minutes : 0);
}

/// Aggregate of posts that all fall on `date`.
inline DailyAggregate aggregate_day(Date date, std::span<const PostRecord> posts, const StudyConfig& cfg) {
  DailyAggregate agg;
  agg.date = date;
  for (const auto& p : posts) {
    if (bucket_date(p, cfg) != date)
      throw Error(Errc::merge_mismatch, "post " + p.post_id + " is not dated " + format_date(date));
    add_post(agg, p, cfg);
  }
  return agg;
}

// ---------------------------------------------------------------------------
// Percentages

/// 100 n / d, undefined when d = 0.
inline std::optional<double> percentage(std::uint64_t n, std::uint64_t d) {
  if (d == 0) return std::nullopt;
  return 100.0 * static_cast<double>(n) / static_cast<double>(d);
}

/// 100 n / d in hundredths of a percent, rounded half up in exact integer
/// arithmetic.
inline std::optional<std::int64_t> percentage_hundredths(std::uint64_t n, std::uint64_t d) {
  if (d == 0) return std::nullopt;
  const unsigned __int128 num = static_cast<unsigned __int128>(n) * 20000u + d;
  return static_cast<std::int64_t>(num / (2u * static_cast<unsigned __int128>(d)));
}

inline std::string format_hundredths(std::int64_t h) {
  char buf[32];
  const char* sign = h < 0 ? "-" : "";
  const std::int64_t a = h < 0 ? -h : h;
  std::snprintf(buf, sizeof buf, "%s%lld.%02lld", sign, static_cast<long long>(a / 100),
                static_cast<long long>(a % 100));
  return buf;
}

inline constexpr const char* kUndefined = "NA";

/// Report form: two decimals, half up, "NA" when undefined.
inline std::string format_percentage(std::uint64_t n, std::uint64_t d) {
  const auto h = percentage_hundredths(n, d);
  return h ? format_hundredths(*h) : kUndefined;
}

/// Half-up rounding of an arbitrary value to `decimals` places.
inline std::string format_fixed(double v, int decimals = 2) {
  if (!std::isfinite(v)) return kUndefined;
  const double scale = std::pow(10.0, decimals);
  double r = std::floor(std::abs(v) * scale + 0.5) / scale;
  if (v < 0 && r != 0.0) r = -r;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, r);
  return buf;
}

inline std::string format_fixed(const std::optional<double>& v, int decimals = 2) {
  return v ? format_fixed(*v, decimals) : kUndefined;
}

// ---------------------------------------------------------------------------
// Metric series

enum class MetricKind { pct_masked, pct_group, pct_masked_in_group };

inline const char* metric_name(MetricKind k) {
  switch (k) {
    case MetricKind::pct_masked: return "pct_masked";
    case MetricKind::pct_group: return "pct_group";
    case MetricKind::pct_masked_in_group: return "pct_masked_in_group";
  }
  return "?";
}

inline std::pair<std::uint64_t, std::uint64_t> metric_counts(const DailyAggregate& a, MetricKind k) {
  switch (k) {
    case MetricKind::pct_masked: return {a.n_masked, a.n_faces};
    case MetricKind::pct_group: return {a.n_group_posts, a.n_posts};
    case MetricKind::pct_masked_in_group: return {a.n_masked_in_groups, a.n_faces_in_groups};
  }
  return {0, 0};
}

inline std::optional<double> metric_value(const DailyAggregate& a, MetricKind k) {
  const auto [n, d] = metric_counts(a, k);
  return percentage(n, d);
}

struct MetricSeries {
  std::string city_id;
  MetricKind kind = MetricKind::pct_masked;
  DatedSeries points;
};

enum class Period { day, week, month };

/// Buckets date-sorted aggregates. Weeks are 7-day blocks counted from
/// `anchor`; months are calendar months. Each result carries its bucket's
/// first date.
inline std::vector<DailyAggregate> bucket_aggregates(std::span<const DailyAggregate> aggs, Period period,
                                                     Date anchor) {
  std::vector<DailyAggregate> out;
  auto key_of = [&](Date d) -> Date {
    switch (period) {
      case Period::day: return d;
      case Period::week: {
        const long off = days_between(anchor, d);
        const long week = off >= 0 ? off / 7 : -((-off + 6) / 7);
        return anchor + std::chrono::days{7 * week};
      }
      case Period::month: {
        const std::chrono::year_month_day ymd{d};
        return Date{ymd.year() / ymd.month() / std::chrono::day{1}};
      }
    }
    return d;
  };
  for (const auto& a : aggs) {
    const Date k = key_of(a.date);
    if (out.empty() || out.back().date != k) {
      if (!out.empty() && k < out.back().date)
        throw Error(Errc::out_of_range, "aggregates must be sorted by date");
      DailyAggregate fresh;
      fresh.date = k;
      out.push_back(fresh);
    }
    accumulate(out.back(), a);
  }
  return out;
}

inline MetricSeries bucket_series(std::span<const DailyAggregate> aggs, Period period, MetricKind kind,
                                  Date anchor, std::string city_id = {}) {
  MetricSeries s{std::move(city_id), kind, {}};
  for (const auto& b : bucket_aggregates(aggs, period, anchor)) s.points.push_back({b.date, metric_value(b, kind)});
  return s;
}

/// One point for every day of `range`; days without data are undefined.
inline MetricSeries daily_series(std::span<const DailyAggregate> aggs, const DateRange& range, MetricKind kind,
                                 std::string city_id = {}) {
  std::map<Date, const DailyAggregate*> by_date;
  for (const auto& a : aggs) by_date[a.date] = &a;
  MetricSeries s{std::move(city_id), kind, {}};
  for (Date d = range.start; d <= range.end; d += std::chrono::days{1}) {
    const auto it = by_date.find(d);
    s.points.push_back({d, it == by_date.end() ? std::nullopt : metric_value(*it->second, kind)});
  }
  return s;
}

/// Share of mask-bearing posts that are celebrity posts, undefined when no
/// post contains a mask.
inline std::optional<double> celebrity_share(std::span<const DailyAggregate> aggs) {
  std::uint64_t with_mask = 0, celeb = 0;
  for (const auto& a : aggs) {
    with_mask += a.n_posts_with_mask;
    celeb += a.n_celebrity_posts_with_mask;
  }
  return percentage(celeb, with_mask);
}

inline DailyAggregate total(std::span<const DailyAggregate> aggs) {
  DailyAggregate t;
  if (!aggs.empty()) t.date = aggs.front().date;
  for (const auto& a : aggs) accumulate(t, a);
  return t;
}

// ---------------------------------------------------------------------------
// Corpus-level accumulator

enum class Cohort { non_blm, blm };

/// Aggregates keyed by (city, cohort, date). Posts dated outside the
/// configured span, or from unconfigured cities, are counted and skipped.
class AggregateTable {
 public:
  using Key = std::tuple<std::string, Cohort, Date>;

  explicit AggregateTable(const StudyConfig* cfg) : cfg_(cfg) {}

  void add(const PostRecord& post) {
    if (!cfg_->find_city(post.city_id)) {
      ++skipped_unknown_city_;
      return;
    }
    const Date d = bucket_date(post, *cfg_);
    if (!cfg_->span().contains(d)) {
      ++skipped_out_of_window_;
      return;
    }
    const Cohort c = classify_blm(post.tags, cfg_->blm_tags) ? Cohort::blm : Cohort::non_blm;
    auto [it, inserted] = cells_.try_emplace(Key{post.city_id, c, d});
    if (inserted) it->second.date = d;
    add_post(it->second, post, *cfg_);
  }

  void merge_from(const AggregateTable& other) {
    for (const auto& [k, v] : other.cells_) {
      auto [it, inserted] = cells_.try_emplace(k, v);
      if (!inserted) accumulate(it->second, v);
    }
    skipped_unknown_city_ += other.skipped_unknown_city_;
    skipped_out_of_window_ += other.skipped_out_of_window_;
  }

  /// Date-sorted aggregates for a city within `range`, merging the selected cohorts.
  std::vector<DailyAggregate> days(const std::string& city, const DateRange& range,
                                   std::optional<Cohort> cohort = std::nullopt) const {
    std::map<Date, DailyAggregate> merged;
    for (Cohort c : {Cohort::non_blm, Cohort::blm}) {
      if (cohort && *cohort != c) continue;
      for (auto it = cells_.lower_bound(Key{city, c, range.start});
           it != cells_.end() && std::get<0>(it->first) == city && std::get<1>(it->first) == c &&
           std::get<2>(it->first) <= range.end;
           ++it) {
        auto [m, inserted] = merged.try_emplace(it->second.date, it->second);
        if (!inserted) accumulate(m->second, it->second);
      }
    }
    std::vector<DailyAggregate> out;
    out.reserve(merged.size());
    for (auto& [d, a] : merged) out.push_back(a);
    return out;
  }

  /// All cities pooled, date-sorted.
  std::vector<DailyAggregate> pooled_days(const DateRange& range) const {
    std::map<Date, DailyAggregate> merged;
    for (const auto& c : cfg_->cities)
      for (const auto& a : days(c.id, range)) {
        auto [m, inserted] = merged.try_emplace(a.date, a);
        if (!inserted) accumulate(m->second, a);
      }
    std::vector<DailyAggregate> out;
    for (auto& [d, a] : merged) out.push_back(a);
    return out;
  }

  const StudyConfig& config() const { return *cfg_; }
  std::uint64_t skipped_unknown_city() const { return skipped_unknown_city_; }
  std::uint64_t skipped_out_of_window() const { return skipped_out_of_window_; }
  const std::map<Key, DailyAggregate>& cells() const { return cells_; }

 private:
  const StudyConfig* cfg_;
  std::map<Key, DailyAggregate> cells_;
  std::uint64_t skipped_unknown_city_ = 0;
  std::uint64_t skipped_out_of_window_ = 0;
};

}  // namespace maskscope
