#pragma once

// The four studies: policy before/after effects, per-city trend tests,
// lag-searched case correlations and BLM vs non-BLM comparisons.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "maskscope/aggregate.hpp"
#include "maskscope/config.hpp"
#include "maskscope/error.hpp"
#include "maskscope/records.hpp"
#include "maskscope/stats.hpp"

namespace maskscope {

/// Days strictly before the effective date go to the first half; the
/// effective date itself starts the second.
inline std::pair<MetricSeries, MetricSeries> split_before_after(const MetricSeries& series, const PolicyEvent& event) {
  if (series.points.empty() || event.effective_date < series.points.front().date ||
      event.effective_date > series.points.back().date)
    throw Error(Errc::out_of_range, "event " + format_date(event.effective_date) + " outside the series span");
  MetricSeries before{series.city_id, series.kind, {}};
  MetricSeries after{series.city_id, series.kind, {}};
  for (const auto& p : series.points) (p.date < event.effective_date ? before : after).points.push_back(p);
  return {std::move(before), std::move(after)};
}

inline MetricKind default_metric(PolicyKind k) {
  return k == PolicyKind::stay_at_home ? MetricKind::pct_group : MetricKind::pct_masked;
}

struct PolicyEffectReport {
  std::string city_id;
  PolicyEvent event;
  MetricKind metric = MetricKind::pct_masked;
  std::size_t days_before = 0;
  std::size_t days_after = 0;
  double mean_before = 0.0;
  double mean_after = 0.0;
  WelchResult welch;
  bool significant = false;
};

inline bool is_significant(double p, double alpha) { return p < alpha; }

/// Welch's test on the defined daily values either side of the event.
/// Days without a defined percentage are dropped, not imputed.
inline PolicyEffectReport policy_effect(std::span<const DailyAggregate> aggs, const PolicyEvent& event,
                                        MetricKind metric, const StudyConfig& cfg) {
  const MetricSeries daily = daily_series(aggs, cfg.window, metric, event.city_id);
  const auto [before, after] = split_before_after(daily, event);
  const auto xb = defined_values(before.points);
  const auto xa = defined_values(after.points);
  if (xb.size() < 2 || xa.size() < 2)
    throw Error(Errc::insufficient_data, event.city_id + " " + policy_kind_name(event.kind) + ": " +
                                             std::to_string(xb.size()) + " defined days before, " +
                                             std::to_string(xa.size()) + " after");
  PolicyEffectReport r;
  r.city_id = event.city_id;
  r.event = event;
  r.metric = metric;
  r.days_before = before.points.size();
  r.days_after = after.points.size();
  r.welch = welch(std::span<const double>(xb), std::span<const double>(xa));
  r.mean_before = r.welch.mean_before;
  r.mean_after = r.welch.mean_after;
  r.significant = is_significant(r.welch.p, cfg.alpha);
  return r;
}

/// A study row: either a result or the reason none could be computed.
template <class T>
struct StudyRow {
  std::string city_id;
  std::optional<T> result;
  std::string note;
};

using TrendRow = StudyRow<TrendResult>;

inline TrendResult city_trend(std::span<const DailyAggregate> aggs, const StudyConfig& cfg) {
  const auto values = defined_values(daily_series(aggs, cfg.window, MetricKind::pct_masked).points);
  return mann_kendall(values);
}

/// Mann-Kendall on each city's daily masked percentage, in config city order.
inline std::vector<TrendRow> trend_study(const AggregateTable& table) {
  const StudyConfig& cfg = table.config();
  std::vector<TrendRow> rows;
  for (const auto& c : cfg.cities) {
    TrendRow row{c.id, std::nullopt, {}};
    try {
      row.result = city_trend(table.days(c.id, cfg.window), cfg);
    } catch (const Error& e) {
      row.note = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

struct CorrelationRow {
  std::string city_id;
  CorrelationMethod method = CorrelationMethod::pearson;
  std::optional<CorrelationResult> result;
  std::string note;
};

inline CorrelationResult city_correlation(std::span<const DailyAggregate> aggs, const CaseSeries& cases,
                                          CorrelationMethod method, const StudyConfig& cfg) {
  const MetricSeries pct = daily_series(aggs, cfg.window, MetricKind::pct_masked, cases.city_id);
  return lag_max_correlation(cases.as_series(), pct.points, cfg.lag_range, method);
}

/// Pearson then Spearman rows per city, in config city order.
inline std::vector<CorrelationRow> correlation_study(const AggregateTable& table,
                                                     const std::map<std::string, CaseSeries>& cases) {
  const StudyConfig& cfg = table.config();
  std::vector<CorrelationRow> rows;
  for (CorrelationMethod m : {CorrelationMethod::pearson, CorrelationMethod::spearman})
    for (const auto& c : cfg.cities) {
      CorrelationRow row{c.id, m, std::nullopt, {}};
      const auto it = cases.find(c.id);
      if (it == cases.end()) {
        row.note = "no case series";
      } else {
        try {
          row.result = city_correlation(table.days(c.id, cfg.window), it->second, m, cfg);
        } catch (const Error& e) {
          row.note = e.what();
        }
      }
      rows.push_back(std::move(row));
    }
  return rows;
}

struct CohortComparison {
  std::string city_id;
  MetricKind metric = MetricKind::pct_group;
  double blm = 0.0;
  double non_blm = 0.0;
  double difference = 0.0;  // blm - non_blm, percentage points
  DailyAggregate blm_counts;
  DailyAggregate non_blm_counts;
};

/// Pooled cohort percentages over the given days.
inline CohortComparison blm_comparison(std::span<const DailyAggregate> blm_days,
                                       std::span<const DailyAggregate> non_blm_days, MetricKind metric,
                                       std::string city_id = {}) {
  CohortComparison c;
  c.city_id = std::move(city_id);
  c.metric = metric;
  c.blm_counts = total(blm_days);
  c.non_blm_counts = total(non_blm_days);
  const auto b = metric_value(c.blm_counts, metric);
  const auto n = metric_value(c.non_blm_counts, metric);
  if (!b || !n)
    throw Error(Errc::undefined_comparison, std::string(metric_name(metric)) + ": " +
                                                (b ? "non-BLM" : "BLM") + " cohort has no " +
                                                (metric == MetricKind::pct_group ? "posts" : "faces"));
  c.blm = *b;
  c.non_blm = *n;
  c.difference = *b - *n;
  return c;
}

struct CohortRow {
  std::string city_id;
  MetricKind metric = MetricKind::pct_group;
  std::optional<CohortComparison> result;
  std::string note;
};

/// BLM comparisons for configured protest cities over the protest window.
inline std::vector<CohortRow> blm_study(const AggregateTable& table) {
  const StudyConfig& cfg = table.config();
  std::vector<CohortRow> rows;
  if (!cfg.blm_window) return rows;
  for (const auto& city : cfg.blm_cities)
    for (MetricKind m : {MetricKind::pct_group, MetricKind::pct_masked, MetricKind::pct_masked_in_group}) {
      CohortRow row{city, m, std::nullopt, {}};
      try {
        row.result = blm_comparison(table.days(city, *cfg.blm_window, Cohort::blm),
                                    table.days(city, *cfg.blm_window, Cohort::non_blm), m, city);
      } catch (const Error& e) {
        row.note = e.what();
      }
      rows.push_back(std::move(row));
    }
  return rows;
}

struct PolicyRow {
  PolicyEvent event;
  MetricKind metric = MetricKind::pct_masked;
  std::optional<PolicyEffectReport> result;
  std::string note;
};

inline std::vector<PolicyRow> policy_study(const AggregateTable& table) {
  const StudyConfig& cfg = table.config();
  std::vector<PolicyRow> rows;
  for (const auto& e : cfg.policy_events) {
    PolicyRow row{e, default_metric(e.kind), std::nullopt, {}};
    try {
      row.result = policy_effect(table.days(e.city_id, cfg.window), e, row.metric, cfg);
    } catch (const Error& err) {
      row.note = err.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace maskscope
