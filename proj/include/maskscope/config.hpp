#pragma once

// Study configuration: cities, window, policy dates, protest tags and
// test parameters. Defaults reproduce the six-city 2020 study.

#include <algorithm>
#include <cctype>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "maskscope/civil_date.hpp"
#include "maskscope/error.hpp"
#include "maskscope/stats.hpp"

namespace maskscope {

struct City {
  std::string id;
  std::string name;
  int utc_offset_minutes = 0;  // civil-date bucketing; 0 buckets by UTC date

  friend bool operator==(const City&, const City&) = default;
};

enum class PolicyKind { stay_at_home, mask_mandate };

inline const char* policy_kind_name(PolicyKind k) {
  return k == PolicyKind::stay_at_home ? "stay_at_home" : "mask_mandate";
}

inline PolicyKind parse_policy_kind(const std::string& s) {
  if (s == "stay_at_home") return PolicyKind::stay_at_home;
  if (s == "mask_mandate") return PolicyKind::mask_mandate;
  throw Error(Errc::parse, "unknown policy kind '" + s + "'");
}

struct PolicyEvent {
  std::string city_id;
  PolicyKind kind = PolicyKind::stay_at_home;
  Date effective_date;

  friend bool operator==(const PolicyEvent&, const PolicyEvent&) = default;
};

struct StudyConfig {
  std::vector<City> cities;
  DateRange window;
  std::vector<PolicyEvent> policy_events;
  std::set<std::string> blm_tags;
  std::optional<DateRange> blm_window;
  std::vector<std::string> blm_cities;
  std::uint64_t celebrity_like_threshold = 10000;
  double alpha = 0.01;
  LagRange lag_range{0, 7};

  const City* find_city(const std::string& id) const {
    auto it = std::find_if(cities.begin(), cities.end(), [&](const City& c) { return c.id == id; });
    return it == cities.end() ? nullptr : &*it;
  }

  bool is_blm_city(const std::string& id) const {
    return std::find(blm_cities.begin(), blm_cities.end(), id) != blm_cities.end();
  }

  /// Every date any analysis looks at: the study window joined with the
  /// protest window.
  DateRange span() const {
    if (!blm_window) return window;
    return {std::min(window.start, blm_window->start), std::max(window.end, blm_window->end)};
  }
};

inline void validate(const StudyConfig& cfg) {
  if (cfg.cities.empty()) throw Error(Errc::invalid_params, "config: no cities");
  std::set<std::string> ids;
  for (const auto& c : cfg.cities) {
    if (c.id.empty()) throw Error(Errc::invalid_params, "config: empty city id");
    if (!ids.insert(c.id).second) throw Error(Errc::invalid_params, "config: duplicate city '" + c.id + "'");
    if (c.utc_offset_minutes < -14 * 60 || c.utc_offset_minutes > 14 * 60)
      throw Error(Errc::invalid_params, "config: utc_offset_minutes out of range for '" + c.id + "'");
  }
  if (!(cfg.window.start < cfg.window.end))
    throw Error(Errc::invalid_params, "config: window start must precede end");
  if (cfg.blm_window && !(cfg.blm_window->start < cfg.blm_window->end))
    throw Error(Errc::invalid_params, "config: blm_window start must precede end");
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0))
    throw Error(Errc::invalid_params, "config: alpha must lie in (0, 1)");
  if (cfg.lag_range.min < 0 || cfg.lag_range.max > 30 || cfg.lag_range.min > cfg.lag_range.max)
    throw Error(Errc::invalid_params, "config: lag_range must satisfy 0 <= min <= max <= 30");
  for (const auto& e : cfg.policy_events)
    if (!ids.count(e.city_id))
      throw Error(Errc::reference, "config: policy event for unknown city '" + e.city_id + "'");
  for (const auto& c : cfg.blm_cities)
    if (!ids.count(c)) throw Error(Errc::reference, "config: unknown BLM city '" + c + "'");
  for (const auto& t : cfg.blm_tags)
    if (std::any_of(t.begin(), t.end(), [](unsigned char ch) { return std::isupper(ch); }))
      throw Error(Errc::invalid_params, "config: BLM tags must be lowercase ('" + t + "')");
}

inline StudyConfig default_config() {
  StudyConfig cfg;
  cfg.cities = {{"new_york", "New York City", 0}, {"dallas", "Dallas", 0},
                {"seattle", "Seattle", 0},        {"minneapolis", "Minneapolis", 0},
                {"new_orleans", "New Orleans", 0}, {"boston", "Boston", 0}};
  cfg.window = {parse_date("2020-02-01"), parse_date("2020-05-31")};
  auto ev = [](const char* city, PolicyKind k, const char* d) { return PolicyEvent{city, k, parse_date(d)}; };
  using enum PolicyKind;
  cfg.policy_events = {
      ev("boston", stay_at_home, "2020-03-23"),   ev("minneapolis", stay_at_home, "2020-03-27"),
      ev("new_orleans", stay_at_home, "2020-03-20"), ev("dallas", stay_at_home, "2020-03-23"),
      ev("seattle", stay_at_home, "2020-03-23"),  ev("new_york", stay_at_home, "2020-03-20"),
      ev("boston", mask_mandate, "2020-05-06"),   ev("minneapolis", mask_mandate, "2020-04-30"),
      ev("new_york", mask_mandate, "2020-04-15"),
  };
  cfg.blm_tags = {"blm", "blacklivesmatter", "georgefloyd", "justiceforgeorgefloyd", "policebrutality", "protest"};
  cfg.blm_window = DateRange{parse_date("2020-05-25"), parse_date("2020-07-15")};
  cfg.blm_cities = {"new_york", "minneapolis"};
  return cfg;
}

inline nlohmann::ordered_json config_to_json(const StudyConfig& cfg) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["cities"] = ordered_json::array();
  for (const auto& c : cfg.cities)
    j["cities"].push_back({{"id", c.id}, {"name", c.name}, {"utc_offset_minutes", c.utc_offset_minutes}});
  j["window"] = {{"start", format_date(cfg.window.start)}, {"end", format_date(cfg.window.end)}};
  j["policy_events"] = ordered_json::array();
  for (const auto& e : cfg.policy_events)
    j["policy_events"].push_back({{"city_id", e.city_id},
                                  {"kind", policy_kind_name(e.kind)},
                                  {"effective_date", format_date(e.effective_date)}});
  j["blm_tags"] = ordered_json(std::vector<std::string>(cfg.blm_tags.begin(), cfg.blm_tags.end()));
  if (cfg.blm_window)
    j["blm_window"] = {{"start", format_date(cfg.blm_window->start)}, {"end", format_date(cfg.blm_window->end)}};
  j["blm_cities"] = cfg.blm_cities;
  j["celebrity_like_threshold"] = cfg.celebrity_like_threshold;
  j["alpha"] = cfg.alpha;
  j["lag_range"] = {cfg.lag_range.min, cfg.lag_range.max};
  return j;
}

/// Missing keys fall back to the defaults.
inline StudyConfig config_from_json(const nlohmann::json& j) {
  StudyConfig cfg = default_config();
  try {
    if (!j.is_object()) throw Error(Errc::parse, "config must be a JSON object");
    if (j.contains("cities")) {
      cfg.cities.clear();
      for (const auto& c : j.at("cities"))
        cfg.cities.push_back({c.at("id").get<std::string>(), c.value("name", c.at("id").get<std::string>()),
                              c.value("utc_offset_minutes", 0)});
    }
    auto range = [](const nlohmann::json& r) {
      return DateRange{parse_date(r.at("start").get<std::string>()), parse_date(r.at("end").get<std::string>())};
    };
    if (j.contains("window")) cfg.window = range(j.at("window"));
    if (j.contains("policy_events")) {
      cfg.policy_events.clear();
      for (const auto& e : j.at("policy_events"))
        cfg.policy_events.push_back({e.at("city_id").get<std::string>(),
                                     parse_policy_kind(e.at("kind").get<std::string>()),
                                     parse_date(e.at("effective_date").get<std::string>())});
    }
    if (j.contains("blm_tags")) {
      cfg.blm_tags.clear();
      for (const auto& t : j.at("blm_tags")) cfg.blm_tags.insert(t.get<std::string>());
    }
    if (j.contains("blm_window")) {
      if (j.at("blm_window").is_null())
        cfg.blm_window.reset();
      else
        cfg.blm_window = range(j.at("blm_window"));
    }
    if (j.contains("blm_cities")) cfg.blm_cities = j.at("blm_cities").get<std::vector<std::string>>();
    if (j.contains("celebrity_like_threshold"))
      cfg.celebrity_like_threshold = j.at("celebrity_like_threshold").get<std::uint64_t>();
    if (j.contains("alpha")) cfg.alpha = j.at("alpha").get<double>();
    if (j.contains("lag_range")) {
      const auto& l = j.at("lag_range");
      cfg.lag_range = {l.at(0).get<int>(), l.at(1).get<int>()};
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse, std::string("config: ") + e.what());
  }
  validate(cfg);
  return cfg;
}

}  // namespace maskscope
