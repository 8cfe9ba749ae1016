#pragma once

// Deterministic synthetic corpora with planted effects: mask-rate trend,
// policy steps, lagged coupling to case counts, protest cohorts and a
// bimodal fit-score distribution. Used to check that the analysis recovers
// what was planted.
//
// Randomness: xoshiro256** (see rng.hpp). Each (city, day) draws from its
// own substream Rng::derive(seed, city_index, day_offset + 1), and each
// city's case curve from Rng::derive(seed, city_index, 0).

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "maskscope/aggregate.hpp"
#include "maskscope/bitmap_io.hpp"
#include "maskscope/config.hpp"
#include "maskscope/error.hpp"
#include "maskscope/records.hpp"
#include "maskscope/rng.hpp"
#include "maskscope/roi.hpp"

namespace maskscope {

/// Two beta components on [0, 100].
struct FitMixture {
  double high_weight = 0.55;
  double high_a = 6.0, high_b = 1.3;
  double low_a = 1.6, low_b = 2.4;
};

/// Rates are probabilities; effects and trends are additive probability
/// changes (0.01 = one percentage point).
struct CityParams {
  std::uint64_t posts_per_day = 100;
  double face_post_rate = 0.43;     // P(at least one face)
  double group_post_rate = 0.08;    // P(two or more faces)
  double extra_faces_mean = 0.8;    // mean faces beyond two in a group post
  double group_policy_effect = -0.03;  // step at the stay-at-home date
  double base_mask_rate = 0.08;
  double daily_trend = 0.0005;
  double mask_policy_effect = 0.02;  // step at the mask-mandate date
  double case_coupling = 0.0;        // weight on normalized lagged cases
  int case_lag = 1;
  double celebrity_rate = 0.002;
  double like_scale = 40.0;
  double like_tail_alpha = 1.6;
  double blm_share = 0.3;  // in the protest window, protest cities only
  double blm_group_delta = 0.06;
  double blm_mask_delta = 0.2;
  FitMixture fit;
  // cumulative cases: logistic curve plus a few reporting jumps
  double case_total = 20000.0;
  double case_midpoint_day = 60.0;
  double case_steepness = 0.08;
  int case_jump_count = 6;
  double case_jump_fraction = 0.4;
};

struct SynthParams {
  std::uint64_t seed = 20200201;
  double landmark_jitter = 0.2;
  bool write_bitmaps = false;
  CityParams defaults;
  std::map<std::string, CityParams> cities;

  const CityParams& for_city(const std::string& id) const {
    const auto it = cities.find(id);
    return it == cities.end() ? defaults : it->second;
  }
};

inline constexpr double kMaxLandmarkJitter = 0.5;

/// Canonical template under a random similarity transform whose magnitude
/// scales with `jitter` in [0, 0.5]; jitter 0 returns the template exactly.
inline LandmarkSet generate_landmarks(Rng& rng, double jitter) {
  const LandmarkSet tpl = canonical_landmarks();
  if (jitter <= 0.0) return tpl;
  jitter = std::min(jitter, kMaxLandmarkJitter);
  const double scale = 1.0 + jitter * rng.uniform(-1.0, 1.0);
  const double angle = 0.5 * jitter * rng.uniform(-1.0, 1.0);
  const double tx = jitter * rng.uniform(0.0, 200.0);
  const double ty = jitter * rng.uniform(0.0, 200.0);
  const double noise = 2.0 * jitter;
  const double c = std::cos(angle) * scale, s = std::sin(angle) * scale;
  auto xf = [&](const Point& p) {
    const double dx = p.x - 100.0, dy = p.y - 100.0;
    return Point{100.0 + c * dx - s * dy + tx, 100.0 + s * dx + c * dy + ty};
  };
  std::vector<Point> pts;
  pts.reserve(kLandmarkCount);
  for (const auto& p : tpl.points()) {
    Point q = xf(p);
    q.x += noise * rng.normal();
    q.y += noise * rng.normal();
    pts.push_back(q);
  }
  const Rect& b = tpl.face_box();
  double xmin = 1e300, ymin = 1e300, xmax = -1e300, ymax = -1e300;
  for (const Point& corner : {Point{b.x, b.y}, Point{b.x + b.width, b.y}, Point{b.x, b.y + b.height},
                              Point{b.x + b.width, b.y + b.height}}) {
    const Point q = xf(corner);
    xmin = std::min(xmin, q.x);
    xmax = std::max(xmax, q.x);
    ymin = std::min(ymin, q.y);
    ymax = std::max(ymax, q.y);
  }
  for (const auto& p : pts) {
    xmin = std::min(xmin, p.x);
    ymin = std::min(ymin, p.y);
  }
  const double mx = xmin < 0 ? -xmin : 0.0, my = ymin < 0 ? -ymin : 0.0;
  for (auto& p : pts) {
    p.x += mx;
    p.y += my;
  }
  return LandmarkSet(std::move(pts), Rect{xmin + mx, ymin + my, xmax - xmin, ymax - ymin});
}

inline void validate(const CityParams& p, const std::string& where) {
  auto rate = [&](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0))
      throw Error(Errc::invalid_params, where + "." + name + " must lie in [0, 1]");
  };
  auto positive = [&](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw Error(Errc::invalid_params, where + "." + name + " must be positive");
  };
  if (p.posts_per_day > 10'000'000)
    throw Error(Errc::invalid_params, where + ".posts_per_day must lie in [0, 10000000]");
  rate(p.face_post_rate, "face_post_rate");
  rate(p.group_post_rate, "group_post_rate");
  if (p.group_post_rate > p.face_post_rate)
    throw Error(Errc::invalid_params, where + ".group_post_rate exceeds face_post_rate");
  rate(p.base_mask_rate, "base_mask_rate");
  rate(p.celebrity_rate, "celebrity_rate");
  rate(p.blm_share, "blm_share");
  rate(p.fit.high_weight, "fit.high_weight");
  rate(p.case_jump_fraction, "case_jump_fraction");
  if (!(p.extra_faces_mean >= 0.0)) throw Error(Errc::invalid_params, where + ".extra_faces_mean must be >= 0");
  positive(p.like_scale, "like_scale");
  positive(p.like_tail_alpha, "like_tail_alpha");
  positive(p.fit.high_a, "fit.high_a");
  positive(p.fit.high_b, "fit.high_b");
  positive(p.fit.low_a, "fit.low_a");
  positive(p.fit.low_b, "fit.low_b");
  positive(p.case_total, "case_total");
  positive(p.case_steepness, "case_steepness");
  if (p.case_lag < 0 || p.case_lag > 30) throw Error(Errc::invalid_params, where + ".case_lag must lie in [0, 30]");
  if (p.case_jump_count < 0) throw Error(Errc::invalid_params, where + ".case_jump_count must be >= 0");
  for (double v : {p.group_policy_effect, p.daily_trend, p.mask_policy_effect, p.case_coupling, p.blm_group_delta,
                   p.blm_mask_delta, p.case_midpoint_day})
    if (!std::isfinite(v)) throw Error(Errc::invalid_params, where + ": non-finite parameter");
}

inline void validate(const SynthParams& p) {
  if (!(p.landmark_jitter >= 0.0 && p.landmark_jitter <= kMaxLandmarkJitter))
    throw Error(Errc::invalid_params, "landmark_jitter must lie in [0, 0.5]");
  validate(p.defaults, "defaults");
  for (const auto& [id, c] : p.cities) validate(c, "cities." + id);
}

namespace detail {

#define MASKSCOPE_CITY_FIELDS(X)                                                                              \
  X(posts_per_day) X(face_post_rate) X(group_post_rate) X(extra_faces_mean) X(group_policy_effect)            \
  X(base_mask_rate) X(daily_trend) X(mask_policy_effect) X(case_coupling) X(case_lag) X(celebrity_rate)      \
  X(like_scale) X(like_tail_alpha) X(blm_share) X(blm_group_delta) X(blm_mask_delta) X(case_total)           \
  X(case_midpoint_day) X(case_steepness) X(case_jump_count) X(case_jump_fraction)

inline void city_params_from_json(const nlohmann::json& j, CityParams& p, const std::string& where) {
  if (!j.is_object()) throw Error(Errc::invalid_params, where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    try {
#define X(field)                                          \
  if (key == #field) {                                    \
    p.field = value.get<decltype(p.field)>();             \
    known = true;                                         \
  }
      MASKSCOPE_CITY_FIELDS(X)
#undef X
      if (key == "fit") {
        known = true;
        p.fit.high_weight = value.value("high_weight", p.fit.high_weight);
        p.fit.high_a = value.value("high_a", p.fit.high_a);
        p.fit.high_b = value.value("high_b", p.fit.high_b);
        p.fit.low_a = value.value("low_a", p.fit.low_a);
        p.fit.low_b = value.value("low_b", p.fit.low_b);
      }
    } catch (const nlohmann::json::exception&) {
      throw Error(Errc::invalid_params, where + "." + key + ": wrong type");
    }
    if (!known) throw Error(Errc::invalid_params, where + "." + key + ": unknown parameter");
  }
}

inline nlohmann::ordered_json city_params_to_json(const CityParams& p) {
  nlohmann::ordered_json j;
#define X(field) j[#field] = p.field;
  MASKSCOPE_CITY_FIELDS(X)
#undef X
  j["fit"] = {{"high_weight", p.fit.high_weight}, {"high_a", p.fit.high_a}, {"high_b", p.fit.high_b},
              {"low_a", p.fit.low_a}, {"low_b", p.fit.low_b}};
  return j;
}

#undef MASKSCOPE_CITY_FIELDS

}  // namespace detail

/// Unknown keys are rejected with the offending field named.
inline SynthParams synth_params_from_json(const nlohmann::json& j) {
  SynthParams p;
  if (!j.is_object()) throw Error(Errc::invalid_params, "params must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "seed")
        p.seed = value.get<std::uint64_t>();
      else if (key == "landmark_jitter")
        p.landmark_jitter = value.get<double>();
      else if (key == "write_bitmaps")
        p.write_bitmaps = value.get<bool>();
      else if (key == "defaults" || key == "cities" || key == "config")
        ;
      else
        throw Error(Errc::invalid_params, key + ": unknown parameter");
    } catch (const nlohmann::json::exception&) {
      throw Error(Errc::invalid_params, key + ": wrong type");
    }
  }
  if (j.contains("defaults")) detail::city_params_from_json(j.at("defaults"), p.defaults, "defaults");
  if (j.contains("cities")) {
    if (!j.at("cities").is_object()) throw Error(Errc::invalid_params, "cities must be an object");
    for (const auto& [id, c] : j.at("cities").items()) {
      CityParams cp = p.defaults;
      detail::city_params_from_json(c, cp, "cities." + id);
      p.cities[id] = cp;
    }
  }
  validate(p);
  return p;
}

inline nlohmann::ordered_json synth_params_to_json(const SynthParams& p) {
  nlohmann::ordered_json j;
  j["seed"] = p.seed;
  j["landmark_jitter"] = p.landmark_jitter;
  j["write_bitmaps"] = p.write_bitmaps;
  j["defaults"] = detail::city_params_to_json(p.defaults);
  j["cities"] = nlohmann::ordered_json::object();
  for (const auto& [id, c] : p.cities) j["cities"][id] = detail::city_params_to_json(c);
  return j;
}

/// Logistic curve plus reporting jumps, one value per window day.
inline CaseSeries generate_cases(const CityParams& p, const std::string& city_id, const DateRange& window, Rng rng) {
  const long n = window.days();
  auto logistic = [&](double t) { return 1.0 / (1.0 + std::exp(-p.case_steepness * (t - p.case_midpoint_day))); };
  const double l0 = logistic(-1.0), l1 = logistic(static_cast<double>(n - 1));
  const double smooth_total = p.case_total * (1.0 - p.case_jump_fraction);
  std::vector<double> jumps(static_cast<std::size_t>(n), 0.0);
  if (p.case_jump_count > 0 && n > 1) {
    std::vector<double> sizes(static_cast<std::size_t>(p.case_jump_count));
    double sum = 0.0;
    for (auto& s : sizes) sum += (s = rng.uniform(0.5, 1.5));
    for (auto s : sizes) {
      const auto day = 1 + rng.below(static_cast<std::uint64_t>(n - 1));
      jumps[day] += p.case_total * p.case_jump_fraction * s / sum;
    }
  }
  CaseSeries out{city_id, {}};
  double jumped = 0.0;
  for (long t = 0; t < n; ++t) {
    jumped += jumps[static_cast<std::size_t>(t)];
    const double smooth = smooth_total * (logistic(static_cast<double>(t)) - l0) / (l1 - l0);
    out.entries.push_back({window.start + std::chrono::days{t},
                           10 + static_cast<std::uint64_t>(std::llround(smooth + jumped))});
  }
  return out;
}

struct SynthCityTruth {
  std::string city_id;
  CityParams params;
  std::optional<Date> stay_at_home;
  std::optional<Date> mask_mandate;
  std::uint64_t posts = 0, faces = 0, masked = 0, group_posts = 0, blm_posts = 0;
  std::uint64_t posts_with_mask = 0, celebrity_posts_with_mask = 0, scored_faces = 0;
  std::uint64_t clamped_days = 0;
};

struct SynthResult {
  std::map<std::string, CaseSeries> cases;
  std::vector<SynthCityTruth> truths;
  nlohmann::ordered_json manifest;
};

inline double planted_mask_rate(const CityParams& p, long day, bool after_mandate, double lagged_cases_norm) {
  return p.base_mask_rate + p.daily_trend * static_cast<double>(day) + (after_mandate ? p.mask_policy_effect : 0.0) +
         p.case_coupling * lagged_cases_norm;
}

/// Streams posts to `sink` ordered by day, then city (config order), then
/// post index. With `write_bitmaps`, segmentation bitmaps for scored faces
/// go under `bitmap_root` and their fit scores are left for `fitscore`.
inline SynthResult generate_corpus(const SynthParams& params, const StudyConfig& cfg,
                                   const std::function<void(const PostRecord&)>& sink,
                                   const std::optional<std::filesystem::path>& bitmap_root = std::nullopt) {
  validate(params);
  validate(cfg);
  if (params.write_bitmaps && !bitmap_root)
    throw Error(Errc::invalid_params, "write_bitmaps requires an output directory");
  SynthResult res;
  const DateRange span = cfg.span();
  const long window_days = cfg.window.days();

  static const std::vector<std::string> kFillerTags = {"nofilter", "food", "travel", "love", "instagood",
                                                       "photooftheday", "city", "friends", "sunset", "weekend"};
  const std::vector<std::string> blm_tags(cfg.blm_tags.begin(), cfg.blm_tags.end());

  struct CityState {
    const CityParams* p;
    std::vector<double> cases_norm;
    SynthCityTruth truth;
  };
  std::vector<CityState> states;
  for (std::size_t ci = 0; ci < cfg.cities.size(); ++ci) {
    const std::string& id = cfg.cities[ci].id;
    const CityParams& p = params.for_city(id);
    CaseSeries cs = generate_cases(p, id, cfg.window, Rng::derive(params.seed, ci, 0));
    const double c0 = static_cast<double>(cs.entries.front().cumulative_cases);
    const double c1 = static_cast<double>(cs.entries.back().cumulative_cases);
    CityState st{&p, {}, {}};
    for (const auto& e : cs.entries)
      st.cases_norm.push_back(c1 > c0 ? (static_cast<double>(e.cumulative_cases) - c0) / (c1 - c0) : 0.0);
    st.truth.city_id = id;
    st.truth.params = p;
    for (const auto& e : cfg.policy_events) {
      if (e.city_id != id) continue;
      (e.kind == PolicyKind::stay_at_home ? st.truth.stay_at_home : st.truth.mask_mandate) = e.effective_date;
    }
    res.cases[id] = std::move(cs);
    states.push_back(std::move(st));
  }

  if (bitmap_root && params.write_bitmaps) std::filesystem::create_directories(*bitmap_root / "masks");

  for (Date d = span.start; d <= span.end; d += std::chrono::days{1}) {
    const long day = days_between(cfg.window.start, d);
    for (std::size_t ci = 0; ci < cfg.cities.size(); ++ci) {
      const City& city = cfg.cities[ci];
      CityState& st = states[ci];
      const CityParams& p = *st.p;
      const bool in_window = cfg.window.contains(d);
      const bool in_blm = cfg.blm_window && cfg.blm_window->contains(d) && cfg.is_blm_city(city.id);
      if (!in_window && !in_blm) continue;

      Rng rng = Rng::derive(params.seed, ci, static_cast<std::uint64_t>(days_between(span.start, d)) + 1);
      const long lag_idx = std::clamp(day - p.case_lag, 0L, window_days - 1);
      const double raw_mask = planted_mask_rate(p, day, st.truth.mask_mandate && d >= *st.truth.mask_mandate,
                                                st.cases_norm[static_cast<std::size_t>(lag_idx)]);
      const double raw_group = p.group_post_rate + (st.truth.stay_at_home && d >= *st.truth.stay_at_home
                                                        ? p.group_policy_effect
                                                        : 0.0);
      if (raw_mask < 0.0 || raw_mask > 1.0 || raw_group < 0.0 || raw_group > p.face_post_rate)
        ++st.truth.clamped_days;

      char date_key[16];
      {
        const std::chrono::year_month_day ymd{d};
        std::snprintf(date_key, sizeof date_key, "%04d%02u%02u", int(ymd.year()), unsigned(ymd.month()),
                      unsigned(ymd.day()));
      }
      for (std::uint64_t k = 0; k < p.posts_per_day; ++k) {
        PostRecord post;
        char idbuf[96];
        std::snprintf(idbuf, sizeof idbuf, "%s-%s-%06llu", city.id.c_str(), date_key,
                      static_cast<unsigned long long>(k));
        post.post_id = idbuf;
        post.city_id = city.id;
        const auto second = static_cast<long>(rng.below(86400));
        post.timestamp = Timestamp{d} + std::chrono::seconds{second} - std::chrono::minutes{city.utc_offset_minutes};

        const bool blm = in_blm && rng.bernoulli(p.blm_share);
        const std::uint64_t n_filler = rng.below(4);
        for (std::uint64_t t = 0; t < n_filler; ++t) post.tags.push_back(kFillerTags[rng.below(kFillerTags.size())]);
        if (blm && !blm_tags.empty()) {
          const std::uint64_t n_blm = 1 + rng.below(2);
          for (std::uint64_t t = 0; t < n_blm; ++t) post.tags.push_back(blm_tags[rng.below(blm_tags.size())]);
        }
        normalize_tags(post.tags);

        if (rng.bernoulli(p.celebrity_rate)) {
          post.like_count = cfg.celebrity_like_threshold + 1 +
                            static_cast<std::uint64_t>(rng.pareto(p.like_scale * 10.0, p.like_tail_alpha));
        } else {
          const double likes = std::floor(rng.pareto(p.like_scale, p.like_tail_alpha) - p.like_scale);
          post.like_count = std::min<std::uint64_t>(static_cast<std::uint64_t>(std::max(0.0, likes)),
                                                    cfg.celebrity_like_threshold);
        }

        const double group_rate = std::clamp(raw_group + (blm ? p.blm_group_delta : 0.0), 0.0, p.face_post_rate);
        const double mask_rate = std::clamp(raw_mask + (blm ? p.blm_mask_delta : 0.0), 0.0, 1.0);
        const double u = rng.uniform();
        std::uint64_t n_faces = 0;
        if (u < group_rate)
          n_faces = 2 + rng.geometric(1.0 / (1.0 + p.extra_faces_mean));
        else if (u < p.face_post_rate)
          n_faces = 1;

        for (std::uint64_t fi = 0; fi < n_faces; ++fi) {
          LandmarkSet lm = generate_landmarks(rng, params.landmark_jitter);
          std::vector<Point> pts = lm.points();
          for (auto& q : pts) q = {std::round(q.x * 10.0) / 10.0, std::round(q.y * 10.0) / 10.0};
          Rect box = lm.face_box();
          box = {std::round(box.x * 10.0) / 10.0, std::round(box.y * 10.0) / 10.0,
                 std::max(0.1, std::round(box.width * 10.0) / 10.0), std::max(0.1, std::round(box.height * 10.0) / 10.0)};
          FaceRecord face{LandmarkSet(std::move(pts), box), MaskLabel::unmasked, 0.0, std::nullopt, std::nullopt};
          const bool masked = rng.bernoulli(mask_rate);
          face.mask_label = masked ? MaskLabel::masked : MaskLabel::unmasked;
          face.mask_probability = std::round((masked ? 0.5 + 0.5 * rng.uniform() : 0.5 * rng.uniform()) * 1e4) / 1e4;
          if (masked && blm) {
            const FitMixture& m = p.fit;
            const double score = rng.bernoulli(m.high_weight) ? rng.beta(m.high_a, m.high_b) : rng.beta(m.low_a, m.low_b);
            const double pct = std::round(score * 1e4) / 1e2;
            face.seg_mask = "masks/" + post.post_id + "_" + std::to_string(fi) + ".pgm";
            if (params.write_bitmaps) {
              constexpr std::size_t grid = 64;
              const BitMask roi = build_roi_raster(face.landmarks, RoiRegion::nose_mouth, grid, grid);
              const double need = pct / 100.0 * static_cast<double>(roi.count());
              BitMask pred(grid, grid);
              for (std::size_t row = grid; row-- > 0 && static_cast<double>(intersection_count(pred, roi)) < need;)
                for (std::size_t col = 0; col < grid; ++col) pred.set(row, col);
              write_pnm_file(*bitmap_root / *face.seg_mask, pred);
            } else {
              face.fit_score = FitScore(pct);
            }
            ++st.truth.scored_faces;
          }
          post.faces.push_back(std::move(face));
        }

        const std::uint64_t masked = post.masked_faces();
        st.truth.posts += 1;
        st.truth.faces += n_faces;
        st.truth.masked += masked;
        st.truth.group_posts += n_faces >= 2;
        st.truth.blm_posts += blm;
        if (masked > 0) {
          st.truth.posts_with_mask += 1;
          st.truth.celebrity_posts_with_mask += is_celebrity(post, cfg.celebrity_like_threshold);
        }
        sink(post);
      }
    }
  }

  nlohmann::ordered_json m;
  m["generator"] = "xoshiro256** seeded by splitmix64; substream per (city index, day offset)";
  m["seed"] = params.seed;
  m["params"] = synth_params_to_json(params);
  m["window"] = {{"start", format_date(cfg.window.start)}, {"end", format_date(cfg.window.end)}};
  m["cities"] = nlohmann::ordered_json::array();
  std::uint64_t total_posts = 0;
  for (auto& st : states) {
    const auto& t = st.truth;
    total_posts += t.posts;
    nlohmann::ordered_json c;
    c["city_id"] = t.city_id;
    c["planted"] = {{"base_mask_rate", t.params.base_mask_rate},
                    {"daily_trend", t.params.daily_trend},
                    {"mask_policy_effect", t.params.mask_policy_effect},
                    {"group_post_rate", t.params.group_post_rate},
                    {"group_policy_effect", t.params.group_policy_effect},
                    {"case_coupling", t.params.case_coupling},
                    {"case_lag", t.params.case_lag},
                    {"celebrity_rate", t.params.celebrity_rate},
                    {"blm_share", t.params.blm_share},
                    {"blm_group_delta", t.params.blm_group_delta},
                    {"blm_mask_delta", t.params.blm_mask_delta}};
    c["stay_at_home"] = t.stay_at_home ? nlohmann::ordered_json(format_date(*t.stay_at_home)) : nlohmann::ordered_json();
    c["mask_mandate"] = t.mask_mandate ? nlohmann::ordered_json(format_date(*t.mask_mandate)) : nlohmann::ordered_json();
    c["realized"] = {{"posts", t.posts},
                     {"faces", t.faces},
                     {"masked_faces", t.masked},
                     {"group_posts", t.group_posts},
                     {"blm_posts", t.blm_posts},
                     {"posts_with_mask", t.posts_with_mask},
                     {"celebrity_posts_with_mask", t.celebrity_posts_with_mask},
                     {"scored_faces", t.scored_faces},
                     {"clamped_days", t.clamped_days}};
    m["cities"].push_back(std::move(c));
    res.truths.push_back(t);
  }
  m["total_posts"] = total_posts;
  res.manifest = std::move(m);
  return res;
}

}  // namespace maskscope
