#pragma once

// Post and face records (one JSON object per line), cumulative case series
// (CSV) and the tag/like classifiers applied to posts.

#include <algorithm>
#include <cctype>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "maskscope/civil_date.hpp"
#include "maskscope/config.hpp"
#include "maskscope/error.hpp"
#include "maskscope/mask_fit.hpp"
#include "maskscope/roi.hpp"
#include "maskscope/series.hpp"

namespace maskscope {

enum class MaskLabel { masked, unmasked };

struct FaceRecord {
  LandmarkSet landmarks;
  MaskLabel mask_label = MaskLabel::unmasked;
  double mask_probability = 0.0;
  std::optional<std::string> seg_mask;
  std::optional<FitScore> fit_score;

  bool masked() const { return mask_label == MaskLabel::masked; }
  friend bool operator==(const FaceRecord&, const FaceRecord&) = default;
};

struct PostRecord {
  std::string post_id;
  std::string city_id;
  Timestamp timestamp;
  std::vector<std::string> tags;  // lowercase, sorted, unique
  std::uint64_t like_count = 0;
  std::vector<FaceRecord> faces;

  std::size_t masked_faces() const {
    return static_cast<std::size_t>(
        std::count_if(faces.begin(), faces.end(), [](const FaceRecord& f) { return f.masked(); }));
  }
  friend bool operator==(const PostRecord&, const PostRecord&) = default;
};

inline std::string to_lower_ascii(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

inline void normalize_tags(std::vector<std::string>& tags) {
  for (auto& t : tags) t = to_lower_ascii(std::move(t));
  std::sort(tags.begin(), tags.end());
  tags.erase(std::unique(tags.begin(), tags.end()), tags.end());
}

/// Exact token match against the protest tag list.
inline bool classify_blm(const std::vector<std::string>& tags, const std::set<std::string>& blm_tags) {
  return std::any_of(tags.begin(), tags.end(), [&](const std::string& t) { return blm_tags.count(t) > 0; });
}

/// Strictly more likes than the threshold.
inline bool is_celebrity(const PostRecord& post, std::uint64_t threshold) { return post.like_count > threshold; }

// ---------------------------------------------------------------------------
// JSON lines

inline nlohmann::ordered_json to_json(const FaceRecord& f) {
  nlohmann::ordered_json j;
  auto pts = nlohmann::ordered_json::array();
  for (const auto& p : f.landmarks.points()) pts.push_back({p.x, p.y});
  j["landmarks"] = std::move(pts);
  const Rect& b = f.landmarks.face_box();
  j["face_box"] = {b.x, b.y, b.width, b.height};
  j["mask_label"] = f.masked() ? "masked" : "unmasked";
  j["mask_probability"] = f.mask_probability;
  if (f.seg_mask) j["seg_mask"] = *f.seg_mask;
  if (f.fit_score) j["fit_score"] = f.fit_score->value();
  return j;
}

inline nlohmann::ordered_json to_json(const PostRecord& r) {
  nlohmann::ordered_json j;
  j["post_id"] = r.post_id;
  j["city_id"] = r.city_id;
  j["timestamp"] = format_timestamp(r.timestamp);
  j["tags"] = r.tags;
  j["like_count"] = r.like_count;
  auto faces = nlohmann::ordered_json::array();
  for (const auto& f : r.faces) faces.push_back(to_json(f));
  j["faces"] = std::move(faces);
  return j;
}

inline std::string serialize_post(const PostRecord& r) { return to_json(r).dump(); }

namespace detail {

[[noreturn]] inline void field_error(const std::string& msg) { throw Error(Errc::parse, msg); }

inline const nlohmann::json& require(const nlohmann::json& obj, const char* key, const char* where) {
  const auto it = obj.find(key);
  if (it == obj.end()) field_error(std::string("missing field '") + key + "' in " + where);
  return *it;
}

inline double number_of(const nlohmann::json& v, const char* what) {
  if (!v.is_number()) field_error(std::string(what) + " must be a number");
  return v.get<double>();
}

inline FaceRecord face_from_json(const nlohmann::json& j, std::size_t index) {
  const std::string where = "face " + std::to_string(index);
  if (!j.is_object()) field_error(where + " is not an object");
  const auto& lm = require(j, "landmarks", where.c_str());
  if (!lm.is_array()) field_error("landmarks must be an array in " + where);
  if (lm.size() != kLandmarkCount)
    field_error("landmark count " + std::to_string(lm.size()) + " != 68 in " + where);
  std::vector<Point> pts;
  pts.reserve(kLandmarkCount);
  for (const auto& p : lm) {
    if (!p.is_array() || p.size() != 2) field_error("landmark must be an [x, y] pair in " + where);
    pts.push_back({number_of(p[0], "landmark x"), number_of(p[1], "landmark y")});
  }
  Rect box;
  if (const auto it = j.find("face_box"); it != j.end()) {
    if (!it->is_array() || it->size() != 4) field_error("face_box must be [x, y, width, height] in " + where);
    box = {number_of((*it)[0], "face_box"), number_of((*it)[1], "face_box"), number_of((*it)[2], "face_box"),
           number_of((*it)[3], "face_box")};
  } else {
    auto [xmin, xmax] = std::minmax_element(pts.begin(), pts.end(), [](auto& a, auto& b) { return a.x < b.x; });
    auto [ymin, ymax] = std::minmax_element(pts.begin(), pts.end(), [](auto& a, auto& b) { return a.y < b.y; });
    box = {xmin->x, ymin->y, xmax->x - xmin->x, ymax->y - ymin->y};
  }

  const auto& label = require(j, "mask_label", where.c_str());
  MaskLabel ml;
  if (label == "masked")
    ml = MaskLabel::masked;
  else if (label == "unmasked")
    ml = MaskLabel::unmasked;
  else
    field_error("mask_label must be \"masked\" or \"unmasked\" in " + where);
  const double prob = number_of(require(j, "mask_probability", where.c_str()), "mask_probability");
  if (!(prob >= 0.0 && prob <= 1.0))
    field_error("mask_probability " + std::to_string(prob) + " outside [0, 1] in " + where);

  std::optional<std::string> seg;
  if (const auto it = j.find("seg_mask"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) field_error("seg_mask must be a string in " + where);
    seg = it->get<std::string>();
  }
  std::optional<FitScore> fit;
  if (const auto it = j.find("fit_score"); it != j.end() && !it->is_null()) {
    if (!seg || ml != MaskLabel::masked) field_error("fit_score requires a masked face with seg_mask in " + where);
    try {
      fit = FitScore(number_of(*it, "fit_score"));
    } catch (const Error& e) {
      field_error(std::string(e.what()) + " in " + where);
    }
  }
  try {
    return FaceRecord{LandmarkSet(std::move(pts), box), ml, prob, std::move(seg), fit};
  } catch (const Error& e) {
    field_error(std::string(e.what()) + " in " + where);
  }
}

}  // namespace detail

inline PostRecord post_from_json(const nlohmann::json& j) {
  using detail::field_error;
  using detail::require;
  if (!j.is_object()) field_error("record is not a JSON object");
  PostRecord r;
  const auto& id = require(j, "post_id", "record");
  const auto& city = require(j, "city_id", "record");
  const auto& ts = require(j, "timestamp", "record");
  if (!id.is_string() || !city.is_string() || !ts.is_string())
    field_error("post_id, city_id and timestamp must be strings");
  r.post_id = id.get<std::string>();
  r.city_id = city.get<std::string>();
  if (r.post_id.empty()) field_error("post_id is empty");
  const auto t = try_parse_timestamp(ts.get_ref<const std::string&>());
  if (!t) field_error("timestamp '" + ts.get<std::string>() + "' is not ISO-8601");
  r.timestamp = *t;
  const auto& tags = require(j, "tags", "record");
  if (!tags.is_array()) field_error("tags must be an array");
  for (const auto& tag : tags) {
    if (!tag.is_string()) field_error("tags must be strings");
    r.tags.push_back(tag.get<std::string>());
  }
  normalize_tags(r.tags);
  const auto& likes = require(j, "like_count", "record");
  if (!likes.is_number_unsigned()) field_error("like_count must be a non-negative integer");
  r.like_count = likes.get<std::uint64_t>();
  const auto& faces = require(j, "faces", "record");
  if (!faces.is_array()) field_error("faces must be an array");
  r.faces.reserve(faces.size());
  for (std::size_t i = 0; i < faces.size(); ++i) r.faces.push_back(detail::face_from_json(faces[i], i));
  return r;
}

inline PostRecord parse_post_line(std::string_view line) {
  nlohmann::json j = nlohmann::json::parse(line.begin(), line.end(), nullptr, false);
  if (j.is_discarded()) throw Error(Errc::parse, "malformed JSON");
  return post_from_json(j);
}

struct LineError {
  std::size_t line = 0;  // 1-based
  std::string message;

  friend bool operator==(const LineError&, const LineError&) = default;
};

/// Streams records to `on_record`; a bad line becomes a LineError and the
/// stream continues. Returns the number of lines read.
inline std::size_t for_each_post(std::istream& in, const std::function<void(PostRecord&&)>& on_record,
                                 const std::function<void(LineError&&)>& on_error) {
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    try {
      if (line.find_first_not_of(" \t") == std::string::npos) throw Error(Errc::parse, "empty line");
      on_record(parse_post_line(line));
    } catch (const Error& e) {
      on_error({n, e.what()});
    } catch (const std::exception& e) {
      on_error({n, std::string("unexpected: ") + e.what()});
    }
  }
  return n;
}

struct PostParseResult {
  std::vector<PostRecord> records;
  std::vector<LineError> errors;
};

inline PostParseResult parse_posts(std::istream& in) {
  PostParseResult out;
  for_each_post(in, [&](PostRecord&& r) { out.records.push_back(std::move(r)); },
                [&](LineError&& e) { out.errors.push_back(std::move(e)); });
  return out;
}

// ---------------------------------------------------------------------------
// Case series

struct CaseEntry {
  Date date;
  std::uint64_t cumulative_cases = 0;

  friend bool operator==(const CaseEntry&, const CaseEntry&) = default;
};

/// Consecutive daily cumulative counts for one city.
struct CaseSeries {
  std::string city_id;
  std::vector<CaseEntry> entries;

  DatedSeries as_series() const {
    DatedSeries s;
    s.reserve(entries.size());
    for (const auto& e : entries) s.push_back({e.date, static_cast<double>(e.cumulative_cases)});
    return s;
  }
};

/// Checks ordering, gaps and monotonicity; entries must already be sorted.
inline void validate(const CaseSeries& s) {
  for (std::size_t i = 1; i < s.entries.size(); ++i) {
    const auto& prev = s.entries[i - 1];
    const auto& cur = s.entries[i];
    if (cur.date <= prev.date)
      throw Error(Errc::parse, s.city_id + ": duplicate or unordered date " + format_date(cur.date));
    if (cur.date != prev.date + std::chrono::days{1})
      throw Error(Errc::gap, s.city_id + ": missing date " + format_date(prev.date + std::chrono::days{1}));
    if (cur.cumulative_cases < prev.cumulative_cases)
      throw Error(Errc::monotonicity, s.city_id + ": cumulative cases drop from " +
                                          std::to_string(prev.cumulative_cases) + " to " +
                                          std::to_string(cur.cumulative_cases) + " on " + format_date(cur.date));
  }
}

/// CSV with header `date,city_id,cumulative_cases`; rows may come in any
/// order. When `known_cities` is non-empty, other city ids are rejected.
inline std::map<std::string, CaseSeries> parse_case_series(std::istream& in,
                                                           const std::set<std::string>& known_cities = {}) {
  std::string line;
  std::size_t n = 0;
  auto fail = [&n](Errc c, const std::string& msg) -> Error {
    return Error(c, "line " + std::to_string(n) + ": " + msg);
  };
  auto trim_cr = [](std::string& s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
  };
  if (!std::getline(in, line)) throw Error(Errc::parse, "cases: empty input");
  ++n;
  trim_cr(line);
  if (line != "date,city_id,cumulative_cases")
    throw fail(Errc::parse, "expected header 'date,city_id,cumulative_cases'");

  std::map<std::string, CaseSeries> out;
  while (std::getline(in, line)) {
    ++n;
    trim_cr(line);
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cols.push_back(c);
    if (cols.size() != 3) throw fail(Errc::parse, "expected 3 columns");
    const auto date = try_parse_date(cols[0]);
    if (!date) throw fail(Errc::parse, "bad date '" + cols[0] + "'");
    if (!known_cities.empty() && !known_cities.count(cols[1]))
      throw fail(Errc::reference, "unknown city_id '" + cols[1] + "'");
    std::uint64_t v = 0;
    if (cols[2].empty() || cols[2].find_first_not_of("0123456789") != std::string::npos)
      throw fail(Errc::parse, "cumulative_cases must be a non-negative integer");
    try {
      v = std::stoull(cols[2]);
    } catch (const std::exception&) {
      throw fail(Errc::parse, "cumulative_cases out of range");
    }
    auto& series = out[cols[1]];
    series.city_id = cols[1];
    series.entries.push_back({*date, v});
  }
  for (auto& [id, s] : out) {
    std::stable_sort(s.entries.begin(), s.entries.end(),
                     [](const CaseEntry& a, const CaseEntry& b) { return a.date < b.date; });
    validate(s);
  }
  return out;
}

}  // namespace maskscope
