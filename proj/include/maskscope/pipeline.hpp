#pragma once

// End-to-end runs behind the command-line tool: analyze, fitscore, synth.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <unordered_set>
#include <vector>

#include "json.hpp"
#include "maskscope/aggregate.hpp"
#include "maskscope/bitmap_io.hpp"
#include "maskscope/config.hpp"
#include "maskscope/mask_fit.hpp"
#include "maskscope/policy.hpp"
#include "maskscope/records.hpp"
#include "maskscope/report.hpp"
#include "maskscope/roi.hpp"
#include "maskscope/synth.hpp"

namespace maskscope {

inline constexpr const char* kToolVersion = "maskscope 1.0.0";

/// Reads a file line by line while hashing every byte.
class HashingLineReader {
 public:
  explicit HashingLineReader(const std::filesystem::path& p) : in_(p, std::ios::binary), buf_(1 << 20) {
    if (!in_) throw Error(Errc::io, "cannot open '" + p.string() + "'");
  }

  bool next(std::string& line) {
    line.clear();
    for (;;) {
      if (pos_ == len_) {
        if (!fill()) return !line.empty();
      }
      const char* start = buf_.data() + pos_;
      const void* nl = std::memchr(start, '\n', len_ - pos_);
      if (nl) {
        const auto n = static_cast<std::size_t>(static_cast<const char*>(nl) - start);
        line.append(start, n);
        pos_ += n + 1;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return true;
      }
      line.append(start, len_ - pos_);
      pos_ = len_;
    }
  }

  std::string digest() {
    while (fill()) pos_ = len_;
    return sha_.hex();
  }

 private:
  bool fill() {
    if (!in_) return false;
    in_.read(buf_.data(), static_cast<std::streamsize>(buf_.size()));
    len_ = static_cast<std::size_t>(in_.gcount());
    pos_ = 0;
    sha_.update(buf_.data(), len_);
    return len_ > 0;
  }

  std::ifstream in_;
  std::vector<char> buf_;
  std::size_t pos_ = 0, len_ = 0;
  Sha256 sha_;
};

inline nlohmann::json read_json_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw Error(Errc::io, "cannot open '" + p.string() + "'");
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(Errc::parse, p.string() + ": malformed JSON");
  return j;
}

inline StudyConfig load_config(const std::filesystem::path& p) {
  try {
    return config_from_json(read_json_file(p));
  } catch (const Error& e) {
    throw Error(e.code(), e.code() == Errc::io ? e.what() : p.string() + ": " + e.what());
  }
}

inline std::map<std::string, CaseSeries> load_cases(const std::filesystem::path& p, const StudyConfig& cfg) {
  std::ifstream in(p);
  if (!in) throw Error(Errc::io, "cannot open cases file '" + p.string() + "'");
  std::set<std::string> ids;
  for (const auto& c : cfg.cities) ids.insert(c.id);
  try {
    return parse_case_series(in, ids);
  } catch (const Error& e) {
    throw Error(e.code(), p.string() + ": " + e.what());
  }
}

inline std::string write_cases_csv(const std::map<std::string, CaseSeries>& cases, const StudyConfig& cfg) {
  std::string out = "date,city_id,cumulative_cases\n";
  for (const auto& c : cfg.cities) {
    const auto it = cases.find(c.id);
    if (it == cases.end()) continue;
    for (const auto& e : it->second.entries)
      out += format_date(e.date) + "," + c.id + "," + std::to_string(e.cumulative_cases) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// analyze

struct InputError {
  std::string file;
  std::size_t line = 0;
  std::string message;
};

struct IngestStats {
  std::uint64_t lines = 0;
  std::uint64_t records = 0;
  std::uint64_t errors = 0;
  std::vector<InputError> first_errors;  // capped at kMaxListedErrors
  std::vector<std::pair<std::string, std::string>> checksums;
};

inline constexpr std::size_t kMaxListedErrors = 1000;
inline constexpr std::size_t kIngestChunk = 4096;

/// Parses posts files into `table`. Lines are parsed in chunks spread over
/// `jobs` threads; aggregation and duplicate detection stay sequential.
/// Memory is bounded by the chunk, the aggregate cells and one 64-bit hash
/// per post id.
inline IngestStats ingest_posts(const std::vector<std::filesystem::path>& files, AggregateTable& table,
                                unsigned jobs) {
  IngestStats stats;
  std::unordered_set<std::uint64_t> seen_ids;
  const std::hash<std::string> hasher;
  jobs = std::max(1u, jobs);

  for (const auto& file : files) {
    HashingLineReader reader(file);
    std::vector<std::string> lines;
    std::vector<std::optional<PostRecord>> parsed;
    std::vector<std::string> errors;
    std::size_t line_base = 0;
    auto report = [&](std::size_t line, std::string msg) {
      ++stats.errors;
      if (stats.first_errors.size() < kMaxListedErrors)
        stats.first_errors.push_back({file.filename().string(), line, std::move(msg)});
    };

    for (bool more = true; more;) {
      lines.clear();
      std::string line;
      while (lines.size() < kIngestChunk && (more = reader.next(line))) lines.push_back(line);
      if (lines.empty()) break;
      parsed.assign(lines.size(), std::nullopt);
      errors.assign(lines.size(), {});
      auto work = [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
          try {
            if (lines[i].find_first_not_of(" \t") == std::string::npos) throw Error(Errc::parse, "empty line");
            parsed[i] = parse_post_line(lines[i]);
          } catch (const std::exception& e) {
            errors[i] = e.what();
          }
        }
      };
      if (jobs == 1) {
        work(0, lines.size());
      } else {
        std::vector<std::thread> pool;
        const std::size_t step = (lines.size() + jobs - 1) / jobs;
        for (std::size_t lo = 0; lo < lines.size(); lo += step)
          pool.emplace_back(work, lo, std::min(lines.size(), lo + step));
        for (auto& t : pool) t.join();
      }
      for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::size_t lineno = line_base + i + 1;
        ++stats.lines;
        if (!parsed[i]) {
          report(lineno, errors[i]);
          continue;
        }
        if (!seen_ids.insert(hasher(parsed[i]->post_id)).second) {
          report(lineno, "duplicate post_id '" + parsed[i]->post_id + "'");
          continue;
        }
        ++stats.records;
        table.add(*parsed[i]);
      }
      line_base += lines.size();
    }
    stats.checksums.emplace_back(file.filename().string(), reader.digest());
  }
  return stats;
}

namespace detail {

inline std::string num(double v, int sig = 6) {
  if (!std::isfinite(v)) return kUndefined;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", sig, v);
  return buf;
}

inline std::string yes_no(bool b) { return b ? "yes" : "no"; }

inline std::string month_key(Date d) { return format_date(d).substr(0, 7); }

}  // namespace detail

/// Assembles every report table from aggregated data. Tables are always
/// present, possibly with no rows.
inline ReportBundle build_report(const AggregateTable& table, const std::map<std::string, CaseSeries>& cases,
                                 const IngestStats& ingest) {
  using detail::num;
  using detail::yes_no;
  const StudyConfig& cfg = table.config();
  ReportBundle b;

  Table summary{"city_summary", {"city", "total_posts", "faces_detected", "masks_detected", "pct_faces_with_masks"}, {}};
  DailyAggregate grand;
  for (const auto& c : cfg.cities) {
    const auto days = table.days(c.id, cfg.window);
    const DailyAggregate t = total(days);
    accumulate(grand, t);
    summary.add({c.name, std::to_string(t.n_posts), std::to_string(t.n_faces), std::to_string(t.n_masked),
                 format_percentage(t.n_masked, t.n_faces)});
  }
  summary.add({"Total", std::to_string(grand.n_posts), std::to_string(grand.n_faces), std::to_string(grand.n_masked),
               format_percentage(grand.n_masked, grand.n_faces)});
  b.tables.push_back(std::move(summary));

  Table monthly{"monthly_masked", {"city", "month", "masked_faces", "faces", "pct_masked"}, {}};
  Table daily{"daily_metrics", {"city", "date", "faces", "masked_faces", "pct_masked", "posts", "group_posts", "pct_group"}, {}};
  for (const auto& c : cfg.cities) {
    const auto days = table.days(c.id, cfg.window);
    for (const auto& m : bucket_aggregates(days, Period::month, cfg.window.start))
      monthly.add({c.id, detail::month_key(m.date), std::to_string(m.n_masked), std::to_string(m.n_faces),
                   format_percentage(m.n_masked, m.n_faces)});
    std::map<Date, const DailyAggregate*> by_date;
    for (const auto& a : days) by_date[a.date] = &a;
    for (Date d = cfg.window.start; d <= cfg.window.end; d += std::chrono::days{1}) {
      DailyAggregate zero;
      const auto it = by_date.find(d);
      const DailyAggregate& a = it == by_date.end() ? zero : *it->second;
      daily.add({c.id, format_date(d), std::to_string(a.n_faces), std::to_string(a.n_masked),
                 format_percentage(a.n_masked, a.n_faces), std::to_string(a.n_posts), std::to_string(a.n_group_posts),
                 format_percentage(a.n_group_posts, a.n_posts)});
    }
  }
  b.tables.push_back(std::move(monthly));

  Table weekly{"weekly_group", {"week", "start_date", "group_posts", "posts", "pct_group"}, {}};
  for (const auto& w : bucket_aggregates(table.pooled_days(cfg.window), Period::week, cfg.window.start))
    weekly.add({std::to_string(days_between(cfg.window.start, w.date) / 7 + 1), format_date(w.date),
                std::to_string(w.n_group_posts), std::to_string(w.n_posts), format_percentage(w.n_group_posts, w.n_posts)});
  b.tables.push_back(std::move(weekly));
  b.tables.push_back(std::move(daily));

  Table policy{"policy_effects",
               {"city", "policy", "effective_date", "metric", "days_before", "days_after", "mean_before", "mean_after",
                "sd_before", "sd_after", "t", "df", "p", "significant", "note"},
               {}};
  for (const auto& row : policy_study(table)) {
    const auto& e = row.event;
    if (row.result) {
      const auto& r = *row.result;
      policy.add({e.city_id, policy_kind_name(e.kind), format_date(e.effective_date), metric_name(row.metric),
                  std::to_string(r.days_before), std::to_string(r.days_after), format_fixed(r.mean_before),
                  format_fixed(r.mean_after), format_fixed(r.welch.sd_before), format_fixed(r.welch.sd_after),
                  num(r.welch.t), num(r.welch.df), num(r.welch.p), yes_no(r.significant), ""});
    } else {
      policy.add({e.city_id, policy_kind_name(e.kind), format_date(e.effective_date), metric_name(row.metric), "", "",
                  "", "", "", "", "", "", "", "", row.note});
    }
  }
  b.tables.push_back(std::move(policy));

  Table trends{"trends", {"city", "s", "variance", "z", "p", "significant", "note"}, {}};
  for (const auto& row : trend_study(table)) {
    if (row.result)
      trends.add({row.city_id, std::to_string(row.result->s_statistic), num(row.result->variance), num(row.result->z),
                  num(row.result->p), yes_no(is_significant(row.result->p, cfg.alpha)), ""});
    else
      trends.add({row.city_id, "", "", "", "", "", row.note});
  }
  b.tables.push_back(std::move(trends));

  Table corr{"correlations", {"city", "method", "max_lag", "r", "n", "p", "significant", "note"}, {}};
  for (const auto& row : correlation_study(table, cases)) {
    if (row.result)
      corr.add({row.city_id, method_name(row.method), std::to_string(row.result->lag), num(row.result->r),
                std::to_string(row.result->n), num(row.result->p), yes_no(is_significant(row.result->p, cfg.alpha)), ""});
    else
      corr.add({row.city_id, method_name(row.method), "", "", "", "", "", row.note});
  }
  b.tables.push_back(std::move(corr));

  Table blm{"blm_comparisons", {"city", "metric", "blm_pct", "non_blm_pct", "difference_pp", "note"}, {}};
  for (const auto& row : blm_study(table)) {
    if (row.result)
      blm.add({row.city_id, metric_name(row.metric), format_fixed(row.result->blm), format_fixed(row.result->non_blm),
               format_fixed(row.result->difference), ""});
    else
      blm.add({row.city_id, metric_name(row.metric), "", "", "", row.note});
  }
  b.tables.push_back(std::move(blm));

  std::vector<std::string> hist_cols{"city", "cohort"};
  for (int i = 1; i <= 10; ++i) hist_cols.push_back("bin_" + std::to_string(i));
  for (const char* c : {"total", "pct_above_80", "pct_above_90"}) hist_cols.push_back(c);
  Table hist{"fit_histograms", hist_cols, {}};
  if (cfg.blm_window) {
    for (const auto& city : cfg.blm_cities)
      for (std::optional<Cohort> cohort : {std::optional<Cohort>(Cohort::blm), std::optional<Cohort>()}) {
        const FitHistogram h = total(table.days(city, *cfg.blm_window, cohort)).fit_hist;
        std::vector<std::string> r{city, cohort ? "blm" : "all"};
        for (auto n : h.bins) r.push_back(std::to_string(n));
        r.push_back(std::to_string(h.total));
        r.push_back(h.total ? format_fixed(share_above(h, 8)) : kUndefined);
        r.push_back(h.total ? format_fixed(share_above(h, 9)) : kUndefined);
        hist.add(std::move(r));
      }
  }
  b.tables.push_back(std::move(hist));

  Table celeb{"celebrity_share", {"scope", "posts_with_mask", "celebrity_posts_with_mask", "pct"}, {}};
  DailyAggregate all_span;
  for (const auto& c : cfg.cities) accumulate(all_span, total(table.days(c.id, cfg.window)));
  celeb.add({"study_window", std::to_string(all_span.n_posts_with_mask), std::to_string(all_span.n_celebrity_posts_with_mask),
             format_percentage(all_span.n_celebrity_posts_with_mask, all_span.n_posts_with_mask)});
  b.tables.push_back(std::move(celeb));

  Table errs{"input_errors", {"file", "line", "message"}, {}};
  for (const auto& e : ingest.first_errors) errs.add({e.file, std::to_string(e.line), e.message});
  b.tables.push_back(std::move(errs));

  nlohmann::ordered_json m;
  m["tool"] = kToolVersion;
  m["config_sha256"] = sha256_hex(config_to_json(cfg).dump());
  m["window"] = {{"start", format_date(cfg.window.start)}, {"end", format_date(cfg.window.end)}};
  if (cfg.blm_window)
    m["blm_window"] = {{"start", format_date(cfg.blm_window->start)}, {"end", format_date(cfg.blm_window->end)}};
  m["alpha"] = cfg.alpha;
  m["inputs"] = nlohmann::ordered_json::array();
  for (const auto& [name, digest] : ingest.checksums) m["inputs"].push_back({{"file", name}, {"sha256", digest}});
  m["lines"] = ingest.lines;
  m["records"] = ingest.records;
  m["input_errors"] = ingest.errors;
  m["skipped_unknown_city"] = table.skipped_unknown_city();
  m["skipped_out_of_window"] = table.skipped_out_of_window();
  m["tables"] = nlohmann::ordered_json::array();
  for (const auto& t : b.tables) m["tables"].push_back(t.name);
  b.metadata = std::move(m);
  return b;
}

struct AnalyzeOptions {
  std::optional<std::filesystem::path> config;
  std::vector<std::filesystem::path> posts;
  std::filesystem::path cases;
  std::filesystem::path out;
  unsigned jobs = 1;
  OutputFormat format = OutputFormat::both;
};

/// Loads inputs, runs every study and commits the bundle to `out` in one
/// rename. Input problems surface as Error before anything is written.
inline ReportBundle run_analyze(const AnalyzeOptions& opt) {
  const StudyConfig cfg = opt.config ? load_config(*opt.config) : default_config();
  if (opt.posts.empty()) throw Error(Errc::io, "no posts files given");
  for (const auto& p : opt.posts)
    if (!std::filesystem::is_regular_file(p)) throw Error(Errc::io, "cannot open posts file '" + p.string() + "'");
  const auto cases = load_cases(opt.cases, cfg);

  AggregateTable table(&cfg);
  IngestStats ingest = ingest_posts(opt.posts, table, opt.jobs);
  {
    HashingLineReader r(opt.cases);
    ingest.checksums.emplace_back(opt.cases.filename().string(), r.digest());
  }
  ReportBundle bundle = build_report(table, cases, ingest);
  StagedDirectory dir(opt.out);
  write_bundle(dir, bundle, opt.format);
  dir.commit();
  return bundle;
}

// ---------------------------------------------------------------------------
// fitscore

struct FitscoreSummary {
  std::uint64_t lines = 0;
  std::uint64_t malformed_lines = 0;
  std::uint64_t faces_scored = 0;
  std::uint64_t faces_missing_bitmap = 0;
  std::uint64_t faces_failed = 0;
};

/// Nose-mouth fit score of one face against its segmentation bitmap, which
/// is taken to span the face box.
inline FitScore score_face(const FaceRecord& face, const BitMask& pred) {
  const BitMask roi = build_roi_raster(face.landmarks, RoiRegion::nose_mouth, pred.width(), pred.height());
  return fit_score(pred, roi);
}

/// Annotates every masked face that has a readable bitmap. Faces whose
/// bitmap is missing or unusable are left unscored with a warning;
/// malformed lines are copied through unchanged.
inline FitscoreSummary run_fitscore(const std::filesystem::path& posts, const std::filesystem::path& bitmap_root,
                                    const std::filesystem::path& out,
                                    const std::function<void(const std::string&)>& warn = {}) {
  HashingLineReader reader(posts);
  const auto tmp = out.string() + ".partial";
  std::ofstream os(tmp, std::ios::binary);
  if (!os) throw Error(Errc::io, "cannot write '" + tmp + "'");
  FitscoreSummary s;
  auto warning = [&](const std::string& m) {
    if (warn) warn(m);
  };
  std::string line;
  while (reader.next(line)) {
    ++s.lines;
    PostRecord rec;
    try {
      rec = parse_post_line(line);
    } catch (const std::exception& e) {
      ++s.malformed_lines;
      warning("line " + std::to_string(s.lines) + ": " + e.what() + " (copied unchanged)");
      os << line << '\n';
      continue;
    }
    for (std::size_t i = 0; i < rec.faces.size(); ++i) {
      FaceRecord& f = rec.faces[i];
      if (!f.masked() || !f.seg_mask) continue;
      f.fit_score.reset();
      const auto path = bitmap_root / *f.seg_mask;
      const std::string where = "line " + std::to_string(s.lines) + " face " + std::to_string(i);
      if (!std::filesystem::is_regular_file(path)) {
        ++s.faces_missing_bitmap;
        warning(where + ": missing bitmap '" + path.string() + "'");
        continue;
      }
      try {
        f.fit_score = score_face(f, read_pnm_file(path));
        ++s.faces_scored;
      } catch (const Error& e) {
        ++s.faces_failed;
        warning(where + ": " + e.what());
      }
    }
    os << serialize_post(rec) << '\n';
  }
  os.close();
  if (!os) throw Error(Errc::io, "cannot write '" + tmp + "'");
  std::filesystem::rename(tmp, out);
  return s;
}

// ---------------------------------------------------------------------------
// synth

struct SynthRunSummary {
  std::uint64_t posts = 0;
  std::filesystem::path out;
};

/// Writes posts.jsonl, cases.csv, config.json and manifest.json (plus
/// masks/ when bitmaps are requested). The params file may embed a
/// "config" object; otherwise the default study config is used.
inline SynthRunSummary run_synth(const nlohmann::json& params_json, const std::filesystem::path& out_dir) {
  const SynthParams params = synth_params_from_json(params_json);
  const StudyConfig cfg = params_json.contains("config") ? config_from_json(params_json.at("config")) : default_config();
  StagedDirectory dir(out_dir);
  SynthRunSummary summary{0, out_dir};
  std::ofstream posts(dir.path() / "posts.jsonl", std::ios::binary);
  if (!posts) throw Error(Errc::io, "cannot write posts.jsonl");
  const SynthResult res = generate_corpus(
      params, cfg,
      [&](const PostRecord& p) {
        posts << serialize_post(p) << '\n';
        ++summary.posts;
      },
      dir.path());
  posts.close();
  if (!posts) throw Error(Errc::io, "failed writing posts.jsonl");
  dir.write_file("cases.csv", write_cases_csv(res.cases, cfg));
  dir.write_file("config.json", config_to_json(cfg).dump(2) + "\n");
  dir.write_file("manifest.json", res.manifest.dump(2) + "\n");
  dir.commit();
  return summary;
}

inline SynthRunSummary run_synth(const std::filesystem::path& params_path, const std::filesystem::path& out_dir) {
  nlohmann::json j;
  try {
    j = read_json_file(params_path);
  } catch (const Error& e) {
    throw Error(e.code(), e.what());
  }
  try {
    return run_synth(j, out_dir);
  } catch (const Error& e) {
    if (e.code() == Errc::io) throw;
    throw Error(e.code(), params_path.string() + ": " + e.what());
  }
}

}  // namespace maskscope
