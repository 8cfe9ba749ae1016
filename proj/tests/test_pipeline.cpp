#include <gtest/gtest.h>

#include <sys/wait.h>

#include <fstream>
#include <random>
#include <sstream>

#include "maskscope/pipeline.hpp"

using namespace maskscope;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = MASKSCOPE_FIXTURES;
const fs::path kMini = kFixtures / "mini";

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("maskscope-test-" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct CliResult {
  int code;
  std::string err;
};

CliResult cli(const std::string& args, const fs::path& scratch) {
  const fs::path err = scratch / "stderr.txt";
  const std::string cmd = std::string(MASKSCOPE_CLI) + " " + args + " 2>" + err.string() + " >/dev/null";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(err)};
}

AnalyzeOptions mini_options(const fs::path& out, unsigned jobs = 1) {
  AnalyzeOptions o;
  o.config = kMini / "config.json";
  o.posts = {kMini / "posts.jsonl"};
  o.cases = kMini / "cases.csv";
  o.out = out;
  o.jobs = jobs;
  return o;
}

std::vector<std::string> listing(const fs::path& dir) {
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(dir)) names.push_back(e.path().filename().string());
  std::sort(names.begin(), names.end());
  return names;
}

}  // namespace

TEST(Analyze, MiniCorpusMatchesGoldenBundle) {
  TempDir t;
  run_analyze(mini_options(t.path / "report"));
  const fs::path golden = kMini / "golden";
  ASSERT_EQ(listing(t.path / "report"), listing(golden));
  for (const auto& name : listing(golden)) EXPECT_EQ(slurp(t.path / "report" / name), slurp(golden / name)) << name;
}

TEST(Analyze, DeterministicAcrossRunsAndJobCounts) {
  TempDir t;
  run_analyze(mini_options(t.path / "a", 1));
  run_analyze(mini_options(t.path / "b", 3));
  for (const auto& name : listing(t.path / "a")) EXPECT_EQ(slurp(t.path / "a" / name), slurp(t.path / "b" / name));
  // rerun over an existing bundle replaces it
  run_analyze(mini_options(t.path / "a", 2));
  for (const auto& name : listing(t.path / "a")) EXPECT_EQ(slurp(t.path / "a" / name), slurp(t.path / "b" / name));
}

TEST(Analyze, InputErrorsCarryFileAndLine) {
  TempDir t;
  const ReportBundle b = run_analyze(mini_options(t.path / "r"));
  const Table* errs = b.find("input_errors");
  ASSERT_TRUE(errs);
  ASSERT_EQ(errs->rows.size(), 3u);
  EXPECT_EQ(errs->rows[0][0], "posts.jsonl");
  EXPECT_EQ(errs->rows[0][1], "41");
  EXPECT_NE(errs->rows[1][2].find("duplicate post_id"), std::string::npos);
  EXPECT_EQ(b.metadata["skipped_unknown_city"].get<int>(), 1);
}

TEST(Analyze, OutputFormats) {
  TempDir t;
  auto o = mini_options(t.path / "csv");
  o.format = OutputFormat::csv;
  run_analyze(o);
  EXPECT_FALSE(fs::exists(t.path / "csv" / "report.txt"));
  EXPECT_TRUE(fs::exists(t.path / "csv" / "city_summary.csv"));
  o.out = t.path / "text";
  o.format = OutputFormat::text;
  run_analyze(o);
  EXPECT_TRUE(fs::exists(t.path / "text" / "report.txt"));
  EXPECT_FALSE(fs::exists(t.path / "text" / "city_summary.csv"));
  EXPECT_TRUE(fs::exists(t.path / "text" / "metadata.json"));
}

TEST(Analyze, FailureLeavesNoPartialOutput) {
  TempDir t;
  auto o = mini_options(t.path / "r");
  o.cases = t.path / "missing.csv";
  EXPECT_THROW(run_analyze(o), Error);
  EXPECT_FALSE(fs::exists(t.path / "r"));
  EXPECT_FALSE(fs::exists(t.path / "r.partial"));
  // an earlier good bundle survives a failed rerun
  run_analyze(mini_options(t.path / "r"));
  const std::string before = slurp(t.path / "r" / "city_summary.csv");
  EXPECT_THROW(run_analyze(o), Error);
  EXPECT_EQ(slurp(t.path / "r" / "city_summary.csv"), before);
}

TEST(Cli, ExitCodes) {
  TempDir t;
  const std::string base = "analyze --config " + (kMini / "config.json").string() + " --posts " +
                           (kMini / "posts.jsonl").string() + " --out " + (t.path / "r").string();
  const auto missing = cli(base + " --cases " + (t.path / "nope.csv").string(), t.path);
  EXPECT_EQ(missing.code, 2);
  EXPECT_NE(missing.err.find("nope.csv"), std::string::npos);
  EXPECT_FALSE(fs::exists(t.path / "r"));

  const auto ok = cli(base + " --cases " + (kMini / "cases.csv").string() + " --jobs 2 --format csv", t.path);
  EXPECT_EQ(ok.code, 0) << ok.err;
  EXPECT_EQ(slurp(t.path / "r" / "trends.csv"), slurp(kMini / "golden" / "trends.csv"));

  std::ofstream(t.path / "bad.json") << "{\"alpha\": 7}";
  const auto badcfg = cli("analyze --config " + (t.path / "bad.json").string() + " --posts " +
                              (kMini / "posts.jsonl").string() + " --cases " + (kMini / "cases.csv").string() +
                              " --out " + (t.path / "r2").string(),
                          t.path);
  EXPECT_EQ(badcfg.code, 2);
  EXPECT_NE(badcfg.err.find("bad.json"), std::string::npos);
  EXPECT_EQ(cli("analyze --posts x", t.path).code, 2);
  EXPECT_EQ(cli("frobnicate", t.path).code, 2);
  EXPECT_EQ(cli("analyze --format xml --posts a --cases b --out c", t.path).code, 2);
}

TEST(Fitscore, FixtureScoresMatchPixelOracle) {
  TempDir t;
  const fs::path out = t.path / "scored.jsonl";
  std::vector<std::string> warnings;
  const auto s = run_fitscore(kFixtures / "fitscore" / "posts.jsonl", kFixtures / "fitscore", out,
                              [&](const std::string& w) { warnings.push_back(w); });
  EXPECT_EQ(s.faces_scored, 20u);
  EXPECT_TRUE(warnings.empty());
  std::map<std::string, double> expected;
  std::ifstream ex(kFixtures / "fitscore" / "expected.csv");
  std::string line;
  std::getline(ex, line);
  while (std::getline(ex, line)) {
    std::stringstream ss(line);
    std::string id, cov, tot, score;
    std::getline(ss, id, ',');
    std::getline(ss, cov, ',');
    std::getline(ss, tot, ',');
    std::getline(ss, score, ',');
    expected[id] = 100.0 * std::stod(cov) / std::stod(tot);
    EXPECT_EQ(expected[id], std::stod(score));
  }
  ASSERT_EQ(expected.size(), 20u);
  std::ifstream in(out), orig(kFixtures / "fitscore" / "posts.jsonl");
  std::string o;
  while (std::getline(in, line) && std::getline(orig, o)) {
    const PostRecord r = parse_post_line(line);
    PostRecord before = parse_post_line(o);
    ASSERT_TRUE(r.faces.at(0).fit_score);
    EXPECT_EQ(r.faces[0].fit_score->value(), expected.at(r.post_id)) << r.post_id;
    before.faces[0].fit_score = r.faces[0].fit_score;
    EXPECT_EQ(before, r);
  }
}

TEST(Fitscore, MissingAndBrokenBitmapsWarnOnly) {
  TempDir t;
  const std::string good = slurp(kFixtures / "fitscore" / "posts.jsonl");
  std::string first = good.substr(0, good.find('\n'));
  std::string missing = first, broken = first;
  missing.replace(missing.find("bitmaps/00.pbm"), 14, "bitmaps/zz.pbm");
  broken.replace(broken.find("bitmaps/00.pbm"), 14, "garbage.pgm");
  std::ofstream(t.path / "garbage.pgm") << "P5\n2 2\n255\n";
  fs::create_directories(t.path / "bitmaps");
  fs::copy_file(kFixtures / "fitscore" / "bitmaps" / "00.pbm", t.path / "bitmaps" / "00.pbm");
  std::ofstream(t.path / "in.jsonl") << first << "\n" << missing << "\n{not json\n" << broken << "\n";
  std::vector<std::string> warnings;
  const auto s = run_fitscore(t.path / "in.jsonl", t.path, t.path / "out.jsonl",
                              [&](const std::string& w) { warnings.push_back(w); });
  EXPECT_EQ(s.lines, 4u);
  EXPECT_EQ(s.faces_scored, 1u);
  EXPECT_EQ(s.faces_missing_bitmap, 1u);
  EXPECT_EQ(s.faces_failed, 1u);
  EXPECT_EQ(s.malformed_lines, 1u);
  EXPECT_EQ(warnings.size(), 3u);
  std::ifstream out(t.path / "out.jsonl");
  std::vector<std::string> lines;
  for (std::string l; std::getline(out, l);) lines.push_back(l);
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_EQ(lines[2], "{not json");
  EXPECT_FALSE(parse_post_line(lines[1]).faces[0].fit_score);
  EXPECT_DOUBLE_EQ(parse_post_line(lines[0]).faces[0].fit_score->value(), 100.0);
}

TEST(Fitscore, FullAndEmptyBitmaps) {
  TempDir t;
  const std::string first = slurp(kFixtures / "fitscore" / "posts.jsonl").substr(0, slurp(kFixtures / "fitscore" / "posts.jsonl").find('\n'));
  const PostRecord r = parse_post_line(first);
  write_pnm_file(t.path / "full.pgm", BitMask(40, 40, true));
  write_pnm_file(t.path / "empty.pgm", BitMask(40, 40, false));
  EXPECT_EQ(score_face(r.faces[0], read_pnm_file(t.path / "full.pgm")).value(), 100.0);
  EXPECT_EQ(score_face(r.faces[0], read_pnm_file(t.path / "empty.pgm")).value(), 0.0);
}

TEST(Synth, CliReproducibleAndFieldErrors) {
  TempDir t;
  std::ofstream(t.path / "p.json") << R"({"seed": 77, "defaults": {"posts_per_day": 3}})";
  ASSERT_EQ(cli("synth --config " + (t.path / "p.json").string() + " --out " + (t.path / "a").string(), t.path).code, 0);
  ASSERT_EQ(cli("synth --config " + (t.path / "p.json").string() + " --out " + (t.path / "b").string(), t.path).code, 0);
  for (const char* f : {"posts.jsonl", "cases.csv", "manifest.json", "config.json"})
    EXPECT_EQ(slurp(t.path / "a" / f), slurp(t.path / "b" / f)) << f;
  std::ofstream(t.path / "bad.json") << R"({"defaults": {"blm_share": 3}})";
  const auto bad = cli("synth --config " + (t.path / "bad.json").string() + " --out " + (t.path / "c").string(), t.path);
  EXPECT_EQ(bad.code, 2);
  EXPECT_NE(bad.err.find("defaults.blm_share"), std::string::npos);
  EXPECT_FALSE(fs::exists(t.path / "c"));
  // synthesized corpus feeds straight into analyze
  const auto ok = cli("analyze --config " + (t.path / "a" / "config.json").string() + " --posts " +
                          (t.path / "a" / "posts.jsonl").string() + " --cases " + (t.path / "a" / "cases.csv").string() +
                          " --out " + (t.path / "r").string(),
                      t.path);
  EXPECT_EQ(ok.code, 0) << ok.err;
}

TEST(Synth, BitmapsRoundTripThroughFitscore) {
  TempDir t;
  nlohmann::json p = {{"seed", 5}, {"write_bitmaps", true}, {"defaults", {{"posts_per_day", 10}, {"blm_share", 0.9}}}};
  run_synth(p, t.path / "s");
  const auto s = run_fitscore(t.path / "s" / "posts.jsonl", t.path / "s", t.path / "scored.jsonl");
  EXPECT_GT(s.faces_scored, 0u);
  EXPECT_EQ(s.faces_missing_bitmap, 0u);
  EXPECT_EQ(s.faces_failed, 0u);
}
