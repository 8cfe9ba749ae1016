// Command-line front end: analyze, fitscore, synth.

#include <cstdlib>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "maskscope/pipeline.hpp"

namespace fs = std::filesystem;
using namespace maskscope;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitBadInput = 2;

unsigned default_jobs() {
  const unsigned n = std::thread::hardware_concurrency();
  return n ? n : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mask-wearing and group-posting analysis over social media post records"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  AnalyzeOptions aopt;
  aopt.jobs = default_jobs();
  std::string config_path, format = "both";
  auto* analyze = app.add_subcommand("analyze", "Aggregate posts and run every study into a report bundle");
  analyze->add_option("--config", config_path, "Study config JSON (defaults built in)");
  analyze->add_option("--posts", aopt.posts, "Posts JSONL files")->required()->expected(1, -1);
  analyze->add_option("--cases", aopt.cases, "Cumulative cases CSV")->required();
  analyze->add_option("--out", aopt.out, "Report directory")->required();
  analyze->add_option("--jobs", aopt.jobs, "Parser threads")->check(CLI::PositiveNumber);
  analyze->add_option("--format", format, "Table format")->check(CLI::IsMember({"csv", "text", "both"}));

  std::vector<fs::path> fit_posts;
  fs::path fit_out, fit_root;
  auto* fitscore = app.add_subcommand("fitscore", "Annotate masked faces with fit scores from segmentation bitmaps");
  fitscore->add_option("--posts", fit_posts, "Posts JSONL file")->required()->expected(1);
  fitscore->add_option("--bitmaps", fit_root, "Root that seg_mask paths are relative to (default: posts dir)");
  fitscore->add_option("--out", fit_out, "Annotated JSONL output")->required();

  std::string params_path;
  fs::path synth_out;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus with planted effects");
  synth->add_option("--config", params_path, "Generator params JSON (defaults built in)");
  synth->add_option("--out", synth_out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitBadInput;
  }

  try {
    if (*analyze) {
      if (!config_path.empty()) aopt.config = config_path;
      aopt.format = format == "csv" ? OutputFormat::csv : format == "text" ? OutputFormat::text : OutputFormat::both;
      const ReportBundle b = run_analyze(aopt);
      std::cerr << "analyze: " << b.metadata["records"].get<std::uint64_t>() << " records, "
                << b.metadata["input_errors"].get<std::uint64_t>() << " input errors -> " << aopt.out.string() << "\n";
    } else if (*fitscore) {
      const fs::path root = fit_root.empty() ? fit_posts.front().parent_path() : fit_root;
      const auto s = run_fitscore(fit_posts.front(), root, fit_out,
                                  [](const std::string& m) { std::cerr << "warning: " << m << "\n"; });
      std::cerr << "fitscore: " << s.lines << " lines, " << s.faces_scored << " faces scored, "
                << s.faces_missing_bitmap << " missing bitmaps, " << s.faces_failed << " unreadable bitmaps, "
                << s.malformed_lines << " malformed lines\n";
    } else if (*synth) {
      const auto s = params_path.empty() ? run_synth(nlohmann::json::object(), synth_out)
                                         : run_synth(fs::path(params_path), synth_out);
      std::cerr << "synth: " << s.posts << " posts -> " << s.out.string() << "\n";
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == Errc::numeric_convergence ? kExitInternal : kExitBadInput;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitOk;
}
