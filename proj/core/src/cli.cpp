#include "memprobe/cli.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <filesystem>
#include <set>

#include "memprobe/error.hpp"
#include "memprobe/experiment.hpp"
#include "memprobe/report.hpp"
#include "memprobe/selftest.hpp"

namespace memprobe {

namespace fs = std::filesystem;

namespace {

RunOptions progress_options(bool quiet, std::ostream& err) {
  RunOptions options;
  if (!quiet) {
    options.log = [&err](std::string_view msg) { err << "memprobe: " << msg << std::endl; };
  }
  return options;
}

void print_report_paths(const fs::path& dir, std::size_t rows, std::ostream& out) {
  const StorePaths store{dir};
  out << rows << " cells\n"
      << store.results_csv().string() << "\n"
      << store.summary_json().string() << "\n"
      << store.panel_svg().string() << "\n";
}

int compare(const std::vector<std::string>& dirs, std::ostream& out) {
  std::vector<RunCell> cells;
  std::set<std::string> names;
  for (const auto& dir : dirs) {
    const ExperimentConfig config = open_store(dir);
    if (!names.insert(config.name).second) {
      throw Error(ErrorCode::InvalidConfig, "two runs are named '" + config.name + "'");
    }
    const std::string key = dataset_key(config);
    for (auto& c : load_cells(dir)) cells.push_back({config.name, key, std::move(c.null)});
  }
  const ComparisonTable table = compare_runs(cells);
  out << "epoch,fraction";
  for (const auto& r : table.runs) out << ",memorization_" << r << ",learning_" << r;
  out << "\n";
  for (const auto& row : table.rows) {
    out << row.epoch << "," << format_number(row.fraction);
    for (std::size_t i = 0; i < table.runs.size(); ++i) {
      out << "," << format_number(row.memorization[i]) << ","
          << format_number(row.learning[i]);
    }
    out << "\n";
  }
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Permutation probe for memorization versus learning in image classifiers",
               "memprobe"};
  app.require_subcommand(1);

  std::string config_path;
  std::string output_dir;
  std::vector<std::string> compare_dirs;
  int threads = 0;
  bool quiet = false;

  auto* run = app.add_subcommand("run", "train, probe every grid cell and write the report");
  run->add_option("--config", config_path, "experiment config (JSON)")->required();
  run->add_option("--output-dir", output_dir, "override the config's output_dir");
  run->add_option("--threads", threads, "permutation workers")->check(CLI::PositiveNumber);
  run->add_flag("-q,--quiet", quiet, "no progress messages");

  auto* res = app.add_subcommand("resume", "compute the cells an interrupted run is missing");
  auto* res_config = res->add_option("--config", config_path, "experiment config (JSON)");
  auto* res_dir = res->add_option("--output-dir", output_dir, "output directory of the run");
  res_config->excludes(res_dir);
  res->add_flag("-q,--quiet", quiet, "no progress messages");

  auto* rep = app.add_subcommand("report", "rewrite results.csv, summary.json and panel.svg");
  rep->add_option("--output-dir", output_dir, "output directory of a run")->required();

  auto* cmp = app.add_subcommand("compare", "memorization/learning evidence of several runs");
  cmp->add_option("--output-dir", compare_dirs, "output directories (two or more)")
      ->required()
      ->expected(2, -1);

  app.add_subcommand("selftest", "fast invariant checks on synthetic data");

  try {
    app.parse(argc, argv);
    if (res->parsed() && config_path.empty() && output_dir.empty()) {
      throw CLI::RequiredError("resume needs --config or --output-dir");
    }
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "memprobe: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (run->parsed()) {
      ExperimentConfig config = load_config(config_path);
      if (!output_dir.empty()) config.output_dir = output_dir;
      if (threads > 0) config.threads = threads;
      run_experiment(config, progress_options(quiet, err));
      const auto cells = write_report(config.output_dir);
      print_report_paths(config.output_dir, cells.size(), out);
    } else if (res->parsed()) {
      const fs::path dir = output_dir.empty() ? fs::path(load_config(config_path).output_dir)
                                              : fs::path(output_dir);
      resume(dir, progress_options(quiet, err));
      const auto cells = write_report(dir);
      print_report_paths(dir, cells.size(), out);
    } else if (rep->parsed()) {
      const auto cells = write_report(output_dir);
      print_report_paths(output_dir, cells.size(), out);
    } else if (cmp->parsed()) {
      return compare(compare_dirs, out);
    } else {
      bool ok = true;
      for (const auto& c : run_selftest()) {
        out << (c.passed ? "PASS " : "FAIL ") << c.name;
        if (!c.passed) out << ": " << c.detail;
        out << "\n";
        ok = ok && c.passed;
      }
      return ok ? 0 : 1;
    }
  } catch (const Error& e) {
    err << "memprobe: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "memprobe: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace memprobe
