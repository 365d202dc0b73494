#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "memprobe/perm_null.hpp"

namespace memprobe {

enum class Verdict { LearnedAndMemorized, MemorizedOnly, LearnedOnly, Neither };

std::string_view to_string(Verdict v);
Verdict verdict_from_string(std::string_view s);

struct DiagnosisThresholds {
  double delta_mem = 0.02;
  double alpha = 0.05;
  bool operator==(const DiagnosisThresholds&) const = default;
};

struct DiagnosisOutcome {
  Verdict verdict = Verdict::Neither;
  bool memorized = false;
  bool learned = false;
  double memorization_evidence = 0.0;  // null median - baseline
  double learning_evidence = 0.0;      // observed - null max
  double p_value = 1.0;                // advisory
  DiagnosisThresholds thresholds;
};

/// Five-number summary of a null; quartiles interpolate linearly between
/// order statistics (R's default quantile type 7).
struct NullSummary {
  double min = 0.0;
  double q25 = 0.0;
  double median = 0.0;
  double q75 = 0.0;
  double max = 0.0;
  double mean = 0.0;
};

double quantile(std::span<const double> values, double q);
NullSummary summarize(std::span<const double> scores);

/// memorized: median(null) > baseline + delta_mem.
/// learned:   empirical p-value of observed <= alpha.
DiagnosisOutcome classify_outcome(const NullDistribution& null,
                                  const DiagnosisThresholds& thresholds = {});

inline constexpr int kMinPermutationsForDiagnosis = 20;

struct RunCell {
  std::string run;
  std::string dataset_key;  // runs are comparable only when these agree
  NullDistribution null;
};

struct PairDifference {
  std::size_t a = 0;
  std::size_t b = 0;
  double memorization = 0.0;  // evidence(a) - evidence(b)
  double learning = 0.0;
};

struct ComparisonRow {
  std::int64_t epoch = 0;
  double fraction = 0.0;
  std::vector<double> memorization;  // per run, in ComparisonTable::runs order
  std::vector<double> learning;
  std::vector<PairDifference> pairs;  // every ordered pair a != b
};

struct ComparisonTable {
  std::vector<std::string> runs;
  std::vector<ComparisonRow> rows;  // sorted by (epoch, fraction)

  const PairDifference& difference(const ComparisonRow& row, std::string_view a,
                                   std::string_view b) const;
  std::size_t run_index(std::string_view run) const;
};

/// Aligns runs by (epoch, fraction), keeping the keys every run has.
/// Throws MismatchedExperimentKeys when runs used different datasets or
/// different fraction suites.
ComparisonTable compare_runs(std::span<const RunCell> results);

}  // namespace memprobe
