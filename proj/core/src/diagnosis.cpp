#include "memprobe/diagnosis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "memprobe/error.hpp"

namespace memprobe {

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::LearnedAndMemorized: return "learned_and_memorized";
    case Verdict::MemorizedOnly: return "memorized_only";
    case Verdict::LearnedOnly: return "learned_only";
    case Verdict::Neither: return "neither";
  }
  return "?";
}

Verdict verdict_from_string(std::string_view s) {
  for (auto v : {Verdict::LearnedAndMemorized, Verdict::MemorizedOnly, Verdict::LearnedOnly,
                 Verdict::Neither}) {
    if (to_string(v) == s) return v;
  }
  throw Error(ErrorCode::InvalidConfig, "unknown verdict '" + std::string(s) + "'");
}

double quantile(std::span<const double> values, double q) {
  if (values.empty()) throw Error(ErrorCode::EmptyInput, "quantile of nothing");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

NullSummary summarize(std::span<const double> scores) {
  if (scores.empty()) throw Error(ErrorCode::EmptyInput, "summary of an empty null");
  NullSummary s;
  s.min = *std::min_element(scores.begin(), scores.end());
  s.max = *std::max_element(scores.begin(), scores.end());
  s.q25 = quantile(scores, 0.25);
  s.median = quantile(scores, 0.5);
  s.q75 = quantile(scores, 0.75);
  s.mean = std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(scores.size());
  return s;
}

DiagnosisOutcome classify_outcome(const NullDistribution& null,
                                  const DiagnosisThresholds& thresholds) {
  if (null.B < kMinPermutationsForDiagnosis ||
      static_cast<int>(null.scores.size()) < kMinPermutationsForDiagnosis) {
    throw Error(ErrorCode::InsufficientPermutations,
                "B = " + std::to_string(null.B) + " < " +
                    std::to_string(kMinPermutationsForDiagnosis));
  }
  const NullSummary s = summarize(null.scores);
  DiagnosisOutcome out;
  out.thresholds = thresholds;
  out.memorization_evidence = s.median - null.baseline;
  out.learning_evidence = null.observed - s.max;
  out.p_value = empirical_p_value(null.scores, null.observed);
  out.memorized = s.median > null.baseline + thresholds.delta_mem;
  out.learned = out.p_value <= thresholds.alpha;
  if (out.learned) {
    out.verdict = out.memorized ? Verdict::LearnedAndMemorized : Verdict::LearnedOnly;
  } else {
    out.verdict = out.memorized ? Verdict::MemorizedOnly : Verdict::Neither;
  }
  return out;
}

std::size_t ComparisonTable::run_index(std::string_view run) const {
  const auto it = std::find(runs.begin(), runs.end(), run);
  if (it == runs.end()) throw Error(ErrorCode::MismatchedExperimentKeys, "no run '" + std::string(run) + "'");
  return static_cast<std::size_t>(it - runs.begin());
}

const PairDifference& ComparisonTable::difference(const ComparisonRow& row, std::string_view a,
                                                  std::string_view b) const {
  const std::size_t ia = run_index(a);
  const std::size_t ib = run_index(b);
  for (const auto& p : row.pairs) {
    if (p.a == ia && p.b == ib) return p;
  }
  throw Error(ErrorCode::MismatchedExperimentKeys, "no pair " + std::string(a) + "/" + std::string(b));
}

ComparisonTable compare_runs(std::span<const RunCell> results) {
  if (results.empty()) throw Error(ErrorCode::EmptyInput, "nothing to compare");

  ComparisonTable table;
  std::map<std::string, std::set<double>> fractions_by_run;
  std::map<std::string, std::map<std::pair<std::int64_t, double>, const NullDistribution*>> cells;
  const std::string& dataset_key = results.front().dataset_key;
  for (const RunCell& r : results) {
    if (r.dataset_key != dataset_key) {
      throw Error(ErrorCode::MismatchedExperimentKeys,
                  "run '" + r.run + "' used dataset '" + r.dataset_key + "', expected '" +
                      dataset_key + "'");
    }
    if (std::find(table.runs.begin(), table.runs.end(), r.run) == table.runs.end()) {
      table.runs.push_back(r.run);
    }
    fractions_by_run[r.run].insert(r.null.fraction);
    cells[r.run][{r.null.epoch, r.null.fraction}] = &r.null;
  }
  const auto& fractions = fractions_by_run[table.runs.front()];
  for (const auto& [run, fr] : fractions_by_run) {
    if (fr != fractions) {
      throw Error(ErrorCode::MismatchedExperimentKeys, "run '" + run + "' used a different fraction suite");
    }
  }

  for (const auto& [key, first] : cells[table.runs.front()]) {
    ComparisonRow row;
    row.epoch = key.first;
    row.fraction = key.second;
    bool everywhere = true;
    for (const auto& run : table.runs) {
      const auto it = cells[run].find(key);
      if (it == cells[run].end()) {
        everywhere = false;
        break;
      }
      const NullSummary s = summarize(it->second->scores);
      row.memorization.push_back(s.median - it->second->baseline);
      row.learning.push_back(it->second->observed - s.max);
    }
    if (!everywhere) continue;
    for (std::size_t a = 0; a < table.runs.size(); ++a) {
      for (std::size_t b = 0; b < table.runs.size(); ++b) {
        if (a == b) continue;
        row.pairs.push_back({a, b, row.memorization[a] - row.memorization[b],
                             row.learning[a] - row.learning[b]});
      }
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace memprobe
