#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "memprobe/forest.hpp"

namespace memprobe {

/// Permutation null for one (epoch, fraction) cell, plus the observed score
/// and the random-guess baseline it is read against.
struct NullDistribution {
  std::vector<double> scores;
  double observed = 0.0;
  double baseline = 0.0;
  int B = 0;
  std::int64_t epoch = 0;
  double fraction = 0.0;
  ForestParams forest_params;
  std::uint64_t seed = 0;
};

/// Sum of squared label proportions: the expected accuracy of guessing with
/// the label marginals.
double baseline_guess(std::span<const int> labels);

/// (1 + #{scores >= observed}) / (B + 1).
double empirical_p_value(std::span<const double> null_scores, double observed);

/// Seeds used for one probe. The observed forest draws from
/// derive_seed(seed, ObservedForest); permutation i shuffles labels with
/// derive_seed(seed, LabelShuffle, i) and fits with
/// derive_seed(seed, PermutationForest, i).
struct ProbeSeeds {
  static std::uint64_t observed_forest(std::uint64_t seed);
  static std::uint64_t label_shuffle(std::uint64_t seed, int permutation);
  static std::uint64_t permutation_forest(std::uint64_t seed, int permutation);
};

/// Shallow-classifier probe over one training feature matrix. Fits are keyed
/// only on (training features, labels, seed), so a single observed fit and B
/// permutation fits serve any number of s-validation targets; scores are
/// identical to probing each target on its own.
class PermutationProbe {
 public:
  PermutationProbe(Eigen::MatrixXd train_features, std::vector<int> train_labels,
                   ForestParams params, std::uint64_t seed);

  const Forest& observed_forest();

  /// Accuracy of the real-label forest on `target` against `target_labels`
  /// (defaults to the training labels).
  double observed_score(const Eigen::MatrixXd& target);
  double observed_score(const Eigen::MatrixXd& target, std::span<const int> target_labels);

  /// scores[t][i]: accuracy on targets[t] of the forest fit to the i-th
  /// shuffle, scored against that shuffle. Permutations are distributed over
  /// `threads` workers; the result does not depend on the thread count.
  std::vector<std::vector<double>> null_scores(std::span<const Eigen::MatrixXd* const> targets,
                                               int B, int threads = 1) const;

  const std::vector<int>& labels() const { return labels_; }
  std::uint64_t seed() const { return seed_; }
  const ForestParams& params() const { return params_; }

 private:
  void check_target(const Eigen::MatrixXd& target) const;
  std::vector<double> one_permutation(std::span<const Eigen::MatrixXd* const> targets,
                                      int permutation) const;

  PresortedFeatures train_;
  std::vector<int> labels_;
  ForestParams params_;
  std::uint64_t seed_;
  std::optional<Forest> observed_;
};

/// Fit on (train_feats, train_labels), predict sval_feats, score against
/// train_labels.
double observed_score(const Eigen::MatrixXd& train_feats, std::span<const int> train_labels,
                      const Eigen::MatrixXd& sval_feats, const ForestParams& params,
                      std::uint64_t seed);

/// The B permutation scores for a single s-validation target.
std::vector<double> permutation_null(const Eigen::MatrixXd& train_feats,
                                     std::span<const int> train_labels,
                                     const Eigen::MatrixXd& sval_feats, int B,
                                     const ForestParams& params, std::uint64_t master_seed,
                                     int threads = 1);

}  // namespace memprobe
