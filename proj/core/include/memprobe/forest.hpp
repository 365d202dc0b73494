#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace memprobe {

enum class FeatureSource { Train, SValidation, Validation };

/// Learned features: one row per sample, one column per feature-layer unit.
struct FeatureMatrix {
  Eigen::MatrixXd values;
  FeatureSource source = FeatureSource::Train;
  std::int64_t epoch = 0;
  std::optional<double> fraction;
};

struct ForestParams {
  int n_trees = 500;
  std::optional<int> mtry;  // default floor(sqrt(d))
  int min_leaf = 1;
  std::optional<int> max_depth;  // unlimited when empty
  bool bootstrap = true;
  std::uint64_t seed = 0;

  int resolved_mtry(int num_features) const;
  void validate(int num_features) const;
  bool operator==(const ForestParams&) const = default;
};

/// One CART tree stored as flat node arrays. A node with feature < 0 is a
/// leaf; samples with x[feature] <= threshold go left.
struct Tree {
  struct Node {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    int label = 0;
  };
  std::vector<Node> nodes;

  int predict(const double* row, Eigen::Index stride) const;
  std::size_t leaf_count() const;
};

struct Forest {
  int num_features = 0;
  int num_classes = 0;
  std::vector<Tree> trees;
};

/// Per-feature sample orderings of a fixed matrix, shared by every forest fit
/// on it (the permutation null refits the same features B times).
class PresortedFeatures {
 public:
  explicit PresortedFeatures(Eigen::MatrixXd values);

  const Eigen::MatrixXd& values() const { return values_; }
  Eigen::Index rows() const { return values_.rows(); }
  int cols() const { return static_cast<int>(values_.cols()); }
  /// Row indices sorted by feature f, ties by row index.
  const std::vector<std::int32_t>& order(int f) const { return order_[static_cast<std::size_t>(f)]; }
  /// Dense rank of every row's value within feature f (equal values share a rank).
  const std::vector<std::int32_t>& rank(int f) const { return rank_[static_cast<std::size_t>(f)]; }

 private:
  Eigen::MatrixXd values_;
  std::vector<std::vector<std::int32_t>> order_;
  std::vector<std::vector<std::int32_t>> rank_;
};

/// Random forest of Gini-split CART trees. Tree t draws its bootstrap sample
/// and candidate features from derive_seed(params.seed, Tree, t).
Forest fit_forest(const PresortedFeatures& X, std::span<const int> y, const ForestParams& params);
Forest fit_forest(const Eigen::MatrixXd& X, std::span<const int> y, const ForestParams& params);

/// Majority vote; ties go to the lower class index.
std::vector<int> predict(const Forest& forest, const Eigen::MatrixXd& X);

double accuracy(std::span<const int> predicted, std::span<const int> actual);

}  // namespace memprobe
