#include "memprobe/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "memprobe/error.hpp"
#include "memprobe/rng.hpp"

namespace memprobe {

int ForestParams::resolved_mtry(int num_features) const {
  if (mtry) return *mtry;
  return std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(num_features)))));
}

void ForestParams::validate(int num_features) const {
  if (n_trees < 1) throw Error(ErrorCode::InvalidSpec, "n_trees must be >= 1");
  const int m = resolved_mtry(num_features);
  if (m < 1 || m > num_features) {
    throw Error(ErrorCode::InvalidSpec, "mtry " + std::to_string(m) + " outside [1, " +
                                            std::to_string(num_features) + "]");
  }
  if (min_leaf < 1) throw Error(ErrorCode::InvalidSpec, "min_leaf must be >= 1");
  if (max_depth && *max_depth < 0) throw Error(ErrorCode::InvalidSpec, "max_depth must be >= 0");
}

int Tree::predict(const double* row, Eigen::Index stride) const {
  int n = 0;
  while (nodes[static_cast<std::size_t>(n)].feature >= 0) {
    const Node& node = nodes[static_cast<std::size_t>(n)];
    n = row[node.feature * stride] <= node.threshold ? node.left : node.right;
  }
  return nodes[static_cast<std::size_t>(n)].label;
}

std::size_t Tree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const Node& n) { return n.feature < 0; }));
}

PresortedFeatures::PresortedFeatures(Eigen::MatrixXd values) : values_(std::move(values)) {
  const auto n = static_cast<std::int32_t>(values_.rows());
  order_.resize(static_cast<std::size_t>(values_.cols()));
  rank_.reserve(static_cast<std::size_t>(values_.cols()));
  for (Eigen::Index f = 0; f < values_.cols(); ++f) {
    auto& ord = order_[static_cast<std::size_t>(f)];
    ord.resize(static_cast<std::size_t>(n));
    std::iota(ord.begin(), ord.end(), 0);
    const double* col = values_.col(f).data();
    std::stable_sort(ord.begin(), ord.end(),
                     [col](std::int32_t a, std::int32_t b) { return col[a] < col[b]; });
    auto& rk = rank_.emplace_back(static_cast<std::size_t>(n));
    std::int32_t current = 0;
    for (std::size_t p = 0; p < ord.size(); ++p) {
      if (p > 0 && col[ord[p]] != col[ord[p - 1]]) ++current;
      rk[static_cast<std::size_t>(ord[p])] = current;
    }
  }
}

namespace {

class TreeBuilder {
 public:
  TreeBuilder(const PresortedFeatures& X, std::span<const int> y, int num_classes,
              const ForestParams& params)
      : X_(X),
        y_(y),
        num_classes_(num_classes),
        params_(params),
        d_(X.cols()),
        mtry_(params.resolved_mtry(X.cols())),
        weight_(static_cast<std::size_t>(X.rows())),
        goes_left_(static_cast<std::size_t>(X.rows())),
        features_(static_cast<std::size_t>(d_)),
        total_(static_cast<std::size_t>(num_classes)),
        left_(static_cast<std::size_t>(num_classes)) {
    columns_.reserve(static_cast<std::size_t>(d_));
    for (int f = 0; f < d_; ++f) columns_.push_back(X.values().col(f).data());
  }

  Tree build(std::uint64_t seed) {
    Rng rng(seed);
    const auto n = static_cast<std::size_t>(X_.rows());
    std::fill(weight_.begin(), weight_.end(), 0);
    if (params_.bootstrap) {
      for (std::size_t i = 0; i < n; ++i) ++weight_[rng.index(n)];
    } else {
      std::fill(weight_.begin(), weight_.end(), 1);
    }

    m_ = 0;
    for (std::size_t i = 0; i < n; ++i) m_ += weight_[i] > 0;
    lists_.resize(m_ * static_cast<std::size_t>(d_));
    for (int f = 0; f < d_; ++f) {
      Entry* dst = list(f);
      const auto& rank = X_.rank(f);
      for (std::int32_t r : X_.order(f)) {
        if (weight_[static_cast<std::size_t>(r)] > 0) *dst++ = {r, rank[static_cast<std::size_t>(r)]};
      }
    }
    scratch_.resize(m_);

    Tree tree;
    tree.nodes.emplace_back();
    // `live` flags the features that still vary inside the node; a feature
    // that is constant in a node is constant in all of its descendants, so
    // its list is no longer partitioned. `valid` names a list whose segment
    // is known to hold exactly the node's rows.
    struct Pending {
      std::size_t start, end;
      int depth;
      int node;
      std::uint64_t live;
      int valid;
    };
    const std::uint64_t all = d_ >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << d_) - 1;
    std::vector<Pending> stack{{0, m_, 0, 0, all, 0}};
    while (!stack.empty()) {
      Pending p = stack.back();
      stack.pop_back();
      if (track_live_) {
        for (int f = 0; f < d_; ++f) {
          if (((p.live >> f) & 1) && list(f)[p.start].rank == list(f)[p.end - 1].rank) {
            p.live &= ~(std::uint64_t{1} << f);
          }
        }
      }
      const Split split = find_split(p.start, p.end, p.depth, rng, p.live, p.valid);
      auto& node = tree.nodes[static_cast<std::size_t>(p.node)];
      node.label = majority_label();
      if (split.feature < 0) continue;

      node.feature = split.feature;
      node.threshold = split.threshold;
      const std::size_t mid = partition(p.start, p.end, split, p.live);
      const int left = static_cast<int>(tree.nodes.size());
      tree.nodes[static_cast<std::size_t>(p.node)].left = left;
      tree.nodes[static_cast<std::size_t>(p.node)].right = left + 1;
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      stack.push_back({mid, p.end, p.depth + 1, left + 1, p.live, split.feature});
      stack.push_back({p.start, mid, p.depth + 1, left, p.live, split.feature});
    }
    return tree;
  }

 private:
  struct Split {
    int feature = -1;
    double threshold = 0.0;
    std::size_t last_left = 0;  // position in the feature's list
  };

  struct Entry {
    std::int32_t row;
    std::int32_t rank;  // dense rank of the row's value within the feature
  };

  bool is_live(std::uint64_t live, int f) const { return !track_live_ || ((live >> f) & 1); }

  Entry* list(int f) { return lists_.data() + static_cast<std::size_t>(f) * m_; }
  double value(int f, std::int32_t r) const { return columns_[static_cast<std::size_t>(f)][r]; }

  int majority_label() const {
    int best = 0;
    for (int k = 1; k < num_classes_; ++k) {
      if (total_[static_cast<std::size_t>(k)] > total_[static_cast<std::size_t>(best)]) best = k;
    }
    return best;
  }

  /// Fills total_ with the node's class weights and returns the best split,
  /// or feature -1 when the node becomes a leaf.
  Split find_split(std::size_t start, std::size_t end, int depth, Rng& rng, std::uint64_t live,
                   int valid) {
    std::fill(total_.begin(), total_.end(), 0.0);
    double weight = 0.0;
    const Entry* rows = list(valid);
    for (std::size_t i = start; i < end; ++i) {
      const auto r = static_cast<std::size_t>(rows[i].row);
      total_[static_cast<std::size_t>(y_[r])] += weight_[r];
      weight += weight_[r];
    }
    Split best;
    const int nonzero = static_cast<int>(
        std::count_if(total_.begin(), total_.end(), [](double c) { return c > 0.0; }));
    if (nonzero <= 1) return best;
    if (weight < 2.0 * params_.min_leaf) return best;
    if (params_.max_depth && depth >= *params_.max_depth) return best;

    // Draw features without replacement until mtry non-constant ones have
    // been scored (constant features do not use up the budget).
    std::iota(features_.begin(), features_.end(), 0);
    double best_score = -1.0;
    int scored = 0;
    for (int i = 0; i < d_ && scored < mtry_; ++i) {
      const auto j = static_cast<std::size_t>(i) + rng.index(static_cast<std::uint64_t>(d_ - i));
      std::swap(features_[static_cast<std::size_t>(i)], features_[j]);
      const int f = features_[static_cast<std::size_t>(i)];
      if (!is_live(live, f)) continue;
      const Entry* ord = list(f);
      if (ord[start].rank == ord[end - 1].rank) continue;
      ++scored;
      scan_feature(f, start, end, weight, best, best_score);
    }
    return best;
  }

  void scan_feature(int f, std::size_t start, std::size_t end, double weight, Split& best,
                    double& best_score) {
    if (num_classes_ == 2) {
      scan_binary(f, start, end, weight, best, best_score);
      return;
    }
    std::fill(left_.begin(), left_.end(), 0.0);
    double left_weight = 0.0;
    const Entry* ord = list(f);
    const double min_leaf = params_.min_leaf;
    for (std::size_t p = start; p + 1 < end; ++p) {
      const auto r = static_cast<std::size_t>(ord[p].row);
      left_[static_cast<std::size_t>(y_[r])] += weight_[r];
      left_weight += weight_[r];
      if (ord[p].rank == ord[p + 1].rank) continue;
      const double right_weight = weight - left_weight;
      if (left_weight < min_leaf || right_weight < min_leaf) continue;
      // Maximising sum(c_L^2)/n_L + sum(c_R^2)/n_R minimises weighted Gini.
      double sl = 0.0, sr = 0.0;
      for (std::size_t k = 0; k < left_.size(); ++k) {
        const double cl = left_[k];
        const double cr = total_[k] - cl;
        sl += cl * cl;
        sr += cr * cr;
      }
      const double score = sl / left_weight + sr / right_weight;
      if (score > best_score || (score == best_score && f < best.feature)) {
        best_score = score;
        const double v = value(f, ord[p].row);
        const double next = value(f, ord[p + 1].row);
        double threshold = 0.5 * (v + next);
        if (!(threshold < next)) threshold = v;
        best = {f, threshold, p};
      }
    }
  }

  // Two-class scan with the running counts held in registers. Evaluates the
  // same expressions in the same order as the general loop.
  void scan_binary(int f, std::size_t start, std::size_t end, double weight, Split& best,
                   double& best_score) {
    double left0 = 0.0, left1 = 0.0, left_weight = 0.0;
    const double total0 = total_[0], total1 = total_[1];
    const Entry* ord = list(f);
    const double min_leaf = params_.min_leaf;
    for (std::size_t p = start; p + 1 < end; ++p) {
      const auto r = static_cast<std::size_t>(ord[p].row);
      const double w = weight_[r];
      const bool one = y_[r] != 0;
      left0 += one ? 0.0 : w;
      left1 += one ? w : 0.0;
      left_weight += w;
      if (ord[p].rank == ord[p + 1].rank) continue;
      const double right_weight = weight - left_weight;
      if (left_weight < min_leaf || right_weight < min_leaf) continue;
      const double r0 = total0 - left0, r1 = total1 - left1;
      const double score =
          (left0 * left0 + left1 * left1) / left_weight + (r0 * r0 + r1 * r1) / right_weight;
      if (score > best_score || (score == best_score && f < best.feature)) {
        best_score = score;
        const double v = value(f, ord[p].row);
        const double next = value(f, ord[p + 1].row);
        double threshold = 0.5 * (v + next);
        if (!(threshold < next)) threshold = v;
        best = {f, threshold, p};
      }
    }
  }

  std::size_t partition(std::size_t start, std::size_t end, const Split& split,
                        std::uint64_t live) {
    const Entry* ord = list(split.feature);
    for (std::size_t p = start; p < end; ++p) {
      goes_left_[static_cast<std::size_t>(ord[p].row)] = p <= split.last_left;
    }
    const std::size_t mid = split.last_left + 1;
    for (int f = 0; f < d_; ++f) {
      // The split feature is already in left/right order.
      if (f == split.feature || !is_live(live, f)) continue;
      Entry* l = list(f);
      std::size_t a = start, b = 0;
      // Branch-free: the left/right outcome is close to a coin flip.
      for (std::size_t p = start; p < end; ++p) {
        const Entry e = l[p];
        const std::size_t g = goes_left_[static_cast<std::size_t>(e.row)];
        l[a] = e;
        scratch_[b] = e;
        a += g;
        b += 1 - g;
      }
      std::copy_n(scratch_.begin(), b, l + a);
    }
    return mid;
  }

  const PresortedFeatures& X_;
  std::span<const int> y_;
  int num_classes_;
  const ForestParams& params_;
  int d_;
  int mtry_;
  std::vector<const double*> columns_;
  std::vector<int> weight_;
  std::vector<char> goes_left_;
  std::vector<int> features_;
  std::vector<double> total_;
  std::vector<double> left_;
  std::vector<Entry> lists_;
  std::vector<Entry> scratch_;
  std::size_t m_ = 0;
  bool track_live_ = d_ <= 64;
};

}  // namespace

Forest fit_forest(const PresortedFeatures& X, std::span<const int> y, const ForestParams& params) {
  if (X.rows() == 0 || y.empty()) throw Error(ErrorCode::EmptyInput, "cannot fit a forest on no samples");
  if (static_cast<Eigen::Index>(y.size()) != X.rows()) {
    throw Error(ErrorCode::ShapeMismatch, std::to_string(X.rows()) + " rows vs " +
                                              std::to_string(y.size()) + " labels");
  }
  if (X.cols() == 0) throw Error(ErrorCode::EmptyInput, "feature matrix has no columns");
  params.validate(X.cols());
  for (int label : y) {
    if (label < 0) throw Error(ErrorCode::InvalidSpec, "negative class label");
  }

  Forest forest;
  forest.num_features = X.cols();
  forest.num_classes = *std::max_element(y.begin(), y.end()) + 1;
  forest.trees.reserve(static_cast<std::size_t>(params.n_trees));
  TreeBuilder builder(X, y, forest.num_classes, params);
  for (int t = 0; t < params.n_trees; ++t) {
    forest.trees.push_back(builder.build(derive_seed(params.seed, Stream::Tree,
                                                     static_cast<std::uint64_t>(t))));
  }
  return forest;
}

Forest fit_forest(const Eigen::MatrixXd& X, std::span<const int> y, const ForestParams& params) {
  return fit_forest(PresortedFeatures(X), y, params);
}

std::vector<int> predict(const Forest& forest, const Eigen::MatrixXd& X) {
  if (X.cols() != forest.num_features) {
    throw Error(ErrorCode::ShapeMismatch, "forest expects " +
                                              std::to_string(forest.num_features) +
                                              " features, got " + std::to_string(X.cols()));
  }
  // Tree-major traversal keeps one tree hot in cache across all rows.
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const RowMajor rows = X;
  const auto n = static_cast<std::size_t>(X.rows());
  const auto k = static_cast<std::size_t>(forest.num_classes);
  std::vector<int> votes(n * k, 0);
  const auto d = static_cast<std::size_t>(rows.cols());
  for (const Tree& tree : forest.trees) {
    for (std::size_t i = 0; i < n; ++i) {
      ++votes[i * k + static_cast<std::size_t>(tree.predict(rows.data() + i * d, 1))];
    }
  }
  std::vector<int> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int* v = votes.data() + i * k;
    out[i] = static_cast<int>(std::max_element(v, v + k) - v);
  }
  return out;
}

double accuracy(std::span<const int> predicted, std::span<const int> actual) {
  if (predicted.size() != actual.size()) {
    throw Error(ErrorCode::LengthMismatch, std::to_string(predicted.size()) + " predictions vs " +
                                               std::to_string(actual.size()) + " labels");
  }
  if (predicted.empty()) throw Error(ErrorCode::EmptyInput, "accuracy of nothing");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) hits += predicted[i] == actual[i];
  return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

}  // namespace memprobe
