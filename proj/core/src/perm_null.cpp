#include "memprobe/perm_null.hpp"

#include <map>
#include <string>
#include <thread>

#include "memprobe/error.hpp"
#include "memprobe/rng.hpp"

namespace memprobe {

double baseline_guess(std::span<const int> labels) {
  if (labels.empty()) throw Error(ErrorCode::EmptyInput, "baseline of an empty label vector");
  std::map<int, std::size_t> counts;
  for (int l : labels) ++counts[l];
  const double n = static_cast<double>(labels.size());
  double sum = 0.0;
  for (const auto& [label, c] : counts) sum += (c / n) * (c / n);
  return sum;
}

double empirical_p_value(std::span<const double> null_scores, double observed) {
  std::size_t at_least = 0;
  for (double s : null_scores) at_least += s >= observed;
  return (1.0 + static_cast<double>(at_least)) / (static_cast<double>(null_scores.size()) + 1.0);
}

std::uint64_t ProbeSeeds::observed_forest(std::uint64_t seed) {
  return derive_seed(seed, Stream::ObservedForest);
}
std::uint64_t ProbeSeeds::label_shuffle(std::uint64_t seed, int permutation) {
  return derive_seed(seed, Stream::LabelShuffle, static_cast<std::uint64_t>(permutation));
}
std::uint64_t ProbeSeeds::permutation_forest(std::uint64_t seed, int permutation) {
  return derive_seed(seed, Stream::PermutationForest, static_cast<std::uint64_t>(permutation));
}

PermutationProbe::PermutationProbe(Eigen::MatrixXd train_features, std::vector<int> train_labels,
                                   ForestParams params, std::uint64_t seed)
    : train_(std::move(train_features)),
      labels_(std::move(train_labels)),
      params_(params),
      seed_(seed) {
  if (static_cast<Eigen::Index>(labels_.size()) != train_.rows()) {
    throw Error(ErrorCode::ShapeMismatch, "training features and labels differ in length");
  }
}

void PermutationProbe::check_target(const Eigen::MatrixXd& target) const {
  if (target.cols() != train_.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "target has " + std::to_string(target.cols()) +
                                              " features, training has " +
                                              std::to_string(train_.cols()));
  }
}

const Forest& PermutationProbe::observed_forest() {
  if (!observed_) {
    ForestParams p = params_;
    p.seed = ProbeSeeds::observed_forest(seed_);
    observed_ = fit_forest(train_, labels_, p);
  }
  return *observed_;
}

double PermutationProbe::observed_score(const Eigen::MatrixXd& target) {
  if (target.rows() != train_.rows()) {
    throw Error(ErrorCode::ShapeMismatch, "s-validation and training row counts differ");
  }
  return observed_score(target, labels_);
}

double PermutationProbe::observed_score(const Eigen::MatrixXd& target,
                                        std::span<const int> target_labels) {
  check_target(target);
  return accuracy(predict(observed_forest(), target), target_labels);
}

std::vector<double> PermutationProbe::one_permutation(
    std::span<const Eigen::MatrixXd* const> targets, int permutation) const {
  std::vector<int> shuffled = labels_;
  Rng rng(ProbeSeeds::label_shuffle(seed_, permutation));
  rng.shuffle(std::span(shuffled));
  ForestParams p = params_;
  p.seed = ProbeSeeds::permutation_forest(seed_, permutation);
  const Forest forest = fit_forest(train_, shuffled, p);
  std::vector<double> out;
  out.reserve(targets.size());
  for (const Eigen::MatrixXd* target : targets) {
    out.push_back(accuracy(predict(forest, *target), shuffled));
  }
  return out;
}

std::vector<std::vector<double>> PermutationProbe::null_scores(
    std::span<const Eigen::MatrixXd* const> targets, int B, int threads) const {
  if (B < 1) throw Error(ErrorCode::InvalidSpec, "need at least one permutation");
  for (const Eigen::MatrixXd* t : targets) {
    check_target(*t);
    if (t->rows() != train_.rows()) {
      throw Error(ErrorCode::ShapeMismatch, "s-validation and training row counts differ");
    }
  }
  std::vector<std::vector<double>> by_perm(static_cast<std::size_t>(B));
  const int workers = std::max(1, std::min(threads, B));
  if (workers == 1) {
    for (int i = 0; i < B; ++i) by_perm[static_cast<std::size_t>(i)] = one_permutation(targets, i);
  } else {
    std::vector<std::jthread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (int i = w; i < B; i += workers) {
            by_perm[static_cast<std::size_t>(i)] = one_permutation(targets, i);
          }
        } catch (...) {
          errors[static_cast<std::size_t>(w)] = std::current_exception();
        }
      });
    }
    pool.clear();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  std::vector<std::vector<double>> scores(targets.size(),
                                          std::vector<double>(static_cast<std::size_t>(B)));
  for (std::size_t i = 0; i < by_perm.size(); ++i) {
    for (std::size_t t = 0; t < targets.size(); ++t) scores[t][i] = by_perm[i][t];
  }
  return scores;
}

double observed_score(const Eigen::MatrixXd& train_feats, std::span<const int> train_labels,
                      const Eigen::MatrixXd& sval_feats, const ForestParams& params,
                      std::uint64_t seed) {
  PermutationProbe probe(train_feats, {train_labels.begin(), train_labels.end()}, params, seed);
  return probe.observed_score(sval_feats);
}

std::vector<double> permutation_null(const Eigen::MatrixXd& train_feats,
                                     std::span<const int> train_labels,
                                     const Eigen::MatrixXd& sval_feats, int B,
                                     const ForestParams& params, std::uint64_t master_seed,
                                     int threads) {
  PermutationProbe probe(train_feats, {train_labels.begin(), train_labels.end()}, params,
                         master_seed);
  const Eigen::MatrixXd* targets[] = {&sval_feats};
  return probe.null_scores(targets, B, threads).front();
}

}  // namespace memprobe
