#include "memprobe/trainer.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace memprobe {

std::vector<TrainedNetwork> train(TrainedNetwork net, const ImageDataset& data,
                                  const OptimizerSpec& optimizer, std::int64_t epochs,
                                  std::span<const std::int64_t> checkpoint_epochs,
                                  std::uint64_t seed, const CheckpointSink& sink) {
  optimizer.validate();
  if (!std::is_sorted(checkpoint_epochs.begin(), checkpoint_epochs.end())) {
    throw Error(ErrorCode::InvalidSpec, "checkpoint epochs must be sorted");
  }
  for (auto e : checkpoint_epochs) {
    if (e < 0 || e > epochs) {
      throw Error(ErrorCode::InvalidSpec,
                  "checkpoint epoch " + std::to_string(e) + " outside [0, " +
                      std::to_string(epochs) + "]");
    }
  }
  if (net.epoch > 0 && net.train_seed != seed) {
    throw Error(ErrorCode::InvalidSpec, "resuming with a different training seed");
  }
  net.train_seed = seed;

  std::vector<TrainedNetwork> checkpoints;
  auto emit = [&](const TrainedNetwork& n) {
    if (std::binary_search(checkpoint_epochs.begin(), checkpoint_epochs.end(), n.epoch)) {
      checkpoints.push_back(n);
      if (sink) sink(checkpoints.back());
    }
  };
  if (net.epoch == 0) emit(net);
  if (net.epoch >= epochs) return checkpoints;

  if (data.count == 0) throw Error(ErrorCode::EmptyInput, "training set is empty");
  const auto inputs = data.as_matrix();
  const Eigen::Index n = inputs.cols();
  const Eigen::Index batch_size = optimizer.batch_size;

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  Eigen::MatrixXd batch;
  std::vector<int> batch_labels;
  TrainedNetwork last_good = net;

  while (net.epoch < epochs) {
    const std::int64_t epoch = net.epoch + 1;
    Rng rng(derive_seed(seed, Stream::Epoch, static_cast<std::uint64_t>(epoch)));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    rng.shuffle(std::span(order));

    for (Eigen::Index start = 0; start < n; start += batch_size) {
      const Eigen::Index m = std::min(batch_size, n - start);
      batch.resize(inputs.rows(), m);
      batch_labels.resize(static_cast<std::size_t>(m));
      for (Eigen::Index j = 0; j < m; ++j) {
        const Eigen::Index src = order[static_cast<std::size_t>(start + j)];
        batch.col(j) = inputs.col(src);
        batch_labels[static_cast<std::size_t>(j)] = data.labels[static_cast<std::size_t>(src)];
      }
      LossAndGradients lg;
      try {
        lg = loss_and_gradients(net, batch, batch_labels, Mode::Train, &rng);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NonFiniteLoss) throw;
        throw TrainingDiverged(std::move(last_good),
                               "non-finite loss in epoch " + std::to_string(epoch));
      }
      apply_update(optimizer, net.optimizer_state, net.params, lg.gradients);
    }
    net.epoch = epoch;
    last_good = net;
    emit(net);
  }
  return checkpoints;
}

double network_accuracy(const TrainedNetwork& net, const ImageDataset& data) {
  if (data.count == 0) throw Error(ErrorCode::EmptyInput, "accuracy of an empty dataset");
  const auto predicted = predict_classes(net, data.as_matrix());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) hits += predicted[i] == data.labels[i];
  return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

}  // namespace memprobe
