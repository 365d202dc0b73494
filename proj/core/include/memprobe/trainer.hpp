#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "memprobe/dataset.hpp"
#include "memprobe/error.hpp"
#include "memprobe/network.hpp"

namespace memprobe {

using CheckpointSink = std::function<void(const TrainedNetwork&)>;

/// Thrown when a mini-batch loss becomes NaN/inf; carries the network as it
/// stood at the end of the last completed epoch.
class TrainingDiverged : public Error {
 public:
  TrainingDiverged(TrainedNetwork last_good, const std::string& what)
      : Error(ErrorCode::NonFiniteLoss, what), last_good_(std::move(last_good)) {}
  const TrainedNetwork& last_good() const { return last_good_; }

 private:
  TrainedNetwork last_good_;
};

/// Mini-batch training from net.epoch up to `epochs`. Each epoch visits the
/// samples in an order drawn from derive_seed(seed, Epoch, e), batch by
/// batch with the last short batch included; dropout masks come from the same
/// stream. A deep copy is handed to `sink` and returned for every epoch in
/// checkpoint_epochs (epoch 0 means the untouched input network).
std::vector<TrainedNetwork> train(TrainedNetwork net, const ImageDataset& data,
                                  const OptimizerSpec& optimizer, std::int64_t epochs,
                                  std::span<const std::int64_t> checkpoint_epochs,
                                  std::uint64_t seed, const CheckpointSink& sink = {});

/// Fraction of samples whose argmax output matches the label.
double network_accuracy(const TrainedNetwork& net, const ImageDataset& data);

}  // namespace memprobe
