// Copyright 2026 The runwaysim Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

// Minibatch samplers over a real and a synthetic pool. All samplers are
// infinite streams: each pool is walked without replacement in a seeded
// per-epoch permutation and reshuffled when exhausted.

#include <cstdint>
#include <string>
#include <vector>

#include "runwaysim/dataset.hpp"
#include "runwaysim/errors.hpp"
#include "runwaysim/rng.hpp"

namespace runwaysim {

enum class SamplingKind { RealOnly, SynthOnly, Mix, Balanced };

struct SamplingStrategy {
  SamplingKind kind = SamplingKind::Mix;
  friend bool operator==(const SamplingStrategy&, const SamplingStrategy&) = default;
};

class EmptyPool : public Error {
 public:
  using Error::Error;
};

class OddBatchForBalanced : public Error {
 public:
  explicit OddBatchForBalanced(std::size_t n)
      : Error("balanced sampling needs an even batch size, got " + std::to_string(n)) {}
};

/// Which pool a drawn sample came from, and its index there.
struct BatchItem {
  Domain pool = Domain::Real;
  std::size_t index = 0;
  const Sample* sample = nullptr;

  friend bool operator==(const BatchItem& a, const BatchItem& b) {
    return a.pool == b.pool && a.index == b.index;
  }
};

struct Batch {
  std::vector<BatchItem> items;
  std::size_t size() const { return items.size(); }
  friend bool operator==(const Batch&, const Batch&) = default;
};

namespace detail {

/// Endless without-replacement walk over [0, n); epoch e uses the
/// permutation seeded by (seed, stream, e).
class EpochStream {
 public:
  EpochStream(std::size_t n, std::uint64_t seed, std::uint64_t stream)
      : n_(n), seed_(seed), stream_(stream) {}

  std::size_t next() {
    if (pos_ == order_.size()) reshuffle();
    return order_[pos_++];
  }
  std::uint64_t epoch() const { return epoch_; }

 private:
  void reshuffle() {
    order_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) order_[i] = i;
    Rng rng(mix_key(seed_, stream_, next_epoch_));
    shuffle(order_, rng);
    epoch_ = next_epoch_++;
    pos_ = 0;
  }

  std::size_t n_;
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::vector<std::size_t> order_;
  std::size_t pos_ = 0;
  std::uint64_t epoch_ = 0;
  std::uint64_t next_epoch_ = 0;
};

}  // namespace detail

/// Stateful, single-owner sampler. The pools must outlive it.
///
/// RealOnly / SynthOnly / Mix draw from their pool (Mix: the concatenation
/// real ++ synth). Balanced draws batch_size/2 from each pool, interleaved
/// real first, each pool cycling independently.
class Sampler {
 public:
  Sampler(SamplingStrategy strategy, const Dataset& real, const Dataset& synth,
          std::size_t batch_size, std::uint64_t seed)
      : strategy_(strategy),
        real_(&real),
        synth_(&synth),
        batch_size_(batch_size),
        real_stream_(real.size(), seed, 1),
        synth_stream_(synth.size(), seed, 2),
        mixed_stream_(real.size() + synth.size(), seed, 3) {
    if (batch_size == 0) throw InvalidArgument("batch size must be > 0");
    const bool need_real = strategy.kind != SamplingKind::SynthOnly;
    const bool need_synth = strategy.kind != SamplingKind::RealOnly;
    if (strategy.kind == SamplingKind::Mix) {
      if (real.empty() && synth.empty()) throw EmptyPool("mix sampling needs a non-empty pool");
    } else {
      if (need_real && real.empty()) throw EmptyPool("real pool is empty");
      if (need_synth && synth.empty()) throw EmptyPool("synthetic pool is empty");
    }
    if (strategy.kind == SamplingKind::Balanced && batch_size % 2 != 0)
      throw OddBatchForBalanced(batch_size);
  }

  Batch next() {
    Batch b;
    b.items.reserve(batch_size_);
    switch (strategy_.kind) {
      case SamplingKind::RealOnly:
        for (std::size_t i = 0; i < batch_size_; ++i) b.items.push_back(real(real_stream_.next()));
        break;
      case SamplingKind::SynthOnly:
        for (std::size_t i = 0; i < batch_size_; ++i) b.items.push_back(synth(synth_stream_.next()));
        break;
      case SamplingKind::Mix:
        for (std::size_t i = 0; i < batch_size_; ++i) {
          const std::size_t k = mixed_stream_.next();
          b.items.push_back(k < real_->size() ? real(k) : synth(k - real_->size()));
        }
        break;
      case SamplingKind::Balanced:
        for (std::size_t i = 0; i < batch_size_ / 2; ++i) {
          b.items.push_back(real(real_stream_.next()));
          b.items.push_back(synth(synth_stream_.next()));
        }
        break;
    }
    ++step_;
    return b;
  }

  std::uint64_t steps() const { return step_; }
  SamplingStrategy strategy() const { return strategy_; }
  std::size_t batch_size() const { return batch_size_; }

 private:
  BatchItem real(std::size_t i) const { return {Domain::Real, i, &real_->samples[i]}; }
  BatchItem synth(std::size_t i) const { return {Domain::Synthetic, i, &synth_->samples[i]}; }

  SamplingStrategy strategy_;
  const Dataset* real_;
  const Dataset* synth_;
  std::size_t batch_size_;
  detail::EpochStream real_stream_;
  detail::EpochStream synth_stream_;
  detail::EpochStream mixed_stream_;
  std::uint64_t step_ = 0;
};

inline Sampler make_sampler(SamplingStrategy strategy, const Dataset& real, const Dataset& synth,
                            std::size_t batch_size, std::uint64_t seed) {
  return Sampler(strategy, real, synth, batch_size, seed);
}

inline Batch next_batch(Sampler& sampler) { return sampler.next(); }

}  // namespace runwaysim
