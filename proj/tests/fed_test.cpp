// Copyright 2026 The natres Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <set>

#include "gtest/gtest.h"
#include "natres/data/dataset.hpp"
#include "natres/fed/fedavg.hpp"
#include "natres/simd/kernels.hpp"

namespace natres::fed {
namespace {

nn::ModelSpec small_mlp(int in, int classes) {
  nn::ModelSpec m;
  m.input_dims = {in};
  m.hidden_widths = {16};
  m.num_classes = classes;
  return m;
}

class FedTest : public ::testing::Test {
 protected:
  data::Dataset train = data::synth_blobs(1200, 4, 20, 3.0, 1);
  data::Dataset val = data::synth_blobs(400, 4, 20, 3.0, 2);
  nn::ModelSpec model = small_mlp(20, 4);
  poison::PoisonSpec spec = poison::make_backdoor(poison::Kind::primitive, train, {0.1, 0, 0.0}, 5);

  FedConfig config(int users, int m) {
    FedConfig c;
    c.num_users = users;
    c.round_size = m;
    c.rounds = 10;
    c.local_epochs = 2;
    c.local.learning_rate = 0.05;
    c.local.batch_size = 16;
    c.local.seed = 3;
    c.seed = 4;
    return c;
  }
  FedData fed_data(int users) {
    return {&train, data::shard_users(train, users, 7).shards, &val};
  }
};

TEST_F(FedTest, SingleUserReplaysCentralizedTraining) {
  FedConfig c = config(1, 1);
  c.rounds = 4;
  c.local_epochs = 2;
  c.global_lr = 1.0;
  c.local.scheduler = nn::Scheduler::multi_step_decay;
  c.local.label_noise_rate = 0.1;
  const FedData d = fed_data(1);
  const auto fed = fed_train(c, model, d, {}, spec);

  nn::TrainConfig central = c.local;
  central.epochs = c.rounds * c.local_epochs;
  const auto ref = nn::train(train.subset(d.shards[0]), model, central);
  ASSERT_EQ(fed.params.values.size(), ref.params.values.size());
  for (std::size_t i = 0; i < ref.params.values.size(); ++i) {
    EXPECT_NEAR(fed.params.values[i], ref.params.values[i], 1e-5) << i;
  }
}

TEST_F(FedTest, ZeroGlobalRateFreezesTheModel) {
  FedConfig c = config(10, 5);
  c.global_lr = 0.0;
  const auto r = fed_train(c, model, fed_data(10), {}, spec);
  EXPECT_EQ(r.params.values, nn::init_model(model, c.local.seed).values);
}

TEST_F(FedTest, ClippedUpdatesBoundTheDrift) {
  FedConfig c = config(10, 1);
  c.clip_bound = 1e-2;
  c.rounds = 5;
  const auto r = fed_train(c, model, fed_data(10), {}, spec);
  const auto init = nn::init_model(model, c.local.seed).values;
  double sq = 0;
  for (std::size_t i = 0; i < init.size(); ++i) sq += std::pow(r.params.values[i] - init[i], 2);
  // One user per round at eta 1: each round moves at most clip_bound.
  EXPECT_LE(std::sqrt(sq), 5 * 1e-2 * (1 + 1e-6));
  EXPECT_GT(std::sqrt(sq), 0.0);
}

TEST_F(FedTest, ParticipationLogShapeAndReproducibility) {
  FedConfig c = config(20, 5);
  const auto a = fed_train(c, model, fed_data(20), {}, spec);
  ASSERT_EQ(a.participation.size(), 10u);
  for (const auto& round : a.participation) {
    EXPECT_EQ(round.size(), 5u);
    EXPECT_EQ(std::set<int>(round.begin(), round.end()).size(), 5u);
  }
  const auto b = fed_train(c, model, fed_data(20), {}, spec);
  EXPECT_EQ(a.participation, b.participation);
  EXPECT_EQ(a.params.values, b.params.values);
  const auto parallel = fed_train(c, model, fed_data(20), {}, spec, 4);
  EXPECT_EQ(parallel.params.values, a.params.values);
}

TEST_F(FedTest, RejectsBadConfigs) {
  FedConfig c = config(10, 11);
  EXPECT_THROW(fed_train(c, model, fed_data(10), {}, spec), InvalidArgument);
  c = config(10, 5);
  c.local_epochs = 0;
  EXPECT_THROW(fed_train(c, model, fed_data(10), {}, spec), InvalidArgument);
  c = config(10, 5);
  EXPECT_THROW(fed_train(c, model, fed_data(5), {}, spec), InvalidArgument);
}

TEST(PickCompromised, FloorAndNesting) {
  EXPECT_EQ(pick_compromised(500, 0.036, 1).size(), 18u);
  EXPECT_TRUE(pick_compromised(500, 0.0, 1).empty());
  const auto small = pick_compromised(100, 0.1, 9);
  const auto large = pick_compromised(100, 0.3, 9);
  for (const int u : small) EXPECT_NE(std::find(large.begin(), large.end(), u), large.end());
}

TEST_F(FedTest, CurveEndpoints) {
  FedConfig c = config(20, 10);
  c.rounds = 8;
  const auto curve = fed_resistance_curve(c, model, fed_data(20), spec, {0.0, 0.2, 1.0}, 1, 11);
  ASSERT_EQ(curve.points.size(), 3u);
  EXPECT_LE(curve.points[0].backdoor_acc, 2.0 / 4);
  EXPECT_GE(curve.points[0].main_acc, 0.7);
  EXPECT_GE(curve.points[2].backdoor_acc, 0.9);
}

}  // namespace
}  // namespace natres::fed
