// Copyright (c) 2026, The tlsqkt authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>

#include "test_util.hpp"
#include "tlsqkt/autodiff/grad_check.hpp"
#include "tlsqkt/common/random.hpp"
#include "tlsqkt/model/checkpoint.hpp"
#include "tlsqkt/model/model.hpp"
#include "tlsqkt/model/trajectories.hpp"
#include "tlsqkt/train/optim.hpp"

namespace tlsqkt::model {
namespace {

using data::Batch;
using testing::small_dataset;
using testing::whole_batch;

ModelDims small_dims(const data::Dataset& ds, Index d = 8, Index heads = 2) {
  ModelDims dims;
  dims.n_questions = ds.questions.size();
  dims.n_kcs = ds.kcs.size();
  dims.n_literacy = ds.n_literacy_ids();
  dims.max_seq_len = 20;
  dims.embed_dim = d;
  dims.hidden_dim = d;
  dims.model_dim = d;
  dims.n_heads = heads;
  return dims;
}

ad::Vector predict(const Model& m, const Batch& b) {
  Tape tape(false);
  return forward(tape, m, b).probs.data();
}

class EveryVariant : public ::testing::TestWithParam<VariantKind> {};

TEST_P(EveryVariant, ProbabilitiesInUnitInterval) {
  const auto ds = small_dataset(6, 7, 1);
  const Model m = Model::create(GetParam(), small_dims(ds), 3);
  const Batch b = whole_batch(ds, 20);
  const ad::Vector p = predict(m, b);
  ASSERT_EQ(p.size(), b.batch_size * b.steps);
  for (Index i = 0; i < p.size(); ++i) {
    EXPECT_GT(p[i], 0.0);
    EXPECT_LT(p[i], 1.0);
  }
}

TEST_P(EveryVariant, ZeroModelPredictsOneHalf) {
  const auto ds = small_dataset(4, 5, 2);
  Model m = Model::create(GetParam(), small_dims(ds), 3);
  m.zero();
  const ad::Vector p = predict(m, whole_batch(ds, 20));
  for (Index i = 0; i < p.size(); ++i) EXPECT_DOUBLE_EQ(p[i], 0.5);
}

// Changing anything at positions after t must leave the predictions at t and
// earlier untouched. Position t itself keeps its next-step ids (the query).
TEST_P(EveryVariant, NoLeakageFromFuture) {
  const auto ds = small_dataset(3, 9, 4);
  const Model m = Model::create(GetParam(), small_dims(ds), 5);
  const Batch base = whole_batch(ds, 20);
  const ad::Vector p0 = predict(m, base);
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const Index t = static_cast<Index>(uniform_below(rng, static_cast<std::uint64_t>(base.steps - 1)));
    Batch changed = base;
    for (Index b = 0; b < base.batch_size; ++b) {
      for (Index s = t + 1; s < base.steps; ++s) {
        const std::size_t c = changed.cell(b, s);
        if (!changed.step_mask[c]) continue;
        changed.q_ids[c] = 1 + static_cast<std::int32_t>(uniform_below(rng, static_cast<std::uint64_t>(ds.questions.size())));
        changed.kc_ids[c] = 1 + static_cast<std::int32_t>(uniform_below(rng, static_cast<std::uint64_t>(ds.kcs.size())));
        changed.l_ids[c] = 1 + static_cast<std::int32_t>(uniform_below(rng, static_cast<std::uint64_t>(ds.n_literacy_ids())));
        changed.responses[c] = 1 - changed.responses[c];
        if (changed.valid_mask[c]) {
          changed.q_next[c] = changed.q_ids[c];
          changed.kc_next[c] = changed.kc_ids[c];
          changed.l_next[c] = changed.l_ids[c];
        }
      }
    }
    // Keep the batch self-consistent: targets at s-1 follow the response at s.
    for (Index b = 0; b < base.batch_size; ++b) {
      for (Index s = t + 1; s < base.steps; ++s) {
        const std::size_t prev = changed.cell(b, s - 1);
        const std::size_t c = changed.cell(b, s);
        if (!changed.step_mask[c]) continue;
        changed.q_next[prev] = changed.q_ids[c];
        changed.kc_next[prev] = changed.kc_ids[c];
        changed.l_next[prev] = changed.l_ids[c];
        changed.targets[prev] = changed.responses[c];
      }
    }
    // Position t's own next-step query must stay the same.
    for (Index b = 0; b < base.batch_size; ++b) {
      const std::size_t c = changed.cell(b, t);
      changed.q_next[c] = base.q_next[c];
      changed.kc_next[c] = base.kc_next[c];
      changed.l_next[c] = base.l_next[c];
      changed.targets[c] = base.targets[c];
      if (t + 1 < base.steps && changed.step_mask[changed.cell(b, t + 1)]) {
        const std::size_t n = changed.cell(b, t + 1);
        changed.q_ids[n] = base.q_ids[n];
        changed.kc_ids[n] = base.kc_ids[n];
        changed.l_ids[n] = base.l_ids[n];
        changed.responses[n] = base.responses[n];
      }
    }
    const ad::Vector p1 = predict(m, changed);
    for (Index b = 0; b < base.batch_size; ++b) {
      for (Index s = 0; s <= t; ++s) {
        const std::size_t c = base.cell(b, s);
        if (base.step_mask[c]) EXPECT_EQ(p0[static_cast<Index>(c)], p1[static_cast<Index>(c)]) << "t=" << t << " s=" << s;
      }
    }
  }
}

TEST_P(EveryVariant, PaddingDoesNotChangePredictions) {
  const auto ds = small_dataset(2, 6, 7);
  const Model m = Model::create(GetParam(), small_dims(ds), 8);
  const auto windows = data::trainable_windows(data::make_windows(ds.sequences, 20));
  const Batch alone = data::collate(ds, std::span(windows.data(), 1));
  // Pair the window with a longer one so it gets padded.
  auto longer = small_dataset(1, 11, 9);
  data::Dataset both = ds;
  data::Sequence extra = longer.sequences[0];
  for (auto& it : extra.steps) {
    it.question_id = 1 + (it.question_id - 1) % ds.questions.size();
    it.kc_id = 1 + (it.kc_id - 1) % ds.kcs.size();
    it.literacy_id = 1 + (*it.literacy_id - 1) % ds.n_literacy_ids();
  }
  extra.student_id = "extra";
  both.sequences.push_back(extra);
  const data::Window w[2] = {windows[0], {both.sequences.size() - 1, 0, 11}};
  const Batch padded = data::collate(both, w);
  ASSERT_GT(padded.steps, alone.steps);
  const ad::Vector p_alone = predict(m, alone);
  const ad::Vector p_padded = predict(m, padded);
  for (Index t = 0; t < alone.steps; ++t) {
    EXPECT_NEAR(p_alone[t], p_padded[static_cast<Index>(padded.cell(0, t))], 1e-12);
  }
}

TEST_P(EveryVariant, BatchOrderEquivariance) {
  const auto ds = small_dataset(4, 6, 10);
  const Model m = Model::create(GetParam(), small_dims(ds), 11);
  auto windows = data::trainable_windows(data::make_windows(ds.sequences, 20));
  const Batch fwd = data::collate(ds, windows);
  std::reverse(windows.begin(), windows.end());
  const Batch rev = data::collate(ds, windows);
  const ad::Vector a = predict(m, fwd);
  const ad::Vector b = predict(m, rev);
  const Index B = fwd.batch_size;
  for (Index i = 0; i < B; ++i) {
    for (Index t = 0; t < fwd.steps; ++t) {
      EXPECT_NEAR(a[static_cast<Index>(fwd.cell(i, t))], b[static_cast<Index>(rev.cell(B - 1 - i, t))], 1e-12);
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Variants, EveryVariant, ::testing::ValuesIn(all_variants()),
                         [](const ::testing::TestParamInfo<VariantKind>& info) { return to_string(info.param); });

TEST(Model, VariantParameterStructure) {
  const auto ds = small_dataset(3, 4, 1);
  const ModelDims dims = small_dims(ds);
  const auto full = Model::create(VariantKind::full, dims, 1);
  const auto wo_output = Model::create(VariantKind::wo_output, dims, 1);
  const auto wo_head = Model::create(VariantKind::wo_head, dims, 1);
  const auto wo_add = Model::create(VariantKind::wo_add, dims, 1);
  EXPECT_LT(wo_output.parameter_count(), full.parameter_count());
  EXPECT_EQ(wo_head.parameter_count(), full.parameter_count());
  EXPECT_EQ(wo_head.tlsqkt().question_tf->n_heads, 1);
  EXPECT_EQ(full.tlsqkt().question_tf->n_heads, 2);
  EXPECT_GT(wo_add.parameter_count(), full.parameter_count());
  EXPECT_FALSE(wo_output.tlsqkt().question_tf.has_value());
  EXPECT_EQ(full.tlsqkt().combine_w.value, ad::Vector::Constant(3, 1.0 / 3.0));
}

TEST(Model, SameSeedSameInit) {
  const auto ds = small_dataset(3, 4, 1);
  const auto a = Model::create(VariantKind::full, small_dims(ds), 42);
  const auto b = Model::create(VariantKind::full, small_dims(ds), 42);
  const auto c = Model::create(VariantKind::full, small_dims(ds), 43);
  EXPECT_EQ(checkpoint_json(a, {}), checkpoint_json(b, {}));
  EXPECT_NE(checkpoint_json(a, {}), checkpoint_json(c, {}));
}

TEST(Model, RejectsBadDims) {
  ModelDims d;
  d.model_dim = 32;
  d.hidden_dim = 64;
  EXPECT_THROW(d.validate(), std::invalid_argument);
  d.hidden_dim = 32;
  d.n_heads = 5;
  EXPECT_THROW(d.validate(), std::invalid_argument);
}

TEST(Model, ForwardRejectsMalformedBatch) {
  const auto ds = small_dataset(3, 5, 1);
  const Model m = Model::create(VariantKind::full, small_dims(ds), 1);
  Batch b = whole_batch(ds, 20);
  b.targets.pop_back();
  Tape tape(false);
  EXPECT_THROW(forward(tape, m, b), ad::ContractError);
}

TEST(Model, ForwardRejectsUnknownId) {
  const auto ds = small_dataset(3, 5, 1);
  const Model m = Model::create(VariantKind::full, small_dims(ds), 1);
  Batch b = whole_batch(ds, 20);
  b.q_ids[0] = static_cast<std::int32_t>(ds.questions.size()) + 1;
  Tape tape(false);
  EXPECT_THROW(forward(tape, m, b), ad::IndexError);
}

TEST(Model, FullLossGradient) {
  const auto ds = small_dataset(2, 4, 12);
  Model m = Model::create(VariantKind::full, small_dims(ds, 8, 2), 13);
  const Batch b = whole_batch(ds, 20);
  const double err = ad::grad_check(
      [&](Tape& t) {
        return train::bce_loss_masked(forward(t, m, b).probs, b.targets, b.valid_mask);
      },
      m.parameters());
  EXPECT_LT(err, 1e-4);
}

TEST(Model, DktLossGradient) {
  const auto ds = small_dataset(2, 4, 14);
  Model m = Model::create(VariantKind::dkt_baseline, small_dims(ds, 8, 2), 15);
  const Batch b = whole_batch(ds, 20);
  const double err = ad::grad_check(
      [&](Tape& t) {
        return train::bce_loss_masked(forward(t, m, b).probs, b.targets, b.valid_mask);
      },
      m.parameters());
  EXPECT_LT(err, 1e-4);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  const auto ds = small_dataset(3, 4, 1);
  for (VariantKind kind : all_variants()) {
    const Model m = Model::create(kind, small_dims(ds), 99);
    CheckpointMeta meta{99, {{"variant", to_string(kind)}, {"seed", "99"}}, "abc"};
    const std::string text = checkpoint_json(m, meta);
    const LoadedCheckpoint back = parse_checkpoint(text);
    EXPECT_EQ(back.model.variant(), kind);
    EXPECT_EQ(back.model.dims(), m.dims());
    EXPECT_EQ(back.meta.seed, 99u);
    EXPECT_EQ(back.meta.config, meta.config);
    std::vector<const ad::Parameter*> a, b;
    m.for_each_parameter([&](const ad::Parameter& p) { a.push_back(&p); });
    back.model.for_each_parameter([&](const ad::Parameter& p) { b.push_back(&p); });
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_EQ(a[i]->name, b[i]->name);
      EXPECT_EQ(a[i]->shape, b[i]->shape);
      EXPECT_EQ(std::memcmp(a[i]->value.data(), b[i]->value.data(), sizeof(double) * static_cast<std::size_t>(a[i]->size())), 0);
    }
    EXPECT_EQ(checkpoint_json(back.model, back.meta), text);
  }
}

TEST(Checkpoint, FileRoundTrip) {
  const auto ds = small_dataset(3, 4, 1);
  const Model m = Model::create(VariantKind::wo_add, small_dims(ds), 5);
  const auto path = std::filesystem::temp_directory_path() / "tlsqkt_ckpt_test" / "c.json";
  save_checkpoint(path, m, {5, {}, "h"});
  const LoadedCheckpoint back = load_checkpoint(path);
  EXPECT_EQ(checkpoint_json(back.model, back.meta), checkpoint_json(m, {5, {}, "h"}));
  std::filesystem::remove_all(path.parent_path());
}

TEST(Checkpoint, RejectsCorruptDocuments) {
  const auto ds = small_dataset(3, 4, 1);
  const Model m = Model::create(VariantKind::full, small_dims(ds), 5);
  std::string text = checkpoint_json(m, {});
  EXPECT_THROW(parse_checkpoint("{"), std::exception);
  EXPECT_THROW(parse_checkpoint("{}"), std::exception);
  const auto pos = text.find("\"q_table\"");
  ASSERT_NE(pos, std::string::npos);
  text.replace(pos, 9, "\"zz_table\"");
  EXPECT_THROW(parse_checkpoint(text), std::exception);
}

TEST(Trajectories, ZeroModelIsFlatOneHalf) {
  const auto ds = small_dataset(5, 6, 3);
  Model m = Model::create(VariantKind::full, small_dims(ds), 1);
  m.zero();
  const Trajectories t = extract_trajectories(m, ds);
  ASSERT_EQ(t.points.size(), 5u * 6u * static_cast<std::size_t>(ds.n_literacy_ids()));
  for (const auto& p : t.points) EXPECT_DOUBLE_EQ(p.prob, 0.5);
}

TEST(Trajectories, RowCountAndStates) {
  const auto ds = small_dataset(4, 7, 3);
  const Model m = Model::create(VariantKind::full, small_dims(ds), 1);
  const Trajectories t = extract_trajectories(m, ds, {1, 2}, true);
  EXPECT_EQ(t.points.size(), 4u * 7u * 2u);
  ASSERT_EQ(t.states.size(), 4u);
  EXPECT_EQ(t.states[0].size(), 7u);
  EXPECT_EQ(t.states[0][0].size(), 8u);
  const std::string csv = trajectories_csv(t, ds);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4 * 7 * 2 + 1);
}

TEST(Trajectories, UnknownLiteracyThrows) {
  const auto ds = small_dataset(4, 7, 3);
  const Model m = Model::create(VariantKind::full, small_dims(ds), 1);
  EXPECT_THROW(extract_trajectories(m, ds, {99}), ad::IndexError);
}

}  // namespace
}  // namespace tlsqkt::model
