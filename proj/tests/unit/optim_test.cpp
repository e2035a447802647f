// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "mmfeed/tensor/checkpoint.hpp"
#include "mmfeed/tensor/optim.hpp"

using namespace mmfeed;

namespace {

ParameterStore two_params() {
  ParameterStore s;
  s.add("a", Tensor({2}, {1.f, -1.f}));
  s.add("b", Tensor({1, 3}, {0.5f, 0.25f, 2.f}));
  return s;
}

}  // namespace

TEST(ParameterStore, DuplicateAndMissingNames) {
  ParameterStore s = two_params();
  EXPECT_THROW(s.add("a", Tensor({1}, {0})), Error);
  EXPECT_THROW(s.get("zz"), Error);
  EXPECT_EQ(s.element_count(), 5u);
  EXPECT_EQ(s.names(), (std::vector<std::string>{"a", "b"}));
}

TEST(Adam, ZeroGradientLeavesParameters) {
  ParameterStore s = two_params();
  const auto before = s.entries();
  GradientMap g{{"a", Tensor::filled({2}, 0.f)}, {"b", Tensor::filled({1, 3}, 0.f)}};
  adam_step(s, g, {});
  EXPECT_EQ(s.entries(), before);
  EXPECT_EQ(s.step_count(), 1u);
}

TEST(Adam, FirstStepMovesByLearningRateAgainstSign) {
  ParameterStore s = two_params();
  GradientMap g{{"a", Tensor({2}, {0.3f, -7.f})}, {"b", Tensor({1, 3}, {1e-3f, -2.f, 4.f})}};
  AdamOptions opt;
  opt.lr = 0.01f;
  adam_step(s, g, opt);
  EXPECT_NEAR(s.get("a")[0], 1.f - 0.01f, 1e-6);
  EXPECT_NEAR(s.get("a")[1], -1.f + 0.01f, 1e-6);
  EXPECT_NEAR(s.get("b")[0], 0.5f - 0.01f, 1e-5);
  EXPECT_NEAR(s.get("b")[1], 0.25f + 0.01f, 1e-6);
  EXPECT_NEAR(s.get("b")[2], 2.f - 0.01f, 1e-6);
}

TEST(Adam, SecondStepFollowsMomentEstimates) {
  ParameterStore s;
  s.add("w", Tensor({1}, {0.f}));
  AdamOptions opt;
  opt.lr = 0.1f;
  adam_step(s, {{"w", Tensor({1}, {1.f})}}, opt);
  adam_step(s, {{"w", Tensor({1}, {-1.f})}}, opt);
  // m2 = 0.9*0.1 - 0.1 = -0.01, v2 = 0.999*0.001 + 0.001
  const double m_hat = -0.01 / (1 - 0.81);
  const double v_hat = (0.999 * 0.001 + 0.001) / (1 - 0.999 * 0.999);
  const double expected = -0.1 - 0.1 * m_hat / (std::sqrt(v_hat) + 1e-8);
  EXPECT_NEAR(s.get("w")[0], expected, 1e-6);
}

TEST(Adam, Deterministic) {
  ParameterStore s1 = two_params(), s2 = two_params();
  GradientMap g{{"a", Tensor({2}, {0.3f, -7.f})}, {"b", Tensor({1, 3}, {1.f, -2.f, 4.f})}};
  for (int i = 0; i < 3; ++i) {
    adam_step(s1, g, {});
    adam_step(s2, g, {});
  }
  EXPECT_EQ(s1, s2);
}

TEST(Adam, MissingOrMisshapedGradientIsError) {
  ParameterStore s = two_params();
  EXPECT_THROW(adam_step(s, {{"a", Tensor({2}, {1, 1})}}, {}), Error);
  EXPECT_THROW(adam_step(s, {{"a", Tensor({2}, {1, 1})}, {"b", Tensor({3}, {1, 1, 1})}}, {}), Error);
}

TEST(Clip, ScalesToMaxNorm) {
  GradientMap g{{"a", Tensor({2}, {3.f, 0.f})}, {"b", Tensor({1}, {4.f})}};
  EXPECT_NEAR(clip_global_norm(g, 1.0), 5.0, 1e-9);
  EXPECT_NEAR(g["a"][0], 0.6f, 1e-6);
  EXPECT_NEAR(g["b"][0], 0.8f, 1e-6);
  GradientMap small{{"a", Tensor({1}, {0.5f})}};
  clip_global_norm(small, 1.0);
  EXPECT_EQ(small["a"][0], 0.5f);
}

TEST(Checkpoint, Base64RoundTrip) {
  for (std::string s : {"", "f", "fo", "foo", "foob", "fooba", "foobar"}) {
    EXPECT_EQ(base64_decode(base64_encode(s)), s);
  }
  EXPECT_EQ(base64_encode("foobar"), "Zm9vYmFy");
  EXPECT_THROW(base64_decode("Zm9v!mFy"), ParseError);
  EXPECT_THROW(base64_decode("Zm9"), ParseError);
}

TEST(Checkpoint, FloatsAreLittleEndian) {
  const float one = 1.f;
  const std::string bytes = encode_f32_le(std::span<const float>(&one, 1));
  EXPECT_EQ(bytes, std::string("\x00\x00\x80\x3f", 4));
  EXPECT_EQ(decode_f32_le(bytes), std::vector<float>{1.f});
}

TEST(Checkpoint, SaveLoadSaveIsByteIdentical) {
  CheckpointDocument doc;
  doc.config["name"] = "x";
  doc.params = two_params().entries();
  const std::string first = checkpoint_to_string(doc);
  const std::string second = checkpoint_to_string(checkpoint_from_string(first));
  EXPECT_EQ(first, second);
  EXPECT_EQ(checkpoint_from_string(first).params, doc.params);
}

TEST(Checkpoint, CorruptionIsParseError) {
  CheckpointDocument doc;
  doc.params = two_params().entries();
  std::string text = checkpoint_to_string(doc);
  auto bad = nlohmann::json::parse(text);
  bad["params"]["a"]["data_b64"] = "@@@@";
  EXPECT_THROW(checkpoint_from_string(bad.dump()), ParseError);
  auto version = nlohmann::json::parse(text);
  version["format_version"] = 99;
  EXPECT_THROW(checkpoint_from_string(version.dump()), ParseError);
  EXPECT_THROW(checkpoint_from_string("{not json"), ParseError);
}
