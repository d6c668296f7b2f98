#include <gtest/gtest.h>

#include <fstream>

#include "embedrank/model.hpp"
#include "embedrank/model_io.hpp"
#include "test_util.hpp"

using namespace embedrank;
using testutil::random_vec;
using testutil::TempDir;

TEST(InitEmbednet, SameSeedIsBitIdentical) {
  const EmbedNetParams a = init_embednet(16, {8, 4}, 2, 99);
  const EmbedNetParams b = init_embednet(16, {8, 4}, 2, 99);
  for (size_t l = 0; l < a.layers.size(); ++l) {
    EXPECT_EQ(a.layers[l].weights.data, b.layers[l].weights.data);
    EXPECT_EQ(a.layers[l].bias, b.layers[l].bias);
    EXPECT_EQ(a.layers[l].prelu_slopes, b.layers[l].prelu_slopes);
  }
}

TEST(InitEmbednet, DifferentSeedsDiffer) {
  const EmbedNetParams a = init_embednet(16, {8, 4}, 2, 1);
  const EmbedNetParams b = init_embednet(16, {8, 4}, 2, 2);
  EXPECT_NE(a.layers[0].weights.data, b.layers[0].weights.data);
}

TEST(InitEmbednet, DefaultHiddenShapes) {
  const EmbedNetParams p = init_embednet(2048, {1024, 512}, 128, 0);
  ASSERT_EQ(p.layers.size(), 3u);
  EXPECT_EQ(p.layers[0].weights.rows, 1024);
  EXPECT_EQ(p.layers[0].weights.cols, 2048);
  EXPECT_EQ(p.layers[1].weights.rows, 512);
  EXPECT_EQ(p.layers[1].weights.cols, 1024);
  EXPECT_EQ(p.layers[2].weights.rows, 128);
  EXPECT_EQ(p.layers[2].weights.cols, 512);
  for (const DenseLayer& l : p.layers) {
    for (double b : l.bias) EXPECT_EQ(b, 0.0);
    for (double s : l.prelu_slopes) EXPECT_EQ(s, 0.25);
  }
}

TEST(InitEmbednet, BadDimsThrow) {
  EXPECT_THROW(init_embednet(0, {4, 4}, 2, 0), ConfigError);
  EXPECT_THROW(init_embednet(8, {0, 4}, 2, 0), ConfigError);
  EXPECT_THROW(init_embednet(8, {4, 4}, -1, 0), ConfigError);
}

TEST(EmbednetForward, OutputOnUnitSphere) {
  Rng rng(17);
  const EmbedNetParams p = init_embednet(12, {8, 6}, 4, 5);
  for (int trial = 0; trial < 200; ++trial) {
    const Vec out = embednet_forward(p, random_vec(12, rng));
    EXPECT_NEAR(norm(out), 1.0, 1e-9);
  }
}

TEST(EmbednetForward, DeterministicGivenSeedAndInput) {
  Rng rng(23);
  const Vec x = random_vec(10, rng);
  const EmbedNetParams a = init_embednet(10, {6, 5}, 3, 77);
  const EmbedNetParams b = init_embednet(10, {6, 5}, 3, 77);
  EXPECT_EQ(embednet_forward(a, x), embednet_forward(b, x));
}

// Step-by-step composition from the primitives, independent of
// embednet_forward's own loop.
TEST(EmbednetForward, MatchesCompositionOracle) {
  Rng rng(31);
  const EmbedNetParams p = init_embednet(8, {4, 4}, 2, 13);
  for (int trial = 0; trial < 20; ++trial) {
    const Vec x = random_vec(8, rng);
    const Vec a1 = prelu(p.layers[0].prelu_slopes, linear_forward(p.layers[0], x));
    const Vec a2 = prelu(p.layers[1].prelu_slopes, linear_forward(p.layers[1], a1));
    const Vec a3 = prelu(p.layers[2].prelu_slopes, linear_forward(p.layers[2], a2));
    EXPECT_EQ(embednet_forward(p, x), l2_normalize(a3));
  }
}

// Scaling the last layer by c > 0 scales the pre-normalization activation by
// c on the positive branch and by c on the slope branch alike, so the
// normalized output is unchanged.
TEST(EmbednetForward, DirectionInvariantToLastLayerScale) {
  Rng rng(41);
  const EmbedNetParams p = init_embednet(8, {6, 4}, 3, 3);
  EmbedNetParams scaled = p;
  const double c = 2.75;
  for (double& w : scaled.layers[2].weights.data) w *= c;
  for (double& b : scaled.layers[2].bias) b *= c;
  for (int trial = 0; trial < 20; ++trial) {
    const Vec x = random_vec(8, rng);
    const Vec a = embednet_forward(p, x);
    const Vec b = embednet_forward(scaled, x);
    for (size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
  }
}

TEST(MlpForward, ZeroInputZeroBiasGivesZero) {
  const MlpParams p = init_mlp(6, {4, 3}, 11);  // biases start at zero
  const Vec out = mlp_forward(p, Vec(6, 0.0));
  for (double x : out) EXPECT_EQ(x, 0.0);
}

TEST(MlpForward, MatchesCompositionOracle) {
  Rng rng(51);
  const MlpParams p = init_mlp(8, {4, 4}, 29);
  for (int trial = 0; trial < 20; ++trial) {
    const Vec x = random_vec(8, rng);
    const Vec a1 = relu(linear_forward(p.layers[0], x));
    const Vec a2 = relu(linear_forward(p.layers[1], a1));
    EXPECT_EQ(mlp_forward(p, x), linear_forward(p.layers[2], a2));
  }
}

TEST(MlpForward, ShapesFollowPaperLayout) {
  const MlpParams p = init_mlp(2048, {256, 128}, 0);
  EXPECT_EQ(p.layers[0].in_dim(), 2048);
  EXPECT_EQ(p.layers[0].out_dim(), 256);
  EXPECT_EQ(p.layers[1].out_dim(), 128);
  EXPECT_EQ(p.layers[2].out_dim(), 2048);
}

TEST(ModelIo, RoundTripIsBitExact) {
  TempDir tmp("model_io");
  const EmbedNetParams p = init_embednet(10, {7, 5}, 3, 123);
  save_model(p, tmp.file("m.json"), {{"note", "unit test"}});
  const ModelFile m = load_model(tmp.file("m.json"));
  const EmbedNetParams q = m.as_embednet();
  ASSERT_EQ(p.layers.size(), q.layers.size());
  for (size_t l = 0; l < p.layers.size(); ++l) {
    EXPECT_EQ(p.layers[l].weights.data, q.layers[l].weights.data);
    EXPECT_EQ(p.layers[l].bias, q.layers[l].bias);
    EXPECT_EQ(p.layers[l].prelu_slopes, q.layers[l].prelu_slopes);
  }
  EXPECT_EQ(m.seed, 123u);

  // forward outputs before/after the round trip are bit-identical
  Rng rng(9);
  const Vec x = testutil::random_vec(10, rng);
  EXPECT_EQ(embednet_forward(p, x), embednet_forward(q, x));
}

TEST(ModelIo, MlpRoundTrip) {
  TempDir tmp("mlp_io");
  const MlpParams p = init_mlp(9, {5, 4}, 7);
  save_model(p, tmp.file("m.json"));
  const MlpParams q = load_model(tmp.file("m.json")).as_mlp();
  for (size_t l = 0; l < p.layers.size(); ++l) {
    EXPECT_EQ(p.layers[l].weights.data, q.layers[l].weights.data);
  }
}

TEST(ModelIo, KindMismatchThrows) {
  TempDir tmp("kind");
  save_model(init_mlp(6, {4, 3}, 1), tmp.file("m.json"));
  EXPECT_THROW(load_model(tmp.file("m.json")).as_embednet(), ConfigError);
}

TEST(ModelIo, MissingFileThrowsIoError) {
  EXPECT_THROW(load_model("/nonexistent/model.json"), IoError);
}

TEST(ModelIo, TruncatedFileThrowsFormatError) {
  TempDir tmp("trunc");
  save_model(init_embednet(6, {4, 3}, 2, 1), tmp.file("m.json"));
  std::string text;
  {
    std::ifstream in(tmp.file("m.json"));
    std::getline(in, text);
  }
  {
    std::ofstream out(tmp.file("bad.json"));
    out << text.substr(0, text.size() / 2);
  }
  EXPECT_THROW(load_model(tmp.file("bad.json")), FormatError);
}

TEST(ModelIo, UnsupportedVersionNamesTheVersion) {
  TempDir tmp("ver");
  {
    std::ofstream out(tmp.file("m.json"));
    out << R"({"format_version":999,"model_kind":"embednet","dims":[2,2],"seed":0,)"
        << R"("config":{},"layers":[]})";
  }
  try {
    load_model(tmp.file("m.json"));
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("999"), std::string::npos);
  }
}
