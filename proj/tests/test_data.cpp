#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "sdca_admm/data.hpp"

using namespace sdca_admm;

TEST(GenSyntheticGrid, ShapeAndSparsityPattern) {
  std::mt19937_64 rng(1);
  const auto syn = gen_synthetic_grid(32, 32, 512, 0.1, rng);
  EXPECT_EQ(syn.data.feature_dim(), 1024u);
  EXPECT_EQ(syn.data.sample_count(), 512u);
  EXPECT_EQ(syn.data.Z.nonzeros(), 1024u * 512u);
  // only the first column of the 32x32 weight matrix is nonzero
  for (std::size_t j = 0; j < 1024; ++j) {
    if (j < 32) EXPECT_NE(syn.true_weights[j], 0.0);
    else EXPECT_EQ(syn.true_weights[j], 0.0);
  }
  EXPECT_NO_THROW(syn.data.validate());
}

TEST(GenSyntheticGrid, NoiselessLabelsAreSigns) {
  std::mt19937_64 rng(2);
  const auto syn = gen_synthetic_grid(4, 5, 300, 0.0, rng);
  for (std::size_t i = 0; i < 300; ++i) {
    const double m = syn.data.Z.column_dot(i, syn.true_weights);
    EXPECT_EQ(syn.data.labels[i], m >= 0 ? 1.0 : -1.0);
  }
}

TEST(GenSyntheticGrid, FeatureMomentsAreStandardNormal) {
  std::mt19937_64 rng(3);
  const std::size_t n = 10000;
  const auto syn = gen_synthetic_grid(2, 2, n, 0.1, rng);
  for (std::size_t j = 0; j < 4; ++j) {
    double s = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double v = syn.data.Z.column_values(i)[j];
      s += v;
      s2 += v * v;
    }
    const double mean = s / n;
    const double var = s2 / n - mean * mean;
    EXPECT_LT(std::abs(mean), 3.0 / std::sqrt(double(n)));
    // standard error of the sample variance of N(0,1) is sqrt(2/n)
    EXPECT_LT(std::abs(var - 1.0), 3.0 * std::sqrt(2.0 / n));
  }
}

TEST(GenSyntheticGrid, DeterministicPerSeed) {
  std::mt19937_64 a(7), b(7), c(8);
  const auto da = gen_synthetic_grid(3, 3, 20, 0.1, a);
  const auto db = gen_synthetic_grid(3, 3, 20, 0.1, b);
  const auto dc = gen_synthetic_grid(3, 3, 20, 0.1, c);
  EXPECT_EQ(da.data.Z, db.data.Z);
  EXPECT_EQ(da.data.labels, db.data.labels);
  EXPECT_NE(da.data.Z, dc.data.Z);
}

TEST(GenSyntheticGrid, RejectsEmpty) {
  std::mt19937_64 rng(1);
  EXPECT_THROW(gen_synthetic_grid(2, 2, 0, 0.1, rng), std::invalid_argument);
}

TEST(ReadLibsvm, ParsesLine) {
  std::istringstream in("+1 1:0.5 3:-2\n");
  const auto d = parse_libsvm(in, 4);
  ASSERT_EQ(d.sample_count(), 1u);
  EXPECT_EQ(d.feature_dim(), 4u);
  EXPECT_EQ(d.labels[0], 1.0);
  const auto dense = d.Z.to_dense();
  EXPECT_EQ(dense, (Vector{0.5, 0.0, -2.0, 0.0}));
}

TEST(ReadLibsvm, DimensionIsLargestIndex) {
  std::istringstream in("-1 2:1\n+1 7:3 1:1\n");
  const auto d = parse_libsvm(in);
  EXPECT_EQ(d.feature_dim(), 7u);
  EXPECT_EQ(d.labels, (Vector{-1.0, 1.0}));
}

TEST(ReadLibsvm, MapsZeroOneLabels) {
  std::istringstream in("0 1:1\n1 1:2\n0 2:1\n");
  EXPECT_EQ(parse_libsvm(in).labels, (Vector{-1.0, 1.0, -1.0}));
}

TEST(ReadLibsvm, MapsOneTwoLabels) {
  std::istringstream in("1 1:1\n2 1:2\n");
  EXPECT_EQ(parse_libsvm(in).labels, (Vector{-1.0, 1.0}));
}

TEST(ReadLibsvm, ErrorsCarryLineNumbers) {
  std::istringstream bad("+1 1:1\n-1 2:x\n");
  try {
    parse_libsvm(bad);
    FAIL() << "expected an exception";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
  std::istringstream zero_index("+1 0:1\n");
  EXPECT_THROW(parse_libsvm(zero_index), std::runtime_error);
  std::istringstream no_colon("+1 3\n");
  EXPECT_THROW(parse_libsvm(no_colon), std::runtime_error);
  std::istringstream dup("+1 3:1 3:2\n");
  EXPECT_THROW(parse_libsvm(dup), std::runtime_error);
  std::istringstream multiclass("1 1:1\n2 1:1\n3 1:1\n");
  EXPECT_THROW(parse_libsvm(multiclass), std::runtime_error);
  std::istringstream too_small("+1 5:1\n");
  EXPECT_THROW(parse_libsvm(too_small, 3), std::runtime_error);
}

TEST(ReadLibsvm, EmptyFileIsAnError) {
  std::istringstream in("\n# nothing\n");
  EXPECT_THROW(parse_libsvm(in), std::runtime_error);
  EXPECT_THROW(read_libsvm("/nonexistent/file.svm"), std::runtime_error);
}

TEST(ReadLibsvm, RoundTripThroughWriter) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> unif(-10, 10);
  std::bernoulli_distribution keep(0.3);
  for (int rep = 0; rep < 10; ++rep) {
    std::vector<std::vector<SparseColumnMatrix::Entry>> cols(25);
    Vector labels(25);
    for (std::size_t i = 0; i < 25; ++i) {
      for (std::size_t j = 0; j < 12; ++j)
        if (keep(rng)) cols[i].push_back({j, unif(rng)});
      labels[i] = keep(rng) ? 1.0 : -1.0;
    }
    cols[0].push_back({11, 1.0 / 3.0});  // pin the dimension
    Dataset d{SparseColumnMatrix::from_columns(12, std::move(cols)), labels};
    const auto path = std::filesystem::temp_directory_path() / ("roundtrip_" + std::to_string(rep) + ".svm");
    {
      std::ofstream out(path);
      write_libsvm(d, out);
    }
    const auto back = read_libsvm(path.string());
    std::filesystem::remove(path);
    EXPECT_EQ(back.Z, d.Z);
    EXPECT_EQ(back.labels, d.labels);
  }
}

TEST(EdgesByCorrelation, DuplicateFeaturesAreLinked) {
  std::mt19937_64 rng(10);
  std::normal_distribution<double> normal;
  std::vector<std::vector<SparseColumnMatrix::Entry>> cols(200);
  for (auto& c : cols) {
    const double a = normal(rng);
    c = {{0, a}, {1, normal(rng)}, {2, a}};
  }
  Dataset d{SparseColumnMatrix::from_columns(3, std::move(cols)), Vector(200, 1.0)};
  const auto res = build_edges_by_correlation(d, 0.999);
  EXPECT_EQ(res.edges, (std::vector<Edge>{{0, 2}}));
}

TEST(EdgesByCorrelation, IndependentFeaturesGiveNoEdges) {
  std::mt19937_64 rng(11);
  const auto syn = gen_synthetic_grid(4, 5, 5000, 0.1, rng);
  EXPECT_TRUE(build_edges_by_correlation(syn.data, 0.9).edges.empty());
}

TEST(EdgesByCorrelation, HandComputedCorrelations) {
  // samples of (f0, f1, f2): f1 = f0 + small perturbation, f2 = -f0 + larger
  // perturbation.
  const Vector f0{1, 2, 3, 4, 5, 6};
  const Vector f1{1.1, 1.9, 3.2, 3.9, 5.1, 5.8};
  const Vector f2{-1, -3, -2, -5, -4, -6};
  auto corr = [](const Vector& a, const Vector& b) {
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      ma += a[i] / a.size();
      mb += b[i] / b.size();
    }
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      sab += (a[i] - ma) * (b[i] - mb);
      saa += (a[i] - ma) * (a[i] - ma);
      sbb += (b[i] - mb) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
  };
  const double r01 = std::abs(corr(f0, f1)), r02 = std::abs(corr(f0, f2)), r12 = std::abs(corr(f1, f2));
  ASSERT_GT(r01, r02);
  std::vector<std::vector<SparseColumnMatrix::Entry>> cols(6);
  for (std::size_t i = 0; i < 6; ++i) cols[i] = {{0, f0[i]}, {1, f1[i]}, {2, f2[i]}};
  Dataset d{SparseColumnMatrix::from_columns(3, std::move(cols)), Vector(6, 1.0)};

  // threshold between r02 and r01 keeps only (0,1)
  EXPECT_EQ(build_edges_by_correlation(d, 0.5 * (r01 + std::max(r02, r12))).edges, (std::vector<Edge>{{0, 1}}));
  // a low threshold keeps everything, strongest first
  std::vector<std::pair<double, Edge>> all{{r01, {0, 1}}, {r02, {0, 2}}, {r12, {1, 2}}};
  std::stable_sort(all.begin(), all.end(), [](auto& a, auto& b) { return a.first > b.first; });
  const auto res = build_edges_by_correlation(d, 0.1);
  ASSERT_EQ(res.edges.size(), 3u);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(res.edges[k], all[k].second);
  EXPECT_EQ(build_edges_by_correlation(d, 0.1, 2).edges.size(), 2u);
}

TEST(EdgesByCorrelation, SkipsConstantFeatures) {
  std::vector<std::vector<SparseColumnMatrix::Entry>> cols(5);
  for (std::size_t i = 0; i < 5; ++i) cols[i] = {{0, double(i)}, {1, 2.0}, {2, double(i) * 2 + 1}};
  Dataset d{SparseColumnMatrix::from_columns(3, std::move(cols)), Vector(5, 1.0)};
  const auto res = build_edges_by_correlation(d, 0.5);
  EXPECT_EQ(res.constant_features, (IndexList{1}));
  EXPECT_EQ(res.edges, (std::vector<Edge>{{0, 2}}));
  for (auto [i, j] : res.edges) EXPECT_LT(i, j);
}

TEST(EdgesByCorrelation, RejectsBadThreshold) {
  std::mt19937_64 rng(1);
  const auto syn = gen_synthetic_grid(2, 2, 10, 0.1, rng);
  EXPECT_THROW(build_edges_by_correlation(syn.data, 1.0), std::invalid_argument);
  EXPECT_THROW(build_edges_by_correlation(syn.data, 0.0), std::invalid_argument);
}
