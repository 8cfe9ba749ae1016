#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "maskscope/bitmap_io.hpp"
#include "maskscope/mask_fit.hpp"

using namespace maskscope;

namespace {

BitMask random_mask(std::mt19937_64& g, std::size_t w, std::size_t h, double density) {
  std::bernoulli_distribution b(density);
  BitMask m(w, h);
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t c = 0; c < w; ++c) m.set(r, c, b(g));
  return m;
}

BitMask block(std::size_t w, std::size_t h, std::size_t r0, std::size_t c0, std::size_t rows, std::size_t cols) {
  BitMask m(w, h);
  for (std::size_t r = r0; r < r0 + rows; ++r)
    for (std::size_t c = c0; c < c0 + cols; ++c) m.set(r, c);
  return m;
}

}  // namespace

TEST(FitScore, FullAndNoCoverage) {
  const BitMask roi = block(20, 20, 5, 5, 10, 10);
  EXPECT_DOUBLE_EQ(fit_score(BitMask(20, 20, true), roi).value(), 100.0);
  EXPECT_DOUBLE_EQ(fit_score(roi, roi).value(), 100.0);
  EXPECT_DOUBLE_EQ(fit_score(~roi, roi).value(), 0.0);
  EXPECT_DOUBLE_EQ(fit_score(BitMask(20, 20), roi).value(), 0.0);
}

TEST(FitScore, LeftHalfOfBlock) {
  const BitMask roi = block(20, 20, 5, 5, 10, 10);
  EXPECT_DOUBLE_EQ(fit_score(block(20, 20, 5, 5, 10, 5), roi).value(), 50.0);
}

TEST(FitScore, Errors) {
  try {
    fit_score(BitMask(4, 4), BitMask(4, 4));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::empty_roi);
  }
  try {
    fit_score(BitMask(4, 4), BitMask(5, 4, true));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::shape_mismatch);
  }
  EXPECT_THROW(FitScore(100.5), Error);
  EXPECT_THROW(FitScore(-0.1), Error);
  EXPECT_THROW(FitScore(NAN), Error);
}

TEST(FitScore, Properties) {
  std::mt19937_64 g(21);
  for (int trial = 0; trial < 200; ++trial) {
    const BitMask roi = random_mask(g, 17, 13, 0.4);
    if (roi.count() == 0) continue;
    BitMask pred = random_mask(g, 17, 13, 0.5);
    const double s = fit_score(pred, roi).value();
    EXPECT_EQ(s, fit_score(pred & roi, roi).value());
    EXPECT_NEAR(s + fit_score(~pred, roi).value(), 100.0, 1e-9);
    const BitMask more = pred | random_mask(g, 17, 13, 0.2);
    EXPECT_GE(fit_score(more, roi).value(), s);
    std::size_t brute = 0;
    for (std::size_t r = 0; r < 13; ++r)
      for (std::size_t c = 0; c < 17; ++c) brute += pred.at(r, c) && roi.at(r, c);
    EXPECT_EQ(s, 100.0 * brute / roi.count());
  }
}

TEST(BinScores, Boundaries) {
  const FitHistogram empty = bin_scores({});
  EXPECT_EQ(empty.total, 0u);
  for (auto b : empty.bins) EXPECT_EQ(b, 0u);
  const std::vector<FitScore> s{FitScore(5), FitScore(10), FitScore(10.5), FitScore(100)};
  const FitHistogram h = bin_scores(s);
  EXPECT_EQ(h.bins[0], 2u);
  EXPECT_EQ(h.bins[1], 1u);
  EXPECT_EQ(h.bins[9], 1u);
  EXPECT_EQ(h.total, 4u);
  EXPECT_EQ(FitHistogram::bin_of(0.0), 1u);
  EXPECT_EQ(FitHistogram::bin_of(20.0), 2u);
  EXPECT_EQ(FitHistogram::bin_of(20.0000001), 3u);
  EXPECT_EQ(FitHistogram::bin_of(90.0), 9u);
  for (int b = 1; b <= 10; ++b) EXPECT_EQ(FitHistogram::bin_of(10.0 * b), std::size_t(b));
}

TEST(BinScores, UniformCountsWithinFiveSigma) {
  std::mt19937_64 g(22);
  std::uniform_real_distribution<double> u(0.0, 100.0);
  std::vector<FitScore> s;
  for (int i = 0; i < 10000; ++i) s.emplace_back(u(g));
  const FitHistogram h = bin_scores(s);
  std::uint64_t sum = 0;
  for (auto b : h.bins) {
    EXPECT_NEAR(static_cast<double>(b), 1000.0, 5 * std::sqrt(1000.0 * 0.9));
    sum += b;
  }
  EXPECT_EQ(sum, 10000u);
  EXPECT_EQ(h.total, 10000u);
}

TEST(ShareAbove, PublishedBinCounts) {
  FitHistogram h;
  const std::uint64_t mpls[10] = {1281, 1576, 1687, 2104, 1747, 1981, 1995, 2632, 3233, 5569};
  const std::uint64_t nyc[10] = {1659, 1732, 1681, 2254, 2316, 2130, 1939, 2466, 2559, 5302};
  for (int b = 0; b < 10; ++b) {
    h.bins[b] = mpls[b] + nyc[b];
    h.total += mpls[b] + nyc[b];
  }
  EXPECT_EQ(h.total, 23805u + 24038u);
  EXPECT_NEAR(share_above(h, 8), 34.83, 0.005);
  EXPECT_NEAR(share_above(h, 9), 22.72, 0.005);
}

TEST(ShareAbove, EdgeCases) {
  FitHistogram h;
  h.add(FitScore(3), 7);
  for (std::size_t t = 1; t <= 10; ++t) EXPECT_EQ(share_above(h, t), 0.0);
  EXPECT_EQ(share_above(h, 0), 100.0);
  EXPECT_THROW(share_above(FitHistogram{}, 8), Error);
}

TEST(SegmentationMetrics, Conventions) {
  const BitMask a = block(10, 10, 0, 0, 4, 4);
  const auto same = segmentation_metrics(a, a);
  EXPECT_EQ(same.iou, 1.0);
  EXPECT_EQ(same.recall, 1.0);
  EXPECT_EQ(same.accuracy, 1.0);
  const auto disjoint = segmentation_metrics(a, block(10, 10, 6, 6, 4, 4));
  EXPECT_EQ(disjoint.iou, 0.0);
  EXPECT_EQ(disjoint.recall, 0.0);
  const auto half = segmentation_metrics(block(10, 10, 0, 0, 4, 4), block(10, 10, 0, 2, 4, 4));
  EXPECT_DOUBLE_EQ(half.iou, 1.0 / 3.0);
  EXPECT_EQ(segmentation_metrics(BitMask(3, 3), BitMask(3, 3)).iou, 1.0);
}

TEST(SegmentationMetrics, Symmetry) {
  std::mt19937_64 g(23);
  for (int i = 0; i < 100; ++i) {
    const BitMask p = random_mask(g, 9, 9, 0.3), q = random_mask(g, 9, 9, 0.6);
    EXPECT_EQ(segmentation_metrics(p, q).iou, segmentation_metrics(q, p).iou);
  }
}

TEST(ClassificationMetrics, Examples) {
  const auto m = classification_metrics(90, 0, 100, 10);
  EXPECT_DOUBLE_EQ(m.precision, 1.0);
  EXPECT_DOUBLE_EQ(m.recall, 0.9);
  EXPECT_DOUBLE_EQ(m.accuracy, 0.95);
  const auto v = classification_metrics(0, 0, 10, 0);
  EXPECT_EQ(v.precision, 1.0);
  EXPECT_EQ(v.recall, 1.0);
  EXPECT_EQ(v.accuracy, 1.0);
  EXPECT_THROW(classification_metrics(0, 0, 0, 0), Error);
}

TEST(ClassificationMetrics, DefinitionalOracle) {
  std::mt19937_64 g(24);
  std::uniform_int_distribution<std::uint64_t> u(0, 50);
  for (int i = 0; i < 500; ++i) {
    const std::uint64_t tp = u(g), fp = u(g), tn = u(g), fn = u(g);
    if (tp + fp + tn + fn == 0) continue;
    const auto m = classification_metrics(tp, fp, tn, fn);
    EXPECT_EQ(m.precision, tp + fp ? double(tp) / double(tp + fp) : 1.0);
    EXPECT_EQ(m.recall, tp + fn ? double(tp) / double(tp + fn) : 1.0);
    EXPECT_EQ(m.accuracy, double(tp + tn) / double(tp + fp + tn + fn));
  }
}

TEST(Pnm, RoundTripBothFormats) {
  std::mt19937_64 g(25);
  for (PnmFormat f : {PnmFormat::pbm, PnmFormat::pgm}) {
    for (std::size_t w : {1u, 7u, 8u, 9u, 33u}) {
      const BitMask m = random_mask(g, w, 5, 0.5);
      std::stringstream ss;
      write_pnm(ss, m, f);
      EXPECT_EQ(read_pnm(ss), m);
    }
  }
}

TEST(Pnm, CommentsAndWideSamples) {
  std::string p5 = "P5\n# comment\n2 1\n# another\n65535\n";
  p5 += std::string("\x00\x00\x01\x00", 4);
  std::istringstream in(p5);
  const BitMask m = read_pnm(in);
  EXPECT_FALSE(m.at(0, 0));
  EXPECT_TRUE(m.at(0, 1));
  std::istringstream bad("P6\n1 1\n255\n\x01");
  EXPECT_THROW(read_pnm(bad), Error);
  std::istringstream truncated("P5\n4 4\n255\n\x01\x02");
  EXPECT_THROW(read_pnm(truncated), Error);
}
