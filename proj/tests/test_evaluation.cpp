#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "aptdetect/error.hpp"
#include "aptdetect/evaluation.hpp"
#include "aptdetect/random.hpp"
#include "oracles.hpp"

using namespace aptd;

namespace {

constexpr Label N = Label::normal;
constexpr Label A = Label::anomaly;

std::vector<Label> repeat(std::size_t anomalies, std::size_t normals) {
  std::vector<Label> v(anomalies, A);
  v.insert(v.end(), normals, N);
  return v;
}

}  // namespace

TEST(Confusion, Examples) {
  const auto truth = repeat(5, 5);
  EXPECT_EQ(confusion(truth, truth), (ConfusionMatrix{5, 0, 5, 0}));
  const auto t2 = repeat(3, 7);
  const std::vector<Label> all_normal(10, N);
  EXPECT_EQ(confusion(all_normal, t2), (ConfusionMatrix{0, 0, 7, 3}));
  EXPECT_THROW(confusion(std::vector<Label>{}, std::vector<Label>{}), Error);
  EXPECT_THROW(confusion(std::vector<Label>(3, N), std::vector<Label>(4, N)), Error);
}

TEST(Confusion, MatchesIndependentTally) {
  Rng rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Label> pred, truth;
    for (int i = 0; i < 20; ++i) {
      pred.push_back(rng.below(2) ? A : N);
      truth.push_back(rng.below(2) ? A : N);
    }
    const auto t = aptd::testing::tally(pred, truth);
    EXPECT_EQ(confusion(pred, truth), (ConfusionMatrix{t.tp, t.fp, t.tn, t.fn}));
  }
}

TEST(Metrics, PerfectClassifier) {
  const MetricsReport r = metrics({50, 0, 50, 0});
  for (const auto& v : {r.acc, r.tpr, r.tnr, r.ppv, r.f_measure}) EXPECT_EQ(v, 1.0);
  EXPECT_EQ(r.fpr, 0.0);
  EXPECT_EQ(r.fnr, 0.0);
  EXPECT_EQ(r.recall(), r.tpr);
  EXPECT_EQ(r.precision(), r.ppv);
}

TEST(Metrics, MixedExample) {
  const MetricsReport r = metrics({90, 20, 80, 10});
  EXPECT_DOUBLE_EQ(*r.tpr, 0.9);
  EXPECT_DOUBLE_EQ(*r.tnr, 0.8);
  EXPECT_DOUBLE_EQ(*r.acc, 0.85);
  EXPECT_DOUBLE_EQ(*r.ppv, 90.0 / 110.0);
  EXPECT_NEAR(*r.f_measure, 0.857142857142857, 1e-12);
  EXPECT_FALSE(r.auc.has_value());
}

TEST(Metrics, EmptyDenominatorsAreUndefined) {
  const MetricsReport r = metrics({0, 0, 10, 0});
  EXPECT_FALSE(r.ppv.has_value());
  EXPECT_FALSE(r.tpr.has_value());
  EXPECT_FALSE(r.fnr.has_value());
  EXPECT_FALSE(r.f_measure.has_value());
  EXPECT_EQ(r.tnr, 1.0);
  EXPECT_EQ(r.fpr, 0.0);
  EXPECT_EQ(r.acc, 1.0);
}

TEST(Metrics, IdentitiesHoldExactlyOnRandomMatrices) {
  Rng rng(77);
  for (int trial = 0; trial < 2000; ++trial) {
    const ConfusionMatrix cm{rng.below(500), rng.below(500), rng.below(500) + 1, rng.below(500) + 1};
    const MetricsReport r = metrics(cm);
    EXPECT_EQ(*r.fpr, 1.0 - *r.tnr);
    EXPECT_EQ(*r.fnr, 1.0 - *r.tpr);
    EXPECT_EQ(*r.acc, static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total()));
    if (r.f_measure) {
      const double p = static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fp);
      const double t = static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fn);
      EXPECT_NEAR(*r.f_measure, 2 * p * t / (p + t), 1e-12);
    }
  }
}

TEST(Roc, PerfectSeparationAndAllTies) {
  const std::vector<double> scores{0.9, 0.8, 0.2, 0.1};
  const std::vector<Label> truth{A, A, N, N};
  const RocCurve c = roc_curve(scores, truth);
  EXPECT_DOUBLE_EQ(auc(c), 1.0);
  EXPECT_EQ(c.points.front().fpr, 0.0);
  EXPECT_TRUE(std::isinf(c.points.front().threshold));
  EXPECT_EQ(c.points.back().fpr, 1.0);
  EXPECT_EQ(c.points.back().tpr, 1.0);
  EXPECT_EQ(c.points.size(), 5u);

  const std::vector<double> flat(6, 0.4);
  const RocCurve t = roc_curve(flat, std::vector<Label>{A, N, A, N, N, A});
  EXPECT_EQ(t.points.size(), 2u);
  EXPECT_DOUBLE_EQ(auc(t), 0.5);
  EXPECT_THROW(roc_curve(flat, std::vector<Label>(6, A)), Error);
}

TEST(Roc, AucMatchesPairCountingOracle) {
  Rng rng(123);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + rng.below(199);
    std::vector<double> scores(n);
    std::vector<Label> truth(n);
    const bool coarse = trial % 3 == 0;  // many ties
    for (std::size_t i = 0; i < n; ++i) {
      truth[i] = i == 0 ? A : i == 1 ? N : (rng.below(2) ? A : N);
      scores[i] = coarse ? static_cast<double>(rng.below(5)) / 4.0 : rng.uniform();
      if (truth[i] == A && !coarse) scores[i] = std::min(1.0, scores[i] + 0.2);
    }
    const RocCurve c = roc_curve(scores, truth);
    EXPECT_NEAR(auc(c), aptd::testing::pair_counting_auc(scores, truth), 1e-9);
    for (std::size_t i = 1; i < c.points.size(); ++i) {
      EXPECT_GE(c.points[i].fpr, c.points[i - 1].fpr);
      EXPECT_GE(c.points[i].tpr, c.points[i - 1].tpr);
    }
    std::vector<double> reversed(scores);
    for (double& s : reversed) s = -s;
    EXPECT_NEAR(auc(roc_curve(reversed, truth)), 1.0 - auc(c), 1e-12);
  }
}

TEST(Roc, CsvRoundTrip) {
  const RocCurve c = roc_curve(std::vector<double>{0.7, 0.1, 0.35, 0.7}, std::vector<Label>{A, N, N, A});
  std::stringstream io;
  write_roc_csv(io, c);
  EXPECT_EQ(io.str().substr(0, io.str().find('\n')), "fpr,tpr,threshold");
  const RocCurve back = read_roc_csv(io);
  ASSERT_EQ(back.points.size(), c.points.size());
  for (std::size_t i = 0; i < c.points.size(); ++i) {
    EXPECT_EQ(back.points[i].fpr, c.points[i].fpr);
    EXPECT_EQ(back.points[i].tpr, c.points[i].tpr);
    EXPECT_EQ(back.points[i].threshold, c.points[i].threshold);
  }
  EXPECT_EQ(auc(back), auc(c));
}

TEST(Lift, FullSizeBinSizes) {
  std::vector<double> scores(148517);
  std::vector<Label> truth(148517, N);
  Rng rng(2);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    scores[i] = rng.uniform();
    if (i % 2 == 0) truth[i] = A;
  }
  const LiftChart chart = lift_chart(scores, truth, A);
  ASSERT_EQ(chart.bins.size(), 10u);
  std::size_t targets = 0;
  for (std::size_t b = 0; b < 10; ++b) {
    EXPECT_EQ(chart.bins[b].size, b < 7 ? 14852u : 14851u);
    targets += chart.bins[b].target_count;
    if (b > 0) {
      EXPECT_LE(chart.bins[b].max_confidence, chart.bins[b - 1].min_confidence);
    }
  }
  EXPECT_EQ(targets, static_cast<std::size_t>(std::count(truth.begin(), truth.end(), A)));
}

TEST(Lift, AllTargetDataAndNormalConfidence) {
  const std::vector<double> scores{0.1, 0.9, 0.4, 0.6, 0.3};
  const LiftChart all_attacks = lift_chart(scores, std::vector<Label>(5, A), A, 5);
  for (const LiftBin& b : all_attacks.bins) EXPECT_EQ(b.target_count, b.size);

  const std::vector<Label> truth{N, A, N, A, N};
  const LiftChart normal = lift_chart(scores, truth, N, 2);
  ASSERT_EQ(normal.bins.size(), 2u);
  EXPECT_EQ(normal.bins[0].size, 3u);
  EXPECT_EQ(normal.bins[0].target_count, 3u);  // confidences 0.9, 0.7, 0.6
  EXPECT_DOUBLE_EQ(normal.bins[0].max_confidence, 0.9);
  EXPECT_DOUBLE_EQ(normal.bins[0].min_confidence, 0.6);
  EXPECT_THROW(lift_chart(scores, truth, A, 0), Error);
  EXPECT_THROW(lift_chart(scores, truth, A, 6), Error);

  std::ostringstream out;
  write_lift_csv(out, normal);
  EXPECT_EQ(out.str(),
            "bin,size,target_count,target_fraction,min_confidence,max_confidence\n"
            "1,3,3,1,0.6,0.9\n2,2,0,0,0.09999999999999998,0.4\n");
}

TEST(AggregateCv, SumsAndCommutes) {
  const ConfusionMatrix a{1, 2, 3, 4};
  const ConfusionMatrix b{10, 20, 30, 40};
  EXPECT_EQ(aggregate_cv(std::vector<ConfusionMatrix>{a, a}), (ConfusionMatrix{2, 4, 6, 8}));
  EXPECT_EQ(aggregate_cv(std::vector<ConfusionMatrix>{a}), a);
  EXPECT_EQ(aggregate_cv(std::vector<ConfusionMatrix>{a, b}), aggregate_cv(std::vector<ConfusionMatrix>{b, a}));
  EXPECT_THROW(aggregate_cv(std::vector<ConfusionMatrix>{}), Error);
}
