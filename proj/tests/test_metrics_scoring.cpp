#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <vector>

#include "rootscore/error.hpp"
#include "rootscore/image.hpp"
#include "rootscore/metrics.hpp"
#include "rootscore/rng.hpp"
#include "rootscore/scoring.hpp"

using namespace rootscore;

namespace {

LabelMask random_mask(Rng& rng, int w, int h) {
  LabelMask m = LabelMask::filled(w, h, 0);
  for (auto& c : m.classes) c = static_cast<uint8_t>(rng.below(3));
  return m;
}

// Direct-formula oracles, written against pixel sets rather than the library's
// running sums.
struct SetCounts {
  int64_t pred = 0, truth = 0, inter = 0, uni = 0;
};

SetCounts count_sets(const LabelMask& a, const LabelMask& b, uint8_t cls) {
  SetCounts s;
  for (size_t i = 0; i < a.classes.size(); ++i) {
    const bool pa = a.classes[i] == cls, pb = b.classes[i] == cls;
    s.pred += pa;
    s.truth += pb;
    s.inter += pa && pb;
    s.uni += pa || pb;
  }
  return s;
}

}  // namespace

TEST_CASE("dice and iou match set-count oracles on random masks") {
  Rng rng(7);
  for (int it = 0; it < 120; ++it) {
    const int w = rng.range_int(1, 17), h = rng.range_int(1, 17);
    LabelMask a = random_mask(rng, w, h);
    LabelMask b = random_mask(rng, w, h);
    for (uint8_t cls : {kClassBackground, kClassRoot, kClassNecrosis}) {
      const SetCounts s = count_sets(a, b, cls);
      const double dice_oracle =
          (2.0 * s.inter + 1e-6) / (double(s.pred) + double(s.truth) + 1e-6);
      CHECK(dice_coefficient(a, b, cls) ==
            doctest::Approx(dice_oracle).epsilon(1e-12));
      auto got = iou(a, b, cls);
      if (s.uni == 0) {
        CHECK(!got.has_value());
      } else {
        REQUIRE(got.has_value());
        CHECK(*got == doctest::Approx(double(s.inter) / double(s.uni))
                          .epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("dice equals 2*iou/(1+iou) exactly on hard masks") {
  // Both sides reduce to ratios of small integers; comparing the smooth-free
  // rational forms keeps the check exact.
  Rng rng(11);
  int checked = 0;
  for (int it = 0; it < 150; ++it) {
    const int w = rng.range_int(1, 12), h = rng.range_int(1, 12);
    LabelMask a = random_mask(rng, w, h);
    LabelMask b = random_mask(rng, w, h);
    for (uint8_t cls : {kClassRoot, kClassNecrosis}) {
      const SetCounts s = count_sets(a, b, cls);
      if (s.uni == 0 || s.pred + s.truth == 0) continue;
      const double dice = 2.0 * s.inter / (double(s.pred) + double(s.truth));
      const double j = double(s.inter) / double(s.uni);
      // 2I/(P+T) == 2*(I/U)/(1+I/U) because U = P+T-I
      CHECK(dice == doctest::Approx(2.0 * j / (1.0 + j)).epsilon(1e-12));
      // and the library value converges to the same thing
      CHECK(dice_coefficient(a, b, cls, 0.0) == dice);
      ++checked;
    }
  }
  CHECK(checked > 100);
}

TEST_CASE("mean_iou skips empty-union classes") {
  LabelMask a = LabelMask::filled(4, 4, 0);
  LabelMask b = LabelMask::filled(4, 4, 0);
  // nothing of interest anywhere: agreement
  CHECK(mean_iou(a, b) == 1.0);

  a.set(0, 0, kClassRoot);
  b.set(0, 0, kClassRoot);
  a.set(1, 0, kClassRoot);
  // root iou = 1/2, necrosis skipped
  CHECK(mean_iou(a, b) == doctest::Approx(0.5).epsilon(1e-12));

  b.set(2, 2, kClassNecrosis);
  // root 1/2, necrosis 0/1
  CHECK(mean_iou(a, b) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("regression stats match direct formulas on random data") {
  Rng rng(23);
  for (int it = 0; it < 120; ++it) {
    const int n = rng.range_int(2, 40);
    std::vector<double> pred(n), truth(n);
    for (int i = 0; i < n; ++i) {
      pred[i] = rng.uniform(0.0, 100.0);
      truth[i] = rng.uniform(0.0, 100.0);
    }
    // keep truth non-constant
    truth[0] = 1.0;
    truth[n - 1] = 99.0;

    double mp = 0, mt = 0;
    for (int i = 0; i < n; ++i) {
      mp += pred[i];
      mt += truth[i];
    }
    mp /= n;
    mt /= n;
    double ss_res = 0, ss_tot = 0, cov = 0, var_p = 0;
    for (int i = 0; i < n; ++i) {
      ss_res += (truth[i] - pred[i]) * (truth[i] - pred[i]);
      ss_tot += (truth[i] - mt) * (truth[i] - mt);
      cov += (pred[i] - mp) * (truth[i] - mt);
      var_p += (pred[i] - mp) * (pred[i] - mp);
    }
    const RegressionStats s = regression_stats(pred, truth);
    CHECK(s.mse == doctest::Approx(ss_res / n).epsilon(1e-9));
    CHECK(s.r2 == doctest::Approx(1.0 - ss_res / ss_tot).epsilon(1e-9));
    CHECK(s.r ==
          doctest::Approx(cov / std::sqrt(var_p * ss_tot)).epsilon(1e-9));
  }
}

TEST_CASE("regression stats special cases") {
  CHECK_THROWS_AS(regression_stats({1.0}, {1.0}), Error);
  CHECK_THROWS_AS(regression_stats({1.0, 2.0}, {1.0}), Error);
  // constant truth: no variance to explain
  CHECK_THROWS_AS(regression_stats({1.0, 2.0}, {3.0, 3.0}), Error);
  // constant prediction: defined, with r pinned to 0
  const RegressionStats s = regression_stats({5.0, 5.0, 5.0}, {1.0, 5.0, 9.0});
  CHECK(s.r == 0.0);
  CHECK(s.mse == doctest::Approx((16.0 + 0.0 + 16.0) / 3.0));

  // r is invariant under positive affine maps of the prediction
  Rng rng(5);
  std::vector<double> pred(20), truth(20), mapped(20);
  for (int i = 0; i < 20; ++i) {
    pred[i] = rng.uniform(0.0, 100.0);
    truth[i] = rng.uniform(0.0, 100.0);
    mapped[i] = 3.5 * pred[i] + 11.0;
  }
  CHECK(regression_stats(pred, truth).r ==
        doctest::Approx(regression_stats(mapped, truth).r).epsilon(1e-12));
  // perfect prediction
  const RegressionStats p = regression_stats(truth, truth);
  CHECK(p.mse == 0.0);
  CHECK(p.r2 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(p.r == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("soft dice matches the scalar formula") {
  Rng rng(31);
  for (int it = 0; it < 100; ++it) {
    const int n = rng.range_int(1, 64);
    std::vector<float> p(n), t(n);
    for (int i = 0; i < n; ++i) {
      p[i] = rng.uniform_f(0.0f, 1.0f);
      t[i] = rng.bernoulli(0.5) ? 1.0f : 0.0f;
    }
    double inter = 0, sp = 0, st = 0;
    for (int i = 0; i < n; ++i) {
      inter += double(p[i]) * t[i];
      sp += p[i];
      st += t[i];
    }
    const double oracle = (2.0 * inter + 1e-6) / (sp + st + 1e-6);
    CHECK(soft_dice(p, t) == doctest::Approx(oracle).epsilon(1e-9));
  }
  // uniform 1/3 prediction on a half root / half necrosis strip
  std::vector<float> pu(8, 1.0f / 3.0f), tu(8, 0.0f);
  for (int i = 0; i < 4; ++i) tu[i] = 1.0f;
  const double third = double(1.0f / 3.0f);
  const double expect = (2.0 * 4.0 * third + 1e-6) / (8.0 * third + 4.0 + 1e-6);
  CHECK(soft_dice(pu, tu) == doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("necrosis percentage and scoring") {
  LabelMask m = LabelMask::filled(10, 10, kClassBackground);
  for (int x = 0; x < 8; ++x) m.set(x, 0, kClassRoot);
  for (int x = 0; x < 2; ++x) m.set(x, 1, kClassNecrosis);
  // 2 necrosis / (2 + 8) root-ish pixels
  CHECK(necrosis_percentage(m) == doctest::Approx(20.0).epsilon(1e-12));
  const NecrosisScore s = score_mask(m);
  CHECK(s.p_nec == 2);
  CHECK(s.p_root == 8);
  CHECK(s.severity == 4);

  LabelMask empty = LabelMask::filled(4, 4, kClassBackground);
  CHECK_THROWS_AS(necrosis_percentage(empty), Error);
  try {
    necrosis_percentage(empty);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NoRootDetected);
  }

  LabelMask all_root = LabelMask::filled(4, 4, kClassRoot);
  CHECK(necrosis_percentage(all_root) == 0.0);
  CHECK(score_mask(all_root).severity == 1);
}

TEST_CASE("severity boundaries") {
  CHECK(severity_score(0.0) == 1);
  CHECK(severity_score(2.0) == 1);
  CHECK(severity_score(2.0001) == 2);
  CHECK(severity_score(5.0) == 2);
  CHECK(severity_score(5.0001) == 3);
  CHECK(severity_score(10.0) == 3);
  CHECK(severity_score(10.0001) == 4);
  CHECK(severity_score(25.0) == 4);
  CHECK(severity_score(25.0001) == 5);
  CHECK(severity_score(100.0) == 5);
  CHECK_THROWS_AS(severity_score(-0.0001), Error);
  CHECK_THROWS_AS(severity_score(100.0001), Error);
  CHECK_THROWS_AS(severity_score(std::nan("")), Error);
}

TEST_CASE("severity is monotone in percentage") {
  Rng rng(41);
  for (int it = 0; it < 200; ++it) {
    const double a = rng.uniform(0.0, 100.0);
    const double b = rng.uniform(0.0, 100.0);
    if (a <= b) {
      CHECK(severity_score(a) <= severity_score(b));
    } else {
      CHECK(severity_score(a) >= severity_score(b));
    }
  }
}

TEST_CASE("overlay renders root green and necrosis red") {
  LabelMask m = LabelMask::filled(3, 1, kClassBackground);
  m.set(1, 0, kClassRoot);
  m.set(2, 0, kClassNecrosis);
  const RgbImage img = render_overlay(m);
  CHECK(img.get(0, 0) == Rgb{0, 0, 0});
  CHECK(img.get(1, 0) == Rgb{0, 255, 0});
  CHECK(img.get(2, 0) == Rgb{255, 0, 0});
}

TEST_CASE("score json carries the full record") {
  LabelMask m = LabelMask::filled(2, 2, kClassRoot);
  m.set(0, 0, kClassNecrosis);
  const auto j = score_json("img.png", score_mask(m));
  CHECK(j.at("image") == "img.png");
  CHECK(j.at("p_nec") == 1);
  CHECK(j.at("p_root") == 3);
  CHECK(j.at("percentage") == doctest::Approx(25.0));
  CHECK(j.at("severity") == 4);
}

TEST_CASE("metrics csv writes nan for missing predictions") {
  MetricsRow ok{"a.png", 0.5, 0.25, 0.4, 0.2, 0.3, 12.5, 10.0};
  MetricsRow failed{"b.png", 0, 0, std::nullopt, std::nullopt, 0,
                    std::nullopt, 10.0};
  const std::string path = "test_metrics_tmp.csv";
  write_metrics_csv(path, {ok, failed});
  std::ifstream in(path);
  std::string header, l1, l2;
  std::getline(in, header);
  std::getline(in, l1);
  std::getline(in, l2);
  CHECK(header ==
        "image,dice_root,dice_necrosis,iou_root,iou_necrosis,mean_iou,pred_pct,"
        "true_pct");
  CHECK(l1 == "a.png,0.5,0.25,0.4,0.2,0.3,12.5,10");
  CHECK(l2 == "b.png,0,0,nan,nan,0,nan,10");
  std::remove(path.c_str());
}
