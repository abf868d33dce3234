#include "mlgan/gan.h"

#include <cmath>

#include "doctest.h"
#include "fd_oracle.h"

namespace mlgan {
namespace {

double Sigm(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Mlp SmallGenerator(std::size_t d, std::size_t labels, Rng& rng) {
  return InitMlp(std::vector<std::size_t>{d, 8, labels},
                 Activation::kLeakyRelu, Activation::kSigmoid, rng);
}

TEST_CASE("classifier forward") {
  Rng rng(1);
  const FeatureExtractor fext = FeatureExtractor::Identity(5);
  SUBCASE("zero weights give one half everywhere") {
    Mlp g = SmallGenerator(5, 3, rng);
    for (Tensor* p : g.parameters()) *p = Tensor(p->shape());
    const Tensor p = PredictProbabilities(g, fext, Tensor::Vector({1, 2, 3, 4, 5}));
    CHECK(p.data() == std::vector<double>{0.5, 0.5, 0.5});
  }
  SUBCASE("pure") {
    const Mlp g = SmallGenerator(5, 3, rng);
    const Tensor x = Tensor::Vector({0.1, -0.2, 0.3, 0.9, -1.0});
    CHECK(PredictProbabilities(g, fext, x) == PredictProbabilities(g, fext, x));
  }
  SUBCASE("outputs lie within the clamp bounds") {
    Mlp g = SmallGenerator(5, 3, rng);
    for (Tensor* p : g.parameters()) {
      for (double& v : p->data()) v = rng.Normal() * 10.0;  // saturate
    }
    Tensor x(Shape{1000, 5});
    for (double& v : x.data()) v = rng.Uniform(-5, 5);
    const Tensor probs = PredictProbabilities(g, fext, x);
    for (double v : probs.data()) {
      CHECK(v >= kProbClamp);
      CHECK(v <= 1.0 - kProbClamp);
    }
  }
  SUBCASE("width mismatch") {
    const Mlp g = SmallGenerator(5, 3, rng);
    CHECK_THROWS_AS(PredictProbabilities(g, fext, Tensor::Vector({1, 2})),
                    ShapeError);
  }
}

TEST_CASE("feature extractor") {
  const FeatureExtractor id = FeatureExtractor::ForDataset(16, 32, 9);
  CHECK(id.identity());
  CHECK(id.out_size() == 16);
  const FeatureExtractor proj = FeatureExtractor::ForDataset(40, 32, 9);
  CHECK_FALSE(proj.identity());
  CHECK(proj.out_size() == 32);
  CHECK(proj.projection() == FeatureExtractor::ForDataset(40, 32, 9).projection());
  Tensor x(Shape{3, 40}, 1.0);
  const Tensor z = proj.Extract(x);
  CHECK(z.shape() == Shape{3, 32});
  double expect = 0.0;
  for (std::size_t c = 0; c < 40; ++c) expect += proj.projection().at(0, c);
  CHECK(z.at(2, 0) == doctest::Approx(expect).epsilon(1e-12));
}

double FractionAboveHalf(double prob, double inv_temp, int draws,
                         std::uint64_t seed) {
  Rng rng(seed);
  Tape tape;
  Var p = tape.Constant(Tensor(Shape{static_cast<std::size_t>(draws)}, prob));
  const Tensor& s = GumbelSigmoidSample(p, inv_temp, rng).value();
  int above = 0;
  for (double v : s.data()) above += v > 0.5;
  return static_cast<double>(above) / draws;
}

TEST_CASE("gumbel sigmoid sampling distribution") {
  SUBCASE("saturated probability") {
    Rng rng(3);
    Tape tape;
    Var p = tape.Constant(Tensor(Shape{10000}, 1.0 - kProbClamp));
    const Tensor& s = GumbelSigmoidSample(p, 0.9, rng).value();
    int high = 0;
    for (double v : s.data()) high += v > 0.99;
    CHECK(high / 10000.0 > 0.999);
  }
  SUBCASE("symmetric at one half") {
    const int n = 100000;
    const double f = FractionAboveHalf(0.5, 0.9, n, 5);
    CHECK(std::abs(f - 0.5) < 3.0 * std::sqrt(0.25 / n));
  }
  SUBCASE("sharp samples recover the Bernoulli probability") {
    // P(logit + g > 0) = sigmoid(logit) for logistic g.
    const int n = 100000;
    const double target = Sigm(1.0);
    const double f = FractionAboveHalf(target, 10.0, n, 8);
    CHECK(std::abs(f - target) < 3.0 * std::sqrt(target * (1 - target) / n));
  }
  SUBCASE("outputs in (0, 1) and deterministic per generator state") {
    Rng a(4), b(4);
    Tape tape;
    Var p = tape.Constant(Tensor::Vector({0.1, 0.5, 0.9}));
    const Tensor sa = GumbelSigmoidSample(p, 0.9, a).value();
    const Tensor sb = GumbelSigmoidSample(p, 0.9, b).value();
    CHECK(sa == sb);
    for (double v : sa.data()) CHECK((v > 0.0 && v < 1.0));
  }
  SUBCASE("temperature mode") {
    Rng a(4), b(4);
    Tape tape;
    Var p = tape.Constant(Tensor::Vector({0.3}));
    const double mult = GumbelSigmoidSample(p, 2.0, a).value()[0];
    const double div =
        GumbelSigmoidSample(p, 0.5, b, TemperatureMode::kDivide).value()[0];
    CHECK(mult == doctest::Approx(div).epsilon(1e-14));
  }
}

TEST_CASE("gumbel sigmoid pathwise gradient with fixed noise") {
  Rng init(12);
  Tensor probs(Shape{4, 3});
  for (double& v : probs.data()) v = init.Uniform(0.05, 0.95);
  Tensor weights(Shape{4, 3});
  for (double& v : weights.data()) v = init.Normal();

  auto f = [&](const std::vector<Tensor>& ps) {
    Rng rng(99);
    Tape tape;
    Var s = GumbelSigmoidSample(tape.Constant(ps[0]), 0.9, rng);
    return Sum(s * tape.Constant(weights)).value().item();
  };
  Rng rng(99);
  Tape tape;
  Var p = tape.Variable(probs);
  Var out = Sum(GumbelSigmoidSample(p, 0.9, rng) * tape.Constant(weights));
  const std::vector<Tensor> analytic = {tape.Grad(out, {p})[0].value()};
  CHECK(testing::RelativeError(analytic,
                               testing::CentralDifferences(f, {probs}, 1e-6)) <
        1e-4);
}

TEST_CASE("hard threshold") {
  CHECK(HardThreshold(Tensor::Vector({0.7, 0.2, 0.51})).data() ==
        std::vector<double>{1, 0, 1});
  CHECK(HardThreshold(Tensor::Vector({0.5})).data() == std::vector<double>{0});
  CHECK(HardThreshold(Tensor::Vector({0.1, 0.49})).data() ==
        std::vector<double>{0, 0});
}

TEST_CASE("discriminator score") {
  Rng rng(6);
  const GanConfig cfg{.proj_dim = 4, .hidden_dim = 6, .hidden_layers = 2};
  const FeatureExtractor fext = FeatureExtractor::Identity(3);

  SUBCASE("only the final bias set gives that bias") {
    Discriminator d = InitDiscriminator(5, 3, cfg, true, rng);
    for (Tensor* p : d.parameters()) *p = Tensor(p->shape());
    d.trunk.layers.back().bias[0] = 1.25;
    Tape tape;
    BoundDiscriminator bd = BindDiscriminator(d, fext, tape, false);
    Tensor y(Shape{4, 5}), x(Shape{4, 3});
    for (double& v : y.data()) v = rng.Uniform();
    for (double& v : x.data()) v = rng.Normal();
    const Tensor& s =
        DiscriminatorScore(bd, tape.Constant(y), tape.Constant(x)).value();
    CHECK(s.shape() == Shape{4});
    for (double v : s.data()) CHECK(v == 1.25);
  }
  SUBCASE("pure and sensitive to the label set") {
    int changed = 0;
    for (int trial = 0; trial < 100; ++trial) {
      const Discriminator d = InitDiscriminator(5, 3, cfg, true, rng);
      Tape tape;
      BoundDiscriminator bd = BindDiscriminator(d, fext, tape, false);
      Var x = tape.Constant(Tensor::Vector({0.2, -0.4, 1.0}));
      Var y1 = tape.Constant(Tensor::Vector({1, 0, 1, 0, 0}));
      Var y2 = tape.Constant(Tensor::Vector({0, 1, 1, 0, 1}));
      const double a = DiscriminatorScore(bd, y1, x).value().item();
      CHECK(a == DiscriminatorScore(bd, y1, x).value().item());
      changed += a != DiscriminatorScore(bd, y2, x).value().item();
    }
    CHECK(changed == 100);
  }
  SUBCASE("unconditional ignores features") {
    const Discriminator d = InitDiscriminator(5, 3, cfg, false, rng);
    CHECK_FALSE(d.conditional());
    Tape tape;
    BoundDiscriminator bd = BindDiscriminator(d, fext, tape, false);
    Var y = tape.Constant(Tensor::Vector({1, 0, 1, 0, 0}));
    CHECK(DiscriminatorScore(bd, y, tape.Constant(Tensor::Vector({1, 2, 3})))
              .value()
              .item() ==
          DiscriminatorScore(bd, y, tape.Constant(Tensor::Vector({-4, 0, 9})))
              .value()
              .item());
  }
  SUBCASE("shape mismatch") {
    const Discriminator d = InitDiscriminator(5, 3, cfg, true, rng);
    Tape tape;
    BoundDiscriminator bd = BindDiscriminator(d, fext, tape, false);
    CHECK_THROWS_AS(DiscriminatorScore(bd, tape.Constant(Tensor::Vector({1, 0})),
                                       tape.Constant(Tensor::Vector({1, 2, 3}))),
                    ShapeError);
  }
}

TEST_CASE("logistic loss values") {
  Tape tape;
  SUBCASE("hand evaluation") {
    Var l = LogisticLoss(tape.Constant(Tensor::Vector({0.8, 0.3})),
                         tape.Constant(Tensor::Vector({1, 0})));
    CHECK(std::abs(l.value().item() - 0.5798184952529422) < 1e-9);
  }
  SUBCASE("uninformative predictions cost ln 2 per label") {
    for (const auto& y : {std::vector<double>{1, 0, 0, 1},
                          std::vector<double>{0, 0, 0, 0}}) {
      Var l = LogisticLoss(tape.Constant(Tensor::Vector({.5, .5, .5, .5})),
                           tape.Constant(Tensor::Vector(y)));
      CHECK(std::abs(l.value().item() - 4.0 * std::log(2.0)) < 1e-9);
    }
  }
  SUBCASE("clamped perfect prediction") {
    Var y = tape.Constant(Tensor::Vector({1, 0, 1}));
    Var l = LogisticLoss(Clamp(y, kProbClamp, 1 - kProbClamp), y);
    CHECK(l.value().item() >= 0.0);
    CHECK(l.value().item() <= 1e-6);
  }
  SUBCASE("batch rows are averaged") {
    Var l = LogisticLoss(tape.Constant(Tensor::Matrix(2, 2, {.8, .3, .8, .3})),
                         tape.Constant(Tensor::Matrix(2, 2, {1, 0, 1, 0})));
    CHECK(std::abs(l.value().item() - 0.5798184952529422) < 1e-9);
  }
}

TEST_CASE("generator loss values") {
  Tape tape;
  Var l = GeneratorLoss(tape.Constant(Tensor::Vector({1.0, 3.0})),
                        tape.Constant(Tensor::Scalar(0.5)), 10.0);
  CHECK(std::abs(l.value().item() - 3.0) < 1e-9);
  Var z = GeneratorLoss(tape.Constant(Tensor::Vector({0.0, 0.0})),
                        tape.Constant(Tensor::Scalar(0.7)), 0.0);
  CHECK(z.value().item() == 0.0);
  CHECK(GanConfig{}.alpha == 10.0);
  CHECK(GanConfig{}.lambda == 10.0);
  CHECK(GanConfig{}.inv_temperature == 0.9);
}

TEST_CASE("interpolate") {
  Tape tape;
  Var y = tape.Constant(Tensor::Vector({1.0, 0.0, 1.0}));
  Var yh = tape.Constant(Tensor::Vector({0.2, 0.7, 0.9}));
  CHECK(Interpolate(y, yh, 1.0).value() == y.value());
  CHECK(Interpolate(y, yh, 0.0).value() == yh.value());
  CHECK(std::abs(Interpolate(y, yh, 0.3).value()[0] - 0.44) < 1e-12);

  Var yb = tape.Constant(Tensor::Matrix(2, 1, {1.0, 1.0}));
  Var yhb = tape.Constant(Tensor::Matrix(2, 1, {0.0, 0.0}));
  Var eps = tape.Constant(Tensor::Vector({0.25, 0.75}));
  CHECK(Interpolate(yb, yhb, eps).value().data() ==
        std::vector<double>{0.25, 0.75});
}

TEST_CASE("gradient penalty closed forms") {
  Tape tape;
  Rng rng(2);
  SUBCASE("unit gradient, one label") {
    Critic d = [](Var y, Var) { return SumLast(y); };
    Var y = tape.Constant(Tensor::Matrix(3, 1, {1, 0, 1}));
    Var yh = tape.Constant(Tensor::Matrix(3, 1, {0.2, 0.5, 0.9}));
    Var x = tape.Constant(Tensor(Shape{3, 2}, 1.0));
    CHECK(ComputeGradientPenalty(d, y, yh, x, rng).penalty.value().item() ==
          0.0);
  }
  SUBCASE("linear critic with gradient (2, 2, 2, 2)") {
    Critic d = [](Var y, Var) { return Scale(SumLast(y), 2.0); };
    Var y = tape.Constant(Tensor::Matrix(2, 4, {1, 0, 1, 0, 0, 0, 1, 1}));
    Var yh = tape.Constant(Tensor(Shape{2, 4}, 0.3));
    Var x = tape.Constant(Tensor(Shape{2, 2}, 0.0));
    GradientPenalty gp = ComputeGradientPenalty(d, y, yh, x, rng);
    CHECK(std::abs(gp.penalty.value().item() - 9.0) < 1e-9);
    CHECK(gp.grad_norms.value().data() == std::vector<double>{4.0, 4.0});
  }
  SUBCASE("constant critic") {
    Critic d = [&](Var y, Var) {
      return tape.Constant(Tensor(Shape{y.shape()[0]}, 3.0));
    };
    Var y = tape.Constant(Tensor::Matrix(1, 2, {1, 0}));
    Var yh = tape.Constant(Tensor::Matrix(1, 2, {0.5, 0.5}));
    Var x = tape.Constant(Tensor::Matrix(1, 1, {0.0}));
    CHECK(ComputeGradientPenalty(d, y, yh, x, rng).penalty.value().item() ==
          1.0);
  }
  SUBCASE("unit-norm label gradient with feature dependence is exactly 0") {
    Critic d = [](Var y, Var x) {
      return SumLast(Slice(y, 2, 1)) + SumLast(Square(x));
    };
    Var y = tape.Constant(Tensor::Matrix(2, 3, {1, 0, 1, 0, 1, 0}));
    Var yh = tape.Constant(Tensor(Shape{2, 3}, 0.4));
    Var x = tape.Constant(Tensor::Matrix(2, 2, {0.5, -1.5, 2.0, 0.1}));
    CHECK(ComputeGradientPenalty(d, y, yh, x, rng).penalty.value().item() ==
          0.0);
  }
}

TEST_CASE("discriminator loss values") {
  Tape tape;
  auto s = [&](double v) { return tape.Constant(Tensor::Vector({v})); };
  Var gp = tape.Constant(Tensor::Scalar(0.04));
  CHECK(std::abs(DiscriminatorLoss(s(2), s(1), s(0), gp, 10.0).value().item() -
                 -1.1) < 1e-9);
  Var zero = tape.Constant(Tensor::Scalar(0.0));
  CHECK(DiscriminatorLoss(s(0), s(0), s(0), zero, 10.0).value().item() == 0.0);
  // Without mismatched pairs the generated term carries weight 1.
  CHECK(std::abs(DiscriminatorLoss(s(2), s(1), std::nullopt, gp, 10.0)
                     .value()
                     .item() -
                 -0.6) < 1e-9);
}

TEST_CASE("raising real scores by c lowers the discriminator loss by c") {
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    Tape tape;
    Tensor real(Shape{8}), gen(Shape{8}), mism(Shape{8});
    for (Tensor* t : {&real, &gen, &mism}) {
      for (double& v : t->data()) v = rng.Normal();
    }
    const double c = rng.Uniform(-3, 3);
    Tensor shifted = real;
    for (double& v : shifted.data()) v += c;
    Var gp = tape.Constant(Tensor::Scalar(rng.Uniform()));
    const double base = DiscriminatorLoss(tape.Constant(real), tape.Constant(gen),
                                          tape.Constant(mism), gp, 10.0)
                            .value()
                            .item();
    const double moved =
        DiscriminatorLoss(tape.Constant(shifted), tape.Constant(gen),
                          tape.Constant(mism), gp, 10.0)
            .value()
            .item();
    CHECK(std::abs((base - moved) - c) < 1e-12);
  }
}

// L_D as a function of the discriminator parameters, with every random draw
// fixed by `seed`.
double DiscriminatorObjective(Discriminator d, const std::vector<Tensor>& params,
                              const FeatureExtractor& fext, const Tensor& y,
                              const Tensor& y_hat, const Tensor& y_mis,
                              const Tensor& x, std::uint64_t seed) {
  auto slots = d.parameters();
  for (std::size_t i = 0; i < slots.size(); ++i) *slots[i] = params[i];
  Tape tape;
  BoundDiscriminator bd = BindDiscriminator(d, fext, tape, false);
  Rng rng(seed);
  Var xv = tape.Constant(x), yv = tape.Constant(y), yh = tape.Constant(y_hat);
  GradientPenalty gp = ComputeGradientPenalty(AsCritic(bd), yv, yh, xv, rng);
  return DiscriminatorLoss(DiscriminatorScore(bd, yv, xv),
                           DiscriminatorScore(bd, yh, xv),
                           DiscriminatorScore(bd, tape.Constant(y_mis), xv),
                           gp.penalty, 10.0)
      .value()
      .item();
}

TEST_CASE("full discriminator loss gradient including the penalty") {
  Rng rng(40);
  const GanConfig cfg{.proj_dim = 3, .hidden_dim = 5, .hidden_layers = 2};
  const FeatureExtractor fext = FeatureExtractor::Identity(2);
  for (int trial = 0; trial < 5; ++trial) {
    const Discriminator d = InitDiscriminator(4, 2, cfg, true, rng);
    Tensor y(Shape{3, 4}), y_hat(Shape{3, 4}), y_mis(Shape{3, 4}), x(Shape{3, 2});
    for (double& v : y.data()) v = rng.Bernoulli(0.5);
    for (double& v : y_mis.data()) v = rng.Bernoulli(0.5);
    for (double& v : y_hat.data()) v = rng.Uniform();
    for (double& v : x.data()) v = rng.Normal();

    Tape tape;
    BoundDiscriminator bd = BindDiscriminator(d, fext, tape, true);
    Rng draw(500 + trial);
    Var xv = tape.Constant(x), yv = tape.Constant(y), yh = tape.Constant(y_hat);
    GradientPenalty gp = ComputeGradientPenalty(AsCritic(bd), yv, yh, xv, draw);
    Var loss = DiscriminatorLoss(DiscriminatorScore(bd, yv, xv),
                                 DiscriminatorScore(bd, yh, xv),
                                 DiscriminatorScore(bd, tape.Constant(y_mis), xv),
                                 gp.penalty, 10.0);
    std::vector<Tensor> analytic;
    for (Var g : tape.Grad(loss, bd.params)) analytic.push_back(g.value());

    std::vector<Tensor> point;
    for (const Tensor* p : d.parameters()) point.push_back(*p);
    auto f = [&](const std::vector<Tensor>& ps) {
      return DiscriminatorObjective(d, ps, fext, y, y_hat, y_mis, x,
                                    500 + trial);
    };
    CHECK(testing::RelativeError(analytic,
                                 testing::CentralDifferences(f, point)) < 1e-3);
  }
}

}  // namespace
}  // namespace mlgan
