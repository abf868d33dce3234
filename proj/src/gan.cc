#include "mlgan/gan.h"

#include <cmath>
#include <fstream>

#include "mlgan/text_format.h"

namespace mlgan {

void GanConfig::Validate() const {
  if (!(alpha >= 0.0)) throw Error("gan: alpha must be >= 0");
  if (!(lambda >= 0.0)) throw Error("gan: lambda must be >= 0");
  if (!(inv_temperature > 0.0)) {
    throw Error("gan: inv_temperature must be > 0");
  }
  if (proj_dim == 0) throw Error("gan: proj_dim must be positive");
  if (hidden_dim == 0) throw Error("gan: hidden_dim must be positive");
  if (hidden_layers == 0) throw Error("gan: hidden_layers must be positive");
  if (!(leaky_slope >= 0.0)) throw Error("gan: leaky_slope must be >= 0");
}

FeatureExtractor FeatureExtractor::Identity(std::size_t dim) {
  FeatureExtractor f;
  f.in_ = dim;
  return f;
}

FeatureExtractor FeatureExtractor::ForDataset(std::size_t dim,
                                              std::size_t budget,
                                              std::uint64_t seed) {
  FeatureExtractor f = Identity(dim);
  if (dim <= budget) return f;
  f.identity_ = false;
  f.projection_ = Tensor(Shape{budget, dim});
  Rng rng(DeriveSeed(seed, "feature_extractor"));
  const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
  for (double& v : f.projection_.data()) v = rng.Normal() * scale;
  return f;
}

Tensor FeatureExtractor::Extract(const Tensor& x) const {
  if (x.cols() != in_) {
    throw ShapeError("feature extractor expects width " + std::to_string(in_) +
                     ", got shape " + ShapeString(x.shape()));
  }
  if (identity_) return x;
  Tape tape;
  return Extract(tape.Constant(x)).value();
}

Var FeatureExtractor::Extract(Var x) const {
  if (x.shape().empty() || x.shape().back() != in_) {
    throw ShapeError("feature extractor expects width " + std::to_string(in_) +
                     ", got shape " + ShapeString(x.shape()));
  }
  if (identity_) return x;
  Tape& tape = *x.tape();
  Var pt = tape.Constant(Tensor(Shape{in_, out_size()}, [&] {
    std::vector<double> t(projection_.size());
    const std::size_t out = out_size();
    for (std::size_t r = 0; r < out; ++r) {
      for (std::size_t c = 0; c < in_; ++c) t[c * out + r] = projection_.at(r, c);
    }
    return t;
  }()));
  if (x.shape().size() == 1) {
    return Reshape(MatMul(Reshape(x, {1, in_}), pt), {out_size()});
  }
  return MatMul(x, pt);
}

std::vector<Tensor*> Discriminator::parameters() {
  std::vector<Tensor*> p = {&label_proj.weight, &label_proj.bias};
  if (feature_proj) {
    p.push_back(&feature_proj->weight);
    p.push_back(&feature_proj->bias);
  }
  for (Tensor* t : trunk.parameters()) p.push_back(t);
  return p;
}

std::vector<const Tensor*> Discriminator::parameters() const {
  std::vector<const Tensor*> p = {&label_proj.weight, &label_proj.bias};
  if (feature_proj) {
    p.push_back(&feature_proj->weight);
    p.push_back(&feature_proj->bias);
  }
  for (const Tensor* t : trunk.parameters()) p.push_back(t);
  return p;
}

Discriminator InitDiscriminator(std::size_t num_labels,
                                std::size_t feature_dim, const GanConfig& cfg,
                                bool conditional, Rng& rng) {
  cfg.Validate();
  Discriminator d;
  d.label_proj = InitLinear(num_labels, cfg.proj_dim, rng);
  if (conditional) d.feature_proj = InitLinear(feature_dim, cfg.proj_dim, rng);
  std::vector<std::size_t> sizes = {conditional ? 2 * cfg.proj_dim
                                                : cfg.proj_dim};
  for (std::size_t i = 0; i < cfg.hidden_layers; ++i) {
    sizes.push_back(cfg.hidden_dim);
  }
  sizes.push_back(1);
  d.trunk = InitMlp(sizes, Activation::kLeakyRelu, Activation::kIdentity, rng,
                    cfg.leaky_slope);
  return d;
}

namespace {

constexpr char kCriticMagic[] = "MLGAN-CRITIC v1";

Mlp AsMlp(const LinearLayer& layer) {
  Mlp m;
  m.layers = {layer};
  m.hidden = Activation::kIdentity;
  m.output = Activation::kIdentity;
  return m;
}

LinearLayer ReadLinear(LineReader& reader) {
  Mlp m = ReadMlp(reader);
  if (m.layers.size() != 1) reader.Fail("expected a single-layer projection");
  return m.layers.front();
}

}  // namespace

void WriteDiscriminator(const Discriminator& d, std::ostream& out) {
  out << kCriticMagic << "\n";
  out << "conditional " << (d.conditional() ? 1 : 0) << "\n";
  WriteMlp(AsMlp(d.label_proj), out);
  if (d.feature_proj) WriteMlp(AsMlp(*d.feature_proj), out);
  WriteMlp(d.trunk, out);
}

Discriminator ReadDiscriminator(std::istream& in, const std::string& source) {
  LineReader reader(in, source);
  reader.ExpectLine(kCriticMagic);
  const std::vector<std::string> cond = reader.Tokens();
  if (cond.size() != 2 || cond[0] != "conditional" ||
      (cond[1] != "0" && cond[1] != "1")) {
    reader.Fail("expected 'conditional <0|1>'");
  }
  Discriminator d;
  d.label_proj = ReadLinear(reader);
  if (cond[1] == "1") d.feature_proj = ReadLinear(reader);
  d.trunk = ReadMlp(reader);
  const std::size_t width = d.label_proj.out_size() +
                            (d.feature_proj ? d.feature_proj->out_size() : 0);
  if (d.trunk.in_size() != width || d.trunk.out_size() != 1) {
    reader.Fail("trunk sizes do not match the projections");
  }
  reader.ExpectEnd();
  return d;
}

void SaveDiscriminator(const Discriminator& d, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  WriteDiscriminator(d, out);
  if (!out) throw Error("error writing '" + path + "'");
}

Discriminator LoadDiscriminator(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open checkpoint '" + path + "'");
  return ReadDiscriminator(in, path);
}

BoundDiscriminator BindDiscriminator(const Discriminator& d,
                                     const FeatureExtractor& fext, Tape& tape,
                                     bool trainable) {
  const auto params = d.parameters();
  return {&d, &fext, BindParameters(params, tape, trainable)};
}

namespace {

// Views a single vector as a one-row batch.
Var AsBatch(Var v) {
  const Shape& s = v.shape();
  return s.size() == 1 ? Reshape(v, {1, s[0]}) : v;
}

}  // namespace

Var DiscriminatorScore(const BoundDiscriminator& d, Var labels,
                       Var features) {
  const Discriminator& m = *d.model;
  if (labels.shape().empty() || labels.shape().back() != m.num_labels()) {
    throw ShapeError("discriminator expects " +
                     std::to_string(m.num_labels()) +
                     " labels per row, got shape " +
                     ShapeString(labels.shape()));
  }
  const bool single = labels.shape().size() == 1;
  Var y = AsBatch(labels);
  Var h = LinearForward(d.params[0], d.params[1], y);
  std::size_t next = 2;
  if (m.conditional()) {
    if (features.shape().size() != labels.shape().size() ||
        (!single && features.shape()[0] != labels.shape()[0])) {
      throw ShapeError("discriminator: features " +
                       ShapeString(features.shape()) + " vs labels " +
                       ShapeString(labels.shape()));
    }
    Var z = AsBatch(d.extractor->Extract(features));
    if (z.shape()[1] != m.feature_proj->in_size()) {
      throw ShapeError("discriminator expects extracted width " +
                       std::to_string(m.feature_proj->in_size()) + ", got " +
                       std::to_string(z.shape()[1]));
    }
    h = Concat({LinearForward(d.params[2], d.params[3], z), h});
    next = 4;
  }
  std::span<const Var> trunk_params(d.params.begin() + next, d.params.end());
  Var out = MlpForward(m.trunk, trunk_params, h);  // (batch, 1)
  return single ? Reshape(out, {}) : Reshape(out, {out.shape()[0]});
}

Critic AsCritic(const BoundDiscriminator& d) {
  return [d](Var labels, Var features) {
    return DiscriminatorScore(d, labels, features);
  };
}

Var ClassifierForward(const Mlp& g, std::span<const Var> params,
                      const FeatureExtractor& fext, Var features) {
  Var p = MlpForward(g, params, fext.Extract(features));
  return Clamp(p, kProbClamp, 1.0 - kProbClamp);
}

Var ClassifierForward(const Mlp& g, const FeatureExtractor& fext,
                      Var features) {
  const auto params = g.parameters();
  const std::vector<Var> vars =
      BindParameters(params, *features.tape(), false);
  return ClassifierForward(g, vars, fext, features);
}

Tensor PredictProbabilities(const Mlp& g, const FeatureExtractor& fext,
                            const Tensor& features) {
  Tape tape;
  return ClassifierForward(g, fext, tape.Constant(features)).value();
}

Var GumbelSigmoidSample(Var probs, double inv_temperature, Rng& rng,
                        TemperatureMode mode) {
  if (!(inv_temperature > 0.0)) {
    throw Error("gumbel sigmoid: inverse temperature must be > 0");
  }
  Tensor noise(probs.shape());
  for (double& g : noise.data()) {
    const double u = rng.UniformOpen();
    g = std::log(u) - std::log1p(-u);
  }
  Var logits = Log(probs) - Log(1.0 - probs);
  Var noisy = logits + probs.tape()->Constant(std::move(noise), "gumbel_noise");
  const double k = mode == TemperatureMode::kMultiply ? inv_temperature
                                                      : 1.0 / inv_temperature;
  return Sigmoid(Scale(noisy, k));
}

Tensor HardThreshold(const Tensor& probs) {
  Tensor out(probs.shape());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    out[i] = probs[i] > 0.5 ? 1.0 : 0.0;
  }
  return out;
}

Var LogisticLoss(Var probs, Var labels) {
  if (probs.shape() != labels.shape()) {
    throw ShapeError("logistic loss: probabilities " +
                     ShapeString(probs.shape()) + " vs labels " +
                     ShapeString(labels.shape()));
  }
  const double rows =
      probs.shape().size() == 2 ? static_cast<double>(probs.shape()[0]) : 1.0;
  Var ll = labels * Log(probs) + (1.0 - labels) * Log(1.0 - probs);
  return Scale(Sum(ll), -1.0 / rows);
}

Var GeneratorLoss(Var generated_scores, Var logistic, double alpha) {
  if (!(alpha >= 0.0)) throw Error("generator loss: alpha must be >= 0");
  return Scale(Mean(generated_scores), -1.0) + Scale(logistic, alpha);
}

Var Interpolate(Var y, Var y_hat, Var eps) {
  if (y.shape() != y_hat.shape()) {
    throw ShapeError("interpolate: " + ShapeString(y.shape()) + " vs " +
                     ShapeString(y_hat.shape()));
  }
  Var e = ExpandLast(eps, y.shape().back());
  if (e.shape() != y.shape()) {
    throw ShapeError("interpolate: eps " + ShapeString(eps.shape()) +
                     " does not match rows of " + ShapeString(y.shape()));
  }
  // y_hat + eps (y - y_hat)
  return y_hat + e * (y - y_hat);
}

Var Interpolate(Var y, Var y_hat, double eps) {
  if (!(eps >= 0.0 && eps <= 1.0)) {
    throw Error("interpolate: eps must lie in [0, 1]");
  }
  Shape rows = y.shape();
  rows.pop_back();
  return Interpolate(y, y_hat, y.tape()->Constant(Tensor(rows, eps)));
}

GradientPenalty ComputeGradientPenalty(const Critic& critic, Var y, Var y_hat,
                                       Var features, Rng& rng) {
  Tape& tape = *y.tape();
  Shape rows = y.shape();
  rows.pop_back();
  Tensor eps(rows);
  for (double& e : eps.data()) e = rng.Uniform();
  Var mixed = Interpolate(y, y_hat, tape.Constant(std::move(eps), "gp_eps"));
  // y* is the point the gradient is taken at, not a function of G.
  Var y_star = tape.Detach(mixed, /*requires_grad=*/true);
  Var scores = critic(y_star, features);
  Var grad = tape.Grad(Sum(scores), {y_star})[0];
  Var norms = L2Norm(grad);
  return {Mean(Square(norms - 1.0)), norms};
}

Var DiscriminatorLoss(Var real_scores, Var generated_scores,
                      std::optional<Var> mismatched_scores, Var penalty,
                      double lambda) {
  if (!(lambda >= 0.0)) throw Error("discriminator loss: lambda must be >= 0");
  Var loss = Scale(Mean(real_scores), -1.0);
  if (mismatched_scores) {
    loss = loss + Scale(Mean(generated_scores), 0.5) +
           Scale(Mean(*mismatched_scores), 0.5);
  } else {
    loss = loss + Mean(generated_scores);
  }
  return loss + Scale(penalty, lambda);
}

}  // namespace mlgan
