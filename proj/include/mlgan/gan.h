#ifndef MLGAN_GAN_H_
#define MLGAN_GAN_H_

// Generator/discriminator wiring and the adversarial losses.
//
// The generator G is a multi-label classifier: features -> per-label
// probabilities. The discriminator D is a Wasserstein critic scoring a
// (label set, features) pair with an unbounded real. Label vectors and
// probability vectors are carried as (batch, |S|) tensors; features as
// (batch, d). A single instance may be passed as a rank-1 vector.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mlgan/autodiff.h"
#include "mlgan/nn.h"
#include "mlgan/random.h"
#include "mlgan/tensor.h"

namespace mlgan {

// Probabilities are clamped to [kProbClamp, 1 - kProbClamp] before any log.
inline constexpr double kProbClamp = 1e-7;

// How `inv_temperature` enters the Gumbel-sigmoid: the noisy logit is
// multiplied by it (default) or divided by it (i.e. read as a temperature).
enum class TemperatureMode { kMultiply, kDivide };

struct GanConfig {
  double alpha = 10.0;   // weight of the logistic loss in G's objective
  double lambda = 10.0;  // gradient-penalty weight
  double inv_temperature = 0.9;
  TemperatureMode temperature_mode = TemperatureMode::kMultiply;
  std::size_t proj_dim = 32;
  std::size_t hidden_dim = 64;
  std::size_t hidden_layers = 4;
  double leaky_slope = 0.2;

  // Throws Error naming the first violated constraint.
  void Validate() const;
};

// Fixed feature map z = f(x). Never trained.
class FeatureExtractor {
 public:
  static FeatureExtractor Identity(std::size_t dim);
  // Identity when dim <= budget, otherwise a random Gaussian projection to
  // `budget` dimensions drawn from `seed`.
  static FeatureExtractor ForDataset(std::size_t dim, std::size_t budget,
                                     std::uint64_t seed);

  std::size_t in_size() const { return in_; }
  std::size_t out_size() const { return identity_ ? in_ : projection_.shape()[0]; }
  bool identity() const { return identity_; }
  // (out, in); empty for the identity map.
  const Tensor& projection() const { return projection_; }

  Tensor Extract(const Tensor& x) const;
  Var Extract(Var x) const;

 private:
  std::size_t in_ = 0;
  bool identity_ = true;
  Tensor projection_;
};

// Critic over (labels, features): labels and features are each projected
// to proj_dim, concatenated, passed through hidden_layers leaky-relu layers
// and a final linear unit. Without a feature projection the critic is
// unconditional and ignores the features.
struct Discriminator {
  LinearLayer label_proj;
  std::optional<LinearLayer> feature_proj;
  Mlp trunk;

  bool conditional() const { return feature_proj.has_value(); }
  std::size_t num_labels() const { return label_proj.in_size(); }
  // label_proj (W, b), feature_proj (W, b) if present, then trunk.
  std::vector<Tensor*> parameters();
  std::vector<const Tensor*> parameters() const;
};

Discriminator InitDiscriminator(std::size_t num_labels,
                                std::size_t feature_dim, const GanConfig& cfg,
                                bool conditional, Rng& rng);

// Checkpoint text format:
//   MLGAN-CRITIC v1
//   conditional <0|1>
//   <label projection as a one-layer MLP checkpoint>
//   <feature projection, likewise, when conditional>
//   <trunk MLP checkpoint>
void WriteDiscriminator(const Discriminator& d, std::ostream& out);
Discriminator ReadDiscriminator(std::istream& in,
                                const std::string& source = "checkpoint");
void SaveDiscriminator(const Discriminator& d, const std::string& path);
Discriminator LoadDiscriminator(const std::string& path);

// A discriminator whose parameters are leaves on some tape.
struct BoundDiscriminator {
  const Discriminator* model = nullptr;
  const FeatureExtractor* extractor = nullptr;
  std::vector<Var> params;
};

BoundDiscriminator BindDiscriminator(const Discriminator& d,
                                     const FeatureExtractor& fext, Tape& tape,
                                     bool trainable);

// D(labels, x): one score per row, shape (batch,) or () for a single row.
Var DiscriminatorScore(const BoundDiscriminator& d, Var labels, Var features);

// Any scoring function of (labels, features); lets the penalty be computed
// for hand-written critics as well as for a Discriminator.
using Critic = std::function<Var(Var labels, Var features)>;
Critic AsCritic(const BoundDiscriminator& d);

// G's per-label probabilities for raw features x, clamped.
Var ClassifierForward(const Mlp& g, std::span<const Var> params,
                      const FeatureExtractor& fext, Var features);
Var ClassifierForward(const Mlp& g, const FeatureExtractor& fext,
                      Var features);
// Convenience: probabilities as a tensor.
Tensor PredictProbabilities(const Mlp& g, const FeatureExtractor& fext,
                            const Tensor& features);

// Relaxed Bernoulli sample sigma(k (logit(p) + log u - log(1 - u))), with k
// the inverse temperature. The logistic noise is a constant leaf: gradients
// reach `probs` only.
Var GumbelSigmoidSample(Var probs, double inv_temperature, Rng& rng,
                        TemperatureMode mode = TemperatureMode::kMultiply);

// 1 where p > 0.5 (strictly), else 0.
Tensor HardThreshold(const Tensor& probs);

// Binary cross-entropy summed over labels, averaged over rows.
Var LogisticLoss(Var probs, Var labels);

// -mean(scores) + alpha * logistic.
Var GeneratorLoss(Var generated_scores, Var logistic, double alpha);

// eps * y + (1 - eps) * y_hat with one eps per row; `eps` has shape
// (batch,) for a batch or () for a single vector.
Var Interpolate(Var y, Var y_hat, Var eps);
Var Interpolate(Var y, Var y_hat, double eps);

struct GradientPenalty {
  Var penalty;     // mean over rows of (|grad_y* D| - 1)^2
  Var grad_norms;  // |grad_y* D| per row
};

// Draws eps ~ U(0, 1) per row, forms y*, and penalizes the deviation of the
// critic's label-gradient norm from 1. The result depends on the critic's
// parameters through a gradient, so differentiating it is second order.
GradientPenalty ComputeGradientPenalty(const Critic& critic, Var y, Var y_hat,
                                       Var features, Rng& rng);

// -mean(real) + w * mean(generated) + 0.5 * mean(mismatched) + lambda * gp,
// where w = 0.5 with mismatched pairs and 1 without.
Var DiscriminatorLoss(Var real_scores, Var generated_scores,
                      std::optional<Var> mismatched_scores, Var penalty,
                      double lambda);

}  // namespace mlgan

#endif  // MLGAN_GAN_H_
