#ifndef MLGAN_TRAINING_H_
#define MLGAN_TRAINING_H_

// Pretraining, the alternating adversarial loop and the ablation runner.
//
// Randomness: a run's seed is expanded with DeriveSeed into independent
// streams per phase ("generator_init", "pretrain", "discriminator_init",
// "adversarial"), so two variants with the same seed share the same
// initial and pretrained generator.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mlgan/gan.h"
#include "mlgan/metrics.h"
#include "mlgan/nn.h"
#include "mlgan/random.h"
#include "mlgan/synthdata.h"

namespace mlgan {

enum class Variant {
  kFull,
  kNoNegativeSampling,  // L_D without mismatched pairs
  kUnconditionalD,      // D sees labels only
  kNoGumbel,            // D sees G's continuous probabilities
  kBaselineOnly,        // pretraining only
};

const char* VariantName(Variant v);
// Throws Error listing the valid names.
Variant ParseVariant(const std::string& name);
std::vector<Variant> AllVariants();

struct TrainConfig {
  double lr_g = 1e-4;
  double lr_d = 1e-4;
  double pretrain_lr = 1e-4;
  std::size_t batch_size = 64;
  std::size_t d_steps_per_g = 3;
  std::size_t pretrain_epochs = 200;
  std::size_t adv_epochs = 30;
  std::size_t generator_hidden = 64;  // G is [d, hidden, |S|]
  std::size_t feature_budget = 64;    // larger inputs are projected down
  std::size_t validation_size = 500;  // leading train instances
  GanConfig gan;
  Variant variant = Variant::kFull;
  std::uint64_t seed = 0;

  void Validate() const;
};

// One generator update (adversarial) or one pretraining batch.
struct IterationRecord {
  enum class Phase { kPretrain, kAdversarial };
  Phase phase = Phase::kPretrain;
  std::size_t iteration = 0;  // counts from 1 within the phase
  std::size_t epoch = 0;      // counts from 1 within the phase
  double logistic = 0.0;
  // Adversarial phase only.
  double loss_g = 0.0;
  double loss_d = 0.0;     // mean over the D steps of this iteration
  double gp = 0.0;         // mean penalty (unweighted) over the D steps
  double grad_norm = 0.0;  // mean |grad_y* D| over the D steps
};

struct EpochRecord {
  IterationRecord::Phase phase = IterationRecord::Phase::kPretrain;
  std::size_t epoch = 0;
  double mean_logistic = 0.0;
  MetricReport validation;
};

struct TrainLog {
  std::vector<IterationRecord> iterations;
  std::vector<EpochRecord> epochs;
  std::size_t g_updates = 0;  // adversarial generator updates
  std::size_t d_updates = 0;
};

// Iteration rows:
//   phase,epoch,iteration,logistic,loss_g,loss_d,gp,grad_norm
// with the last four cells empty on pretraining rows.
void WriteIterationCsv(const TrainLog& log, std::ostream& out);
// phase,epoch,mean_logistic,C-P,C-R,C-F1,O-P,O-R,O-F1,mean_labels
void WriteEpochCsv(const TrainLog& log, std::ostream& out);

// The discriminator objective of one D step: three fresh batches (matched,
// generated, mismatched) drawn from `rng`, with the construction switched
// by cfg.variant. Everything lives on `d`'s tape.
struct DiscriminatorObjective {
  Var loss;
  Var real_scores;
  Var generated_scores;
  std::optional<Var> mismatched_scores;
  GradientPenalty penalty;
  Var generated_labels;       // what D was shown for the generated pairs
  Tensor generated_features;  // their raw features
};
DiscriminatorObjective BuildDiscriminatorObjective(
    const BoundDiscriminator& d, const Mlp& g, const Dataset& data,
    const TrainConfig& cfg, Rng& rng);

// The generator objective of one G step on a fresh matched batch, with D
// bound as constants on the same tape as `g_params`.
struct GeneratorObjective {
  Var loss;
  Var logistic;
  Var probabilities;  // G(x)
  Var shown_labels;   // what D scored: a relaxed sample, or G(x) itself
};
GeneratorObjective BuildGeneratorObjective(const Mlp& g,
                                           std::span<const Var> g_params,
                                           const BoundDiscriminator& d,
                                           const Dataset& data,
                                           const TrainConfig& cfg, Rng& rng);

Mlp InitGenerator(std::size_t input_dim, std::size_t num_labels,
                  const TrainConfig& cfg, Rng& rng);

// Adam on the batched logistic loss, pretrain_epochs passes over the
// shuffled train split. Appends to `log`.
void PretrainGenerator(Mlp& g, const FeatureExtractor& fext,
                       const Dataset& data, const TrainConfig& cfg, Rng& rng,
                       TrainLog& log);

// adv_epochs * ceil(n_train / batch_size) generator updates, each preceded
// by d_steps_per_g discriminator updates. Appends to `log`.
void TrainAdversarial(Mlp& g, Discriminator& d, const FeatureExtractor& fext,
                      const Dataset& data, const TrainConfig& cfg, Rng& rng,
                      TrainLog& log);

MetricReport EvaluateGenerator(const Mlp& g, const FeatureExtractor& fext,
                               const Dataset& data, Split split);
MetricReport EvaluateGenerator(const Mlp& g, const FeatureExtractor& fext,
                               const Dataset& data,
                               const std::vector<std::size_t>& indices);

struct TrainedModels {
  Mlp generator;
  std::optional<Discriminator> discriminator;  // absent for baseline_only
  FeatureExtractor extractor;
  TrainLog log;
};

FeatureExtractor ExtractorFor(const Dataset& data, const TrainConfig& cfg);

// Generator init and pretraining for cfg.seed.
TrainedModels RunPretraining(const Dataset& data, const TrainConfig& cfg);
// Continues `pretrained` with cfg.variant's adversarial phase; a no-op for
// baseline_only.
TrainedModels RunAdversarial(const Dataset& data, const TrainConfig& cfg,
                             TrainedModels pretrained);
// RunPretraining followed by RunAdversarial.
TrainedModels RunTraining(const Dataset& data, const TrainConfig& cfg);

struct AblationRow {
  Variant variant = Variant::kFull;
  std::uint64_t seed = 0;
  MetricReport test;
  double final_grad_norm = 0.0;  // mean over the last epoch; 0 for baseline
};

// Every variant for every seed, sharing the pretrained generator per seed.
// Rows are ordered by seed, then AllVariants() order.
std::vector<AblationRow> RunAblation(const Dataset& data,
                                     const TrainConfig& base,
                                     const std::vector<std::uint64_t>& seeds);

// Mean grad_norm over the adversarial iterations of the last epoch.
double FinalEpochGradNorm(const TrainLog& log);

}  // namespace mlgan

#endif  // MLGAN_TRAINING_H_
