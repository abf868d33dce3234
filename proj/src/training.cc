#include "mlgan/training.h"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "mlgan/text_format.h"

namespace mlgan {

const char* VariantName(Variant v) {
  switch (v) {
    case Variant::kFull: return "full";
    case Variant::kNoNegativeSampling: return "no_negative_sampling";
    case Variant::kUnconditionalD: return "unconditional_d";
    case Variant::kNoGumbel: return "no_gumbel";
    case Variant::kBaselineOnly: return "baseline_only";
  }
  return "?";
}

std::vector<Variant> AllVariants() {
  return {Variant::kBaselineOnly, Variant::kFull, Variant::kNoNegativeSampling,
          Variant::kUnconditionalD, Variant::kNoGumbel};
}

Variant ParseVariant(const std::string& name) {
  std::string known;
  for (Variant v : AllVariants()) {
    if (name == VariantName(v)) return v;
    known += std::string(known.empty() ? "" : ", ") + VariantName(v);
  }
  throw Error("unknown variant '" + name + "' (expected one of " + known + ")");
}

void TrainConfig::Validate() const {
  if (!(lr_g > 0.0)) throw Error("train: lr_g must be > 0");
  if (!(lr_d > 0.0)) throw Error("train: lr_d must be > 0");
  if (!(pretrain_lr > 0.0)) throw Error("train: pretrain_lr must be > 0");
  if (batch_size == 0) throw Error("train: batch_size must be positive");
  if (d_steps_per_g == 0) throw Error("train: d_steps_per_g must be >= 1");
  if (generator_hidden == 0) throw Error("train: generator_hidden must be positive");
  if (feature_budget == 0) throw Error("train: feature_budget must be positive");
  gan.Validate();
}

namespace {

const char* PhaseName(IterationRecord::Phase p) {
  return p == IterationRecord::Phase::kPretrain ? "pretrain" : "adversarial";
}

std::vector<Tensor> GradValues(Tape& tape, Var loss, std::span<const Var> wrt) {
  std::vector<Tensor> out;
  for (Var g : tape.Grad(loss, wrt)) out.push_back(g.value());
  return out;
}

[[noreturn]] void Abort(const std::string& term, std::size_t iteration,
                        const NumericError& cause) {
  throw NumericError(term + " is not finite at iteration " +
                     std::to_string(iteration) + " (" + cause.what() + ")");
}

// Evaluates `v`, re-raising numeric failures with the term named.
double ScalarOrAbort(Var v, const std::string& term, std::size_t iteration) {
  double value = 0.0;
  try {
    value = v.value().item();
  } catch (const NumericError& e) {
    Abort(term, iteration, e);
  }
  if (!std::isfinite(value)) {
    throw NumericError(term + " is not finite at iteration " +
                       std::to_string(iteration));
  }
  return value;
}

std::vector<Tensor> GradsOrAbort(Tape& tape, Var loss, std::span<const Var> wrt,
                                 const std::string& term,
                                 std::size_t iteration) {
  try {
    return GradValues(tape, loss, wrt);
  } catch (const NumericError& e) {
    throw NumericError("gradient of " + term + " is not finite at iteration " +
                       std::to_string(iteration) + " (" + e.what() + ")");
  }
}

std::vector<std::size_t> ValidationSlice(const Dataset& data,
                                         const TrainConfig& cfg) {
  std::vector<std::size_t> idx = data.Indices(Split::kTrain);
  if (idx.size() > cfg.validation_size) idx.resize(cfg.validation_size);
  return idx;
}

std::size_t BatchesPerEpoch(const Dataset& data, const TrainConfig& cfg) {
  const std::size_t n = data.Indices(Split::kTrain).size();
  return (n + cfg.batch_size - 1) / cfg.batch_size;
}

std::size_t BatchSize(const Dataset& data, const TrainConfig& cfg) {
  return std::min(cfg.batch_size, data.Indices(Split::kTrain).size());
}

bool UsesNegatives(Variant v) {
  return v == Variant::kFull || v == Variant::kNoGumbel;
}

}  // namespace

void WriteIterationCsv(const TrainLog& log, std::ostream& out) {
  out << "phase,epoch,iteration,logistic,loss_g,loss_d,gp,grad_norm\n";
  for (const IterationRecord& r : log.iterations) {
    out << PhaseName(r.phase) << ',' << r.epoch << ',' << r.iteration << ','
        << FormatDouble(r.logistic);
    if (r.phase == IterationRecord::Phase::kAdversarial) {
      out << ',' << FormatDouble(r.loss_g) << ',' << FormatDouble(r.loss_d)
          << ',' << FormatDouble(r.gp) << ',' << FormatDouble(r.grad_norm);
    } else {
      out << ",,,,";
    }
    out << '\n';
  }
}

void WriteEpochCsv(const TrainLog& log, std::ostream& out) {
  out << "phase,epoch,mean_logistic,C-P,C-R,C-F1,O-P,O-R,O-F1,mean_labels\n";
  for (const EpochRecord& r : log.epochs) {
    const MetricReport& m = r.validation;
    out << PhaseName(r.phase) << ',' << r.epoch << ','
        << FormatDouble(r.mean_logistic);
    for (double v : {m.macro.precision, m.macro.recall, m.macro.f1,
                     m.micro.precision, m.micro.recall, m.micro.f1,
                     m.mean_labels}) {
      out << ',' << FormatDouble(v);
    }
    out << '\n';
  }
}

Mlp InitGenerator(std::size_t input_dim, std::size_t num_labels,
                  const TrainConfig& cfg, Rng& rng) {
  const std::vector<std::size_t> sizes = {input_dim, cfg.generator_hidden,
                                          num_labels};
  return InitMlp(sizes, Activation::kLeakyRelu, Activation::kSigmoid, rng,
                 cfg.gan.leaky_slope);
}

void PretrainGenerator(Mlp& g, const FeatureExtractor& fext,
                       const Dataset& data, const TrainConfig& cfg, Rng& rng,
                       TrainLog& log) {
  cfg.Validate();
  const std::vector<std::size_t> train = data.Indices(Split::kTrain);
  if (train.empty()) throw Error("pretrain: train split is empty");
  const std::vector<std::size_t> val = ValidationSlice(data, cfg);
  AdamState adam = InitAdam(std::as_const(g).parameters(),
                            AdamConfig{.lr = cfg.pretrain_lr});
  std::size_t iteration = 0;
  for (std::size_t epoch = 1; epoch <= cfg.pretrain_epochs; ++epoch) {
    const std::vector<std::size_t> order =
        SampleMatched(data, train.size(), rng).indices;
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::vector<std::size_t> idx(
          order.begin() + start,
          order.begin() + std::min(order.size(), start + cfg.batch_size));
      ++iteration;
      Tape tape;
      const std::vector<Var> params =
          BindParameters(std::as_const(g).parameters(), tape, true);
      Var loss;
      try {
        Var x = tape.Constant(data.GatherFeatures(idx));
        Var y = tape.Constant(data.GatherLabels(idx));
        loss = LogisticLoss(ClassifierForward(g, params, fext, x), y);
      } catch (const NumericError& e) {
        Abort("pretrain logistic loss", iteration, e);
      }
      const double value = ScalarOrAbort(loss, "pretrain logistic loss", iteration);
      const std::vector<Tensor> grads =
          GradsOrAbort(tape, loss, params, "pretrain logistic loss", iteration);
      AdamStep(g.parameters(), grads, adam);

      IterationRecord rec;
      rec.phase = IterationRecord::Phase::kPretrain;
      rec.iteration = iteration;
      rec.epoch = epoch;
      rec.logistic = value;
      log.iterations.push_back(rec);
      loss_sum += value;
      ++batches;
    }
    log.epochs.push_back({IterationRecord::Phase::kPretrain, epoch,
                          loss_sum / static_cast<double>(batches),
                          EvaluateGenerator(g, fext, data, val)});
  }
}

DiscriminatorObjective BuildDiscriminatorObjective(
    const BoundDiscriminator& d, const Mlp& g, const Dataset& data,
    const TrainConfig& cfg, Rng& rng) {
  const std::size_t batch = BatchSize(data, cfg);
  Tape& tape = *d.params.front().tape();
  const Batch real = SampleMatched(data, batch, rng);
  const Batch fake = SampleMatched(data, batch, rng);
  const Tensor probs = PredictProbabilities(g, *d.extractor, fake.features);
  DiscriminatorObjective obj;
  if (cfg.variant == Variant::kNoGumbel) {
    obj.generated_labels = tape.Constant(probs);
  } else {
    Tape scratch;
    obj.generated_labels = tape.Constant(
        GumbelSigmoidSample(scratch.Constant(probs), cfg.gan.inv_temperature,
                            rng, cfg.gan.temperature_mode)
            .value());
  }
  obj.generated_features = fake.features;
  Var x_real = tape.Constant(real.features);
  Var y_real = tape.Constant(real.labels);
  obj.real_scores = DiscriminatorScore(d, y_real, x_real);
  obj.generated_scores = DiscriminatorScore(d, obj.generated_labels,
                                            tape.Constant(fake.features));
  if (UsesNegatives(cfg.variant)) {
    const Batch other = SampleMatched(data, batch, rng);
    const Tensor y_mism = SampleMismatched(data, other, rng);
    obj.mismatched_scores = DiscriminatorScore(d, tape.Constant(y_mism),
                                               tape.Constant(other.features));
  }
  // Interpolates pair the real labels with the generated ones at the real
  // batch's features.
  obj.penalty = ComputeGradientPenalty(AsCritic(d), y_real,
                                       obj.generated_labels, x_real, rng);
  obj.loss = DiscriminatorLoss(obj.real_scores, obj.generated_scores,
                               obj.mismatched_scores, obj.penalty.penalty,
                               cfg.gan.lambda);
  return obj;
}

GeneratorObjective BuildGeneratorObjective(const Mlp& g,
                                           std::span<const Var> g_params,
                                           const BoundDiscriminator& d,
                                           const Dataset& data,
                                           const TrainConfig& cfg, Rng& rng) {
  Tape& tape = *g_params.front().tape();
  const Batch b = SampleMatched(data, BatchSize(data, cfg), rng);
  Var x = tape.Constant(b.features);
  GeneratorObjective obj;
  obj.probabilities = ClassifierForward(g, g_params, *d.extractor, x);
  obj.shown_labels =
      cfg.variant == Variant::kNoGumbel
          ? obj.probabilities
          : GumbelSigmoidSample(obj.probabilities, cfg.gan.inv_temperature, rng,
                                cfg.gan.temperature_mode);
  obj.logistic = LogisticLoss(obj.probabilities, tape.Constant(b.labels));
  obj.loss = GeneratorLoss(DiscriminatorScore(d, obj.shown_labels, x),
                           obj.logistic, cfg.gan.alpha);
  return obj;
}

void TrainAdversarial(Mlp& g, Discriminator& d, const FeatureExtractor& fext,
                      const Dataset& data, const TrainConfig& cfg, Rng& rng,
                      TrainLog& log) {
  cfg.Validate();
  if (cfg.variant == Variant::kBaselineOnly) return;
  const bool conditional = cfg.variant != Variant::kUnconditionalD;
  if (d.conditional() != conditional) {
    throw Error(std::string("adversarial: discriminator conditioning does not "
                            "match variant ") + VariantName(cfg.variant));
  }
  const std::vector<std::size_t> val = ValidationSlice(data, cfg);

  AdamState adam_g = InitAdam(std::as_const(g).parameters(),
                              AdamConfig{.lr = cfg.lr_g});
  AdamState adam_d = InitAdam(std::as_const(d).parameters(),
                              AdamConfig{.lr = cfg.lr_d});
  const std::size_t per_epoch = BatchesPerEpoch(data, cfg);
  std::size_t iteration = 0;

  for (std::size_t epoch = 1; epoch <= cfg.adv_epochs; ++epoch) {
    double logistic_sum = 0.0;
    for (std::size_t step = 0; step < per_epoch; ++step) {
      ++iteration;
      IterationRecord rec;
      rec.phase = IterationRecord::Phase::kAdversarial;
      rec.iteration = iteration;
      rec.epoch = epoch;

      for (std::size_t k = 0; k < cfg.d_steps_per_g; ++k) {
        Tape tape;
        const BoundDiscriminator bd = BindDiscriminator(d, fext, tape, true);
        DiscriminatorObjective obj;
        try {
          obj = BuildDiscriminatorObjective(bd, g, data, cfg, rng);
        } catch (const NumericError& e) {
          Abort("discriminator loss", iteration, e);
        }
        rec.gp += ScalarOrAbort(obj.penalty.penalty, "gradient penalty", iteration);
        rec.grad_norm += ScalarOrAbort(Mean(obj.penalty.grad_norms),
                                       "interpolate gradient norm", iteration);
        rec.loss_d += ScalarOrAbort(obj.loss, "discriminator loss", iteration);
        const std::vector<Tensor> grads = GradsOrAbort(
            tape, obj.loss, bd.params, "discriminator loss", iteration);
        AdamStep(d.parameters(), grads, adam_d);
        ++log.d_updates;
      }
      const double k = static_cast<double>(cfg.d_steps_per_g);
      rec.gp /= k;
      rec.grad_norm /= k;
      rec.loss_d /= k;

      Tape tape;
      const std::vector<Var> params =
          BindParameters(std::as_const(g).parameters(), tape, true);
      const BoundDiscriminator bd = BindDiscriminator(d, fext, tape, false);
      GeneratorObjective obj;
      try {
        obj = BuildGeneratorObjective(g, params, bd, data, cfg, rng);
      } catch (const NumericError& e) {
        Abort("generator loss", iteration, e);
      }
      rec.logistic = ScalarOrAbort(obj.logistic, "logistic loss", iteration);
      rec.loss_g = ScalarOrAbort(obj.loss, "generator loss", iteration);
      const std::vector<Tensor> grads =
          GradsOrAbort(tape, obj.loss, params, "generator loss", iteration);
      AdamStep(g.parameters(), grads, adam_g);
      ++log.g_updates;

      logistic_sum += rec.logistic;
      log.iterations.push_back(rec);
    }
    log.epochs.push_back({IterationRecord::Phase::kAdversarial, epoch,
                          logistic_sum / static_cast<double>(per_epoch),
                          EvaluateGenerator(g, fext, data, val)});
  }
}

MetricReport EvaluateGenerator(const Mlp& g, const FeatureExtractor& fext,
                               const Dataset& data,
                               const std::vector<std::size_t>& indices) {
  if (indices.empty()) throw Error("evaluate: no instances selected");
  const Tensor probs =
      PredictProbabilities(g, fext, data.GatherFeatures(indices));
  return Evaluate(HardThreshold(probs), data.GatherLabels(indices));
}

MetricReport EvaluateGenerator(const Mlp& g, const FeatureExtractor& fext,
                               const Dataset& data, Split split) {
  const std::vector<std::size_t> idx = data.Indices(split);
  if (idx.empty()) {
    throw Error(std::string("evaluate: the ") +
                (split == Split::kTrain ? "train" : "test") + " split is empty");
  }
  return EvaluateGenerator(g, fext, data, idx);
}

FeatureExtractor ExtractorFor(const Dataset& data, const TrainConfig& cfg) {
  return FeatureExtractor::ForDataset(data.feature_dim(), cfg.feature_budget,
                                      cfg.seed);
}

TrainedModels RunPretraining(const Dataset& data, const TrainConfig& cfg) {
  cfg.Validate();
  TrainedModels out;
  out.extractor = ExtractorFor(data, cfg);
  Rng init(DeriveSeed(cfg.seed, "generator_init"));
  out.generator = InitGenerator(out.extractor.out_size(), data.num_labels(),
                                cfg, init);
  Rng rng(DeriveSeed(cfg.seed, "pretrain"));
  PretrainGenerator(out.generator, out.extractor, data, cfg, rng, out.log);
  return out;
}

TrainedModels RunAdversarial(const Dataset& data, const TrainConfig& cfg,
                             TrainedModels pretrained) {
  cfg.Validate();
  if (cfg.variant == Variant::kBaselineOnly) return pretrained;
  Rng init(DeriveSeed(cfg.seed, "discriminator_init"));
  Discriminator d = InitDiscriminator(
      data.num_labels(), pretrained.extractor.out_size(), cfg.gan,
      cfg.variant != Variant::kUnconditionalD, init);
  Rng rng(DeriveSeed(cfg.seed, "adversarial"));
  TrainAdversarial(pretrained.generator, d, pretrained.extractor, data, cfg,
                   rng, pretrained.log);
  pretrained.discriminator = std::move(d);
  return pretrained;
}

TrainedModels RunTraining(const Dataset& data, const TrainConfig& cfg) {
  return RunAdversarial(data, cfg, RunPretraining(data, cfg));
}

double FinalEpochGradNorm(const TrainLog& log) {
  std::size_t last = 0;
  for (const IterationRecord& r : log.iterations) {
    if (r.phase == IterationRecord::Phase::kAdversarial) {
      last = std::max(last, r.epoch);
    }
  }
  if (last == 0) return 0.0;
  double sum = 0.0;
  std::size_t n = 0;
  for (const IterationRecord& r : log.iterations) {
    if (r.phase == IterationRecord::Phase::kAdversarial && r.epoch == last) {
      sum += r.grad_norm;
      ++n;
    }
  }
  return sum / static_cast<double>(n);
}

std::vector<AblationRow> RunAblation(const Dataset& data,
                                     const TrainConfig& base,
                                     const std::vector<std::uint64_t>& seeds) {
  if (seeds.empty()) throw Error("ablation: needs at least one seed");
  std::vector<AblationRow> rows;
  for (std::uint64_t seed : seeds) {
    TrainConfig cfg = base;
    cfg.seed = seed;
    const TrainedModels pretrained = RunPretraining(data, cfg);
    for (Variant v : AllVariants()) {
      cfg.variant = v;
      const TrainedModels m = RunAdversarial(data, cfg, pretrained);
      rows.push_back({v, seed,
                      EvaluateGenerator(m.generator, m.extractor, data,
                                        Split::kTest),
                      FinalEpochGradNorm(m.log)});
    }
  }
  return rows;
}

}  // namespace mlgan
