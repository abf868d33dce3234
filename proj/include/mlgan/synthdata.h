#ifndef MLGAN_SYNTHDATA_H_
#define MLGAN_SYNTHDATA_H_

// Synthetic multi-label data with known label co-occurrence.
//
// Generative process, per instance:
//   1. pick a scene uniformly;
//   2. switch on each member label of the scene independently with that
//      member's activation probability;
//   3. x = sum over active *anchor* labels of the label's signature row
//      + N(0, noise_std^2) per feature.
// Anchor labels are the first floor(anchor_fraction * k) (at least one) of
// a scene's k members. Other ("dependent") labels leave no trace in x and
// can only be inferred through the anchors they co-occur with.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mlgan/random.h"
#include "mlgan/tensor.h"

namespace mlgan {

struct Scene {
  std::vector<std::size_t> labels;
  std::vector<double> probs;  // activation probability per member
};

struct DependencySpec {
  std::size_t num_labels = 0;
  std::vector<Scene> scenes;
  double anchor_fraction = 0.67;
  double noise_std = 0.3;
  double signature_scale = 1.0;  // std of the signature entries
  std::size_t feature_dim = 16;

  // Scene s owns labels [s * per_scene, (s + 1) * per_scene). The anchors
  // switch on with anchor_prob, the rest with dependent_prob. With
  // overlap_prob > 0 each scene also lists the first dependent label of the
  // next scene, with that probability.
  struct Layout {
    std::size_t num_scenes = 4;
    std::size_t labels_per_scene = 3;
    double anchor_prob = 0.7;
    double dependent_prob = 0.6;
    double overlap_prob = 0.0;
    double anchor_fraction = 0.67;
    double noise_std = 0.3;
    double signature_scale = 1.0;
    std::size_t feature_dim = 16;
  };
  static DependencySpec FromLayout(const Layout& layout);

  // Throws Error listing the first violated invariant.
  void Validate() const;
  // anchors[i] is true when label i is an anchor of some scene.
  std::vector<bool> AnchorMask() const;
  std::size_t AnchorCount(const Scene& scene) const;

  // Closed-form P(y_i = 1) and P(y_i = 1, y_j = 1).
  std::vector<double> Marginals() const;
  std::vector<std::vector<double>> CoOccurrence() const;
};

enum class Split : std::uint8_t { kTrain = 0, kTest = 1 };

struct Dataset {
  Tensor features;  // (n, d)
  Tensor labels;    // (n, |S|), entries exactly 0 or 1
  std::vector<Split> splits;
  std::uint64_t seed = 0;
  // Present for generated datasets; not stored in files.
  std::optional<DependencySpec> spec;

  std::size_t size() const { return splits.size(); }
  std::size_t num_labels() const { return labels.cols(); }
  std::size_t feature_dim() const { return features.cols(); }
  std::vector<std::size_t> Indices(Split split) const;

  // Rows `indices` gathered into (k, d) / (k, |S|) tensors.
  Tensor GatherFeatures(const std::vector<std::size_t>& indices) const;
  Tensor GatherLabels(const std::vector<std::size_t>& indices) const;

  friend bool operator==(const Dataset& a, const Dataset& b) {
    return a.features == b.features && a.labels == b.labels &&
           a.splits == b.splits && a.seed == b.seed;
  }
};

// The fixed (|S|, d) matrix whose row i is label i's feature signature.
// Only anchor rows ever reach the features.
Tensor SignatureMatrix(const DependencySpec& spec, std::uint64_t seed);

// n instances, the last n_test of which form the test split. Deterministic
// in (spec, n, n_test, seed).
Dataset GenerateDataset(const DependencySpec& spec, std::size_t n,
                        std::uint64_t seed, std::size_t n_test = 0);

struct Batch {
  std::vector<std::size_t> indices;
  Tensor features;
  Tensor labels;
};

// batch_size distinct train instances, uniformly at random.
Batch SampleMatched(const Dataset& data, std::size_t batch_size, Rng& rng);

// For each row of `batch`, the label vector of a uniformly drawn train
// instance whose labels differ from that row's. Throws when no such
// instance turns up within a bounded number of redraws.
Tensor SampleMismatched(const Dataset& data, const Batch& batch, Rng& rng);

struct LabelStatistics {
  std::vector<double> marginals;
  std::vector<std::vector<double>> co_occurrence;
  double mean_labels = 0.0;
};
LabelStatistics ComputeLabelStatistics(const Dataset& data, Split split);

// Text format:
//   MLGAN-DATA v1
//   <n> <|S|> <d> <seed>
//   <d feature values> <|S| labels in {0,1}>     (n lines)
//   <n split tags: 0 = train, 1 = test>
void WriteDataset(const Dataset& data, std::ostream& out);
Dataset ReadDataset(std::istream& in, const std::string& source = "dataset");
void SaveDataset(const Dataset& data, const std::string& path);
Dataset LoadDataset(const std::string& path);

}  // namespace mlgan

#endif  // MLGAN_SYNTHDATA_H_
