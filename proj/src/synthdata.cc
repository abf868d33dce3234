#include "mlgan/synthdata.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "mlgan/text_format.h"

namespace mlgan {

DependencySpec DependencySpec::FromLayout(const Layout& layout) {
  DependencySpec spec;
  spec.num_labels = layout.num_scenes * layout.labels_per_scene;
  spec.anchor_fraction = layout.anchor_fraction;
  spec.noise_std = layout.noise_std;
  spec.signature_scale = layout.signature_scale;
  spec.feature_dim = layout.feature_dim;
  for (std::size_t s = 0; s < layout.num_scenes; ++s) {
    Scene scene;
    for (std::size_t k = 0; k < layout.labels_per_scene; ++k) {
      scene.labels.push_back(s * layout.labels_per_scene + k);
    }
    const std::size_t anchors = spec.AnchorCount(scene);
    for (std::size_t k = 0; k < layout.labels_per_scene; ++k) {
      scene.probs.push_back(k < anchors ? layout.anchor_prob
                                        : layout.dependent_prob);
    }
    spec.scenes.push_back(std::move(scene));
  }
  if (layout.overlap_prob > 0.0 && layout.num_scenes > 1) {
    for (std::size_t s = 0; s < layout.num_scenes; ++s) {
      const Scene& next = spec.scenes[(s + 1) % layout.num_scenes];
      const std::size_t anchors = spec.AnchorCount(next);
      if (anchors >= next.labels.size()) continue;
      // Appending keeps this scene's anchor count unchanged only while
      // floor(fraction * (k + 1)) == floor(fraction * k).
      Scene& scene = spec.scenes[s];
      const std::size_t before = spec.AnchorCount(scene);
      scene.labels.push_back(next.labels[anchors]);
      scene.probs.push_back(layout.overlap_prob);
      if (spec.AnchorCount(scene) != before) {
        scene.labels.pop_back();
        scene.probs.pop_back();
      }
    }
  }
  return spec;
}

std::size_t DependencySpec::AnchorCount(const Scene& scene) const {
  const auto k = static_cast<double>(scene.labels.size());
  const auto n = static_cast<std::size_t>(std::floor(anchor_fraction * k + 1e-9));
  return std::clamp<std::size_t>(n, 1, scene.labels.size());
}

void DependencySpec::Validate() const {
  if (num_labels == 0) throw Error("dependency spec: num_labels must be positive");
  if (feature_dim == 0) throw Error("dependency spec: feature_dim must be positive");
  if (scenes.empty()) throw Error("dependency spec: needs at least one scene");
  if (!(anchor_fraction > 0.0 && anchor_fraction <= 1.0)) {
    throw Error("dependency spec: anchor_fraction must lie in (0, 1]");
  }
  if (!(noise_std >= 0.0)) throw Error("dependency spec: noise_std must be >= 0");
  if (!(signature_scale > 0.0)) {
    throw Error("dependency spec: signature_scale must be > 0");
  }
  std::vector<bool> covered(num_labels, false);
  for (std::size_t s = 0; s < scenes.size(); ++s) {
    const Scene& scene = scenes[s];
    const std::string where = "dependency spec: scene " + std::to_string(s);
    if (scene.labels.empty()) throw Error(where + " has no labels");
    if (scene.labels.size() != scene.probs.size()) {
      throw Error(where + " needs one probability per label");
    }
    for (std::size_t k = 0; k < scene.labels.size(); ++k) {
      if (scene.labels[k] >= num_labels) {
        throw Error(where + " references label " +
                    std::to_string(scene.labels[k]) + " >= num_labels");
      }
      if (!(scene.probs[k] >= 0.0 && scene.probs[k] <= 1.0)) {
        throw Error(where + " has a probability outside [0, 1]");
      }
      covered[scene.labels[k]] = true;
    }
  }
  for (std::size_t i = 0; i < num_labels; ++i) {
    if (!covered[i]) {
      throw Error("dependency spec: label " + std::to_string(i) +
                  " belongs to no scene");
    }
  }
}

std::vector<bool> DependencySpec::AnchorMask() const {
  std::vector<bool> mask(num_labels, false);
  for (const Scene& scene : scenes) {
    const std::size_t anchors = AnchorCount(scene);
    for (std::size_t k = 0; k < anchors; ++k) mask[scene.labels[k]] = true;
  }
  return mask;
}

std::vector<double> DependencySpec::Marginals() const {
  std::vector<double> p(num_labels, 0.0);
  const double w = 1.0 / static_cast<double>(scenes.size());
  for (const Scene& scene : scenes) {
    for (std::size_t k = 0; k < scene.labels.size(); ++k) {
      p[scene.labels[k]] += w * scene.probs[k];
    }
  }
  return p;
}

std::vector<std::vector<double>> DependencySpec::CoOccurrence() const {
  std::vector<std::vector<double>> p(num_labels,
                                     std::vector<double>(num_labels, 0.0));
  const double w = 1.0 / static_cast<double>(scenes.size());
  for (const Scene& scene : scenes) {
    for (std::size_t a = 0; a < scene.labels.size(); ++a) {
      for (std::size_t b = 0; b < scene.labels.size(); ++b) {
        const std::size_t i = scene.labels[a], j = scene.labels[b];
        p[i][j] += w * (a == b ? scene.probs[a] : scene.probs[a] * scene.probs[b]);
      }
    }
  }
  return p;
}

std::vector<std::size_t> Dataset::Indices(Split split) const {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < splits.size(); ++i) {
    if (splits[i] == split) idx.push_back(i);
  }
  return idx;
}

Tensor Dataset::GatherFeatures(const std::vector<std::size_t>& indices) const {
  const std::size_t d = feature_dim();
  Tensor out(Shape{indices.size(), d});
  for (std::size_t r = 0; r < indices.size(); ++r) {
    std::copy_n(features.data().begin() + indices[r] * d, d,
                out.data().begin() + r * d);
  }
  return out;
}

Tensor Dataset::GatherLabels(const std::vector<std::size_t>& indices) const {
  const std::size_t s = num_labels();
  Tensor out(Shape{indices.size(), s});
  for (std::size_t r = 0; r < indices.size(); ++r) {
    std::copy_n(labels.data().begin() + indices[r] * s, s,
                out.data().begin() + r * s);
  }
  return out;
}

Tensor SignatureMatrix(const DependencySpec& spec, std::uint64_t seed) {
  Rng rng(DeriveSeed(seed, "signatures"));
  Tensor w(Shape{spec.num_labels, spec.feature_dim});
  for (double& v : w.data()) v = spec.signature_scale * rng.Normal();
  return w;
}

Dataset GenerateDataset(const DependencySpec& spec, std::size_t n,
                        std::uint64_t seed, std::size_t n_test) {
  spec.Validate();
  if (n == 0) throw Error("generate dataset: n must be >= 1");
  if (n_test > n) throw Error("generate dataset: n_test exceeds n");

  const std::size_t s = spec.num_labels, d = spec.feature_dim;
  const Tensor signatures = SignatureMatrix(spec, seed);
  const std::vector<bool> anchors = spec.AnchorMask();

  Dataset data;
  data.seed = seed;
  data.spec = spec;
  data.features = Tensor(Shape{n, d});
  data.labels = Tensor(Shape{n, s});
  data.splits.assign(n, Split::kTrain);
  std::fill(data.splits.end() - static_cast<std::ptrdiff_t>(n_test),
            data.splits.end(), Split::kTest);

  Rng rng(DeriveSeed(seed, "instances"));
  for (std::size_t i = 0; i < n; ++i) {
    const Scene& scene = spec.scenes[rng.Below(spec.scenes.size())];
    for (std::size_t k = 0; k < scene.labels.size(); ++k) {
      if (rng.Bernoulli(scene.probs[k])) data.labels.at(i, scene.labels[k]) = 1.0;
    }
    for (std::size_t f = 0; f < d; ++f) {
      double x = spec.noise_std * rng.Normal();
      for (std::size_t l = 0; l < s; ++l) {
        if (anchors[l] && data.labels.at(i, l) == 1.0) x += signatures.at(l, f);
      }
      data.features.at(i, f) = x;
    }
  }
  return data;
}

Batch SampleMatched(const Dataset& data, std::size_t batch_size, Rng& rng) {
  std::vector<std::size_t> pool = data.Indices(Split::kTrain);
  if (batch_size > pool.size()) {
    throw Error("sample matched: batch of " + std::to_string(batch_size) +
                " exceeds train split of " + std::to_string(pool.size()));
  }
  // Partial Fisher-Yates.
  for (std::size_t i = 0; i < batch_size; ++i) {
    const std::size_t j = i + rng.Below(pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(batch_size);
  Batch batch;
  batch.features = data.GatherFeatures(pool);
  batch.labels = data.GatherLabels(pool);
  batch.indices = std::move(pool);
  return batch;
}

namespace {

bool SameLabels(const Dataset& data, std::size_t a, std::size_t b) {
  const std::size_t s = data.num_labels();
  return std::equal(data.labels.data().begin() + a * s,
                    data.labels.data().begin() + (a + 1) * s,
                    data.labels.data().begin() + b * s);
}

constexpr int kMismatchRetries = 1000;

}  // namespace

Tensor SampleMismatched(const Dataset& data, const Batch& batch, Rng& rng) {
  const std::vector<std::size_t> pool = data.Indices(Split::kTrain);
  if (pool.size() < 2) throw Error("sample mismatched: train split too small");
  std::vector<std::size_t> donors;
  donors.reserve(batch.indices.size());
  for (std::size_t own : batch.indices) {
    bool found = false;
    for (int attempt = 0; attempt < kMismatchRetries; ++attempt) {
      const std::size_t cand = pool[rng.Below(pool.size())];
      if (!SameLabels(data, cand, own)) {
        donors.push_back(cand);
        found = true;
        break;
      }
    }
    if (!found) {
      throw Error("sample mismatched: no instance with a different label set "
                  "after " + std::to_string(kMismatchRetries) +
                  " draws (degenerate dataset?)");
    }
  }
  return data.GatherLabels(donors);
}

LabelStatistics ComputeLabelStatistics(const Dataset& data, Split split) {
  const std::vector<std::size_t> idx = data.Indices(split);
  const std::size_t s = data.num_labels();
  LabelStatistics st;
  st.marginals.assign(s, 0.0);
  st.co_occurrence.assign(s, std::vector<double>(s, 0.0));
  if (idx.empty()) return st;
  double total = 0.0;
  for (std::size_t i : idx) {
    for (std::size_t a = 0; a < s; ++a) {
      if (data.labels.at(i, a) != 1.0) continue;
      st.marginals[a] += 1.0;
      total += 1.0;
      for (std::size_t b = 0; b < s; ++b) {
        if (data.labels.at(i, b) == 1.0) st.co_occurrence[a][b] += 1.0;
      }
    }
  }
  const double n = static_cast<double>(idx.size());
  for (std::size_t a = 0; a < s; ++a) {
    st.marginals[a] /= n;
    for (double& v : st.co_occurrence[a]) v /= n;
  }
  st.mean_labels = total / n;
  return st;
}

namespace {

constexpr char kDataMagic[] = "MLGAN-DATA v1";

}  // namespace

void WriteDataset(const Dataset& data, std::ostream& out) {
  const std::size_t n = data.size(), s = data.num_labels(), d = data.feature_dim();
  out << kDataMagic << "\n";
  out << n << " " << s << " " << d << " " << data.seed << "\n";
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t f = 0; f < d; ++f) {
      out << FormatDouble(data.features.at(i, f)) << ' ';
    }
    for (std::size_t l = 0; l < s; ++l) {
      out << (data.labels.at(i, l) == 1.0 ? '1' : '0');
      out << (l + 1 < s ? ' ' : '\n');
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    out << static_cast<int>(data.splits[i]) << (i + 1 < n ? ' ' : '\n');
  }
}

Dataset ReadDataset(std::istream& in, const std::string& source) {
  LineReader reader(in, source);
  reader.ExpectLine(kDataMagic);
  const std::vector<std::string> header = reader.Tokens();
  if (header.size() != 4) reader.Fail("expected '<n> <labels> <dim> <seed>'");
  const std::size_t n = reader.ParseCount(header[0]);
  const std::size_t s = reader.ParseCount(header[1]);
  const std::size_t d = reader.ParseCount(header[2]);
  if (n == 0 || s == 0 || d == 0) reader.Fail("sizes must be positive");

  Dataset data;
  data.seed = reader.ParseU64(header[3]);
  data.features = Tensor(Shape{n, d});
  data.labels = Tensor(Shape{n, s});
  for (std::size_t i = 0; i < n; ++i) {
    const std::vector<std::string> tok = reader.Tokens();
    if (tok.size() != d + s) {
      reader.Fail("expected " + std::to_string(d) + " features and " +
                  std::to_string(s) + " labels, got " +
                  std::to_string(tok.size()) + " fields");
    }
    for (std::size_t f = 0; f < d; ++f) {
      data.features.at(i, f) = reader.ParseDouble(tok[f]);
    }
    for (std::size_t l = 0; l < s; ++l) {
      const std::string& t = tok[d + l];
      if (t != "0" && t != "1") reader.Fail("label must be 0 or 1, got '" + t + "'");
      data.labels.at(i, l) = t == "1" ? 1.0 : 0.0;
    }
  }
  const std::vector<std::string> tags = reader.Tokens();
  if (tags.size() != n) {
    reader.Fail("expected " + std::to_string(n) + " split tags, got " +
                std::to_string(tags.size()));
  }
  for (const std::string& t : tags) {
    if (t != "0" && t != "1") reader.Fail("split tag must be 0 or 1, got '" + t + "'");
    data.splits.push_back(t == "1" ? Split::kTest : Split::kTrain);
  }
  reader.ExpectEnd();
  return data;
}

void SaveDataset(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  WriteDataset(data, out);
  if (!out) throw Error("error writing '" + path + "'");
}

Dataset LoadDataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open dataset '" + path + "'");
  return ReadDataset(in, path);
}

}  // namespace mlgan
