#ifndef MLGAN_CONFIG_H_
#define MLGAN_CONFIG_H_

// Experiment configuration files.
//
//   # comment
//   [section]
//   key = value
//
// Every key must belong to a known section; unknown sections and keys are
// errors naming the line. Omitted keys keep their defaults.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "mlgan/synthdata.h"
#include "mlgan/training.h"

namespace mlgan {

struct ExperimentConfig {
  // [experiment]
  std::uint64_t seed = 1;  // dataset and default training seed
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};  // ablation seeds

  // [data]
  DependencySpec::Layout layout;
  std::size_t n_train = 5000;
  std::size_t n_test = 1000;

  // [gan] and [train]
  TrainConfig train;

  // [paths]
  std::string dataset = "dataset.txt";
  std::string out_dir = "run";

  // Throws Error naming the first violated constraint.
  void Validate() const;
  DependencySpec Spec() const { return DependencySpec::FromLayout(layout); }
  std::uint64_t DataSeed() const;
};

ExperimentConfig ParseConfig(std::istream& in,
                             const std::string& source = "config");
ExperimentConfig LoadConfig(const std::string& path);

// Writes a config that parses back to `cfg`.
void WriteConfig(const ExperimentConfig& cfg, std::ostream& out);

// One line per recognized key with its default, grouped by section.
std::string ConfigKeyHelp();

}  // namespace mlgan

#endif  // MLGAN_CONFIG_H_
