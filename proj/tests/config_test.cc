#include "mlgan/config.h"

#include <sstream>

#include "doctest.h"

namespace mlgan {
namespace {

ExperimentConfig Parse(const std::string& text) {
  std::istringstream in(text);
  return ParseConfig(in, "exp.ini");
}

std::string Written(const ExperimentConfig& cfg) {
  std::ostringstream out;
  WriteConfig(cfg, out);
  return out.str();
}

TEST_CASE("an empty config keeps every default") {
  const ExperimentConfig cfg = Parse("");
  CHECK(cfg.n_train == 5000);
  CHECK(cfg.n_test == 1000);
  CHECK(cfg.seeds == std::vector<std::uint64_t>{1, 2, 3, 4, 5});
  CHECK(cfg.train.d_steps_per_g == 3);
  CHECK(cfg.train.gan.alpha == 10.0);
  CHECK(cfg.train.gan.lambda == 10.0);
  CHECK(cfg.train.gan.inv_temperature == 0.9);
  CHECK(cfg.Spec().num_labels == 12);
  CHECK(Written(cfg) == Written(ExperimentConfig{}));
}

TEST_CASE("sections, comments and values are read") {
  const ExperimentConfig cfg = Parse(
      "# experiment\n"
      "[experiment]\n"
      "seed = 9   # trailing comment\n"
      "seeds = 4 8\n"
      "\n"
      "[data]\n"
      "num_scenes = 2\n"
      "dependent_prob = 0.45\n"
      "[gan]\n"
      "alpha = 1\n"
      "temperature_mode = divide\n"
      "[train]\n"
      "variant = no_gumbel\n"
      "adv_epochs = 7\n"
      "[paths]\n"
      "out_dir = somewhere else\n");
  CHECK(cfg.seed == 9);
  CHECK(cfg.seeds == std::vector<std::uint64_t>{4, 8});
  CHECK(cfg.layout.num_scenes == 2);
  CHECK(cfg.layout.dependent_prob == 0.45);
  CHECK(cfg.train.gan.alpha == 1.0);
  CHECK(cfg.train.gan.temperature_mode == TemperatureMode::kDivide);
  CHECK(cfg.train.variant == Variant::kNoGumbel);
  CHECK(cfg.train.adv_epochs == 7);
  CHECK(cfg.out_dir == "somewhere else");
}

TEST_CASE("written configs parse back to themselves") {
  ExperimentConfig cfg;
  cfg.seed = 42;
  cfg.seeds = {3};
  cfg.layout.overlap_prob = 0.5;
  cfg.layout.noise_std = 0.125;
  cfg.train.lr_g = 3e-5;
  cfg.train.variant = Variant::kUnconditionalD;
  cfg.dataset = "d.txt";
  const std::string text = Written(cfg);
  CHECK(Written(Parse(text)) == text);
}

TEST_CASE("unknown keys and sections are errors naming the line") {
  CHECK_THROWS_WITH_AS(Parse("[data]\nn_train = 10\nfoo = 1\n"),
                       doctest::Contains("exp.ini:3: unknown key 'foo'"),
                       ParseError);
  CHECK_THROWS_WITH_AS(Parse("\n[model]\n"),
                       doctest::Contains("exp.ini:2: unknown section"),
                       ParseError);
  // A key valid in another section is still unknown here.
  CHECK_THROWS_WITH_AS(Parse("[gan]\nn_train = 10\n"),
                       doctest::Contains("exp.ini:2: unknown key 'n_train'"),
                       ParseError);
  CHECK_THROWS_WITH_AS(Parse("seed = 1\n"), doctest::Contains("exp.ini:1:"),
                       ParseError);
  CHECK_THROWS_WITH_AS(Parse("[data]\nn_test = 1\nn_test = 2\n"),
                       doctest::Contains("exp.ini:3:"), ParseError);
  CHECK_THROWS_WITH_AS(Parse("[data]\nn_test =\n"),
                       doctest::Contains("exp.ini:2:"), ParseError);
  CHECK_THROWS_WITH_AS(Parse("[data]\nnoise_std = lots\n"),
                       doctest::Contains("exp.ini:2:"), ParseError);
  CHECK_THROWS_WITH_AS(Parse("[data]\njust words\n"),
                       doctest::Contains("exp.ini:2:"), ParseError);
  CHECK_THROWS_AS(Parse("[train]\nvariant = best\n"), Error);
}

TEST_CASE("invariant violations are rejected by name") {
  CHECK_THROWS_WITH_AS(Parse("[data]\nanchor_fraction = 0\n"),
                       doctest::Contains("anchor_fraction"), Error);
  CHECK_THROWS_WITH_AS(Parse("[data]\nanchor_prob = 1.5\n"),
                       doctest::Contains("probability outside [0, 1]"), Error);
  CHECK_THROWS_WITH_AS(Parse("[train]\nd_steps_per_g = 0\n"),
                       doctest::Contains("d_steps_per_g"), Error);
  CHECK_THROWS_WITH_AS(Parse("[gan]\nlambda = -1\n"),
                       doctest::Contains("lambda"), Error);
  CHECK_THROWS_AS(Parse("[experiment]\nseeds = \n"), Error);
}

TEST_CASE("key help lists every section and key") {
  const std::string help = ConfigKeyHelp();
  for (const char* key :
       {"[experiment]", "seed", "seeds", "[data]", "num_scenes",
        "labels_per_scene", "anchor_prob", "dependent_prob", "overlap_prob",
        "anchor_fraction", "noise_std", "signature_scale", "feature_dim",
        "n_train", "n_test", "[gan]", "alpha", "lambda", "inv_temperature",
        "temperature_mode", "proj_dim", "hidden_dim", "hidden_layers",
        "leaky_slope", "[train]", "lr_g", "lr_d", "pretrain_lr", "batch_size",
        "d_steps_per_g", "pretrain_epochs", "adv_epochs", "generator_hidden",
        "feature_budget", "validation_size", "variant", "[paths]", "dataset",
        "out_dir"}) {
    CHECK_MESSAGE(help.find(key) != std::string::npos, key);
  }
}

}  // namespace
}  // namespace mlgan
