#include "mlgan/config.h"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "mlgan/text_format.h"

namespace mlgan {

void ExperimentConfig::Validate() const {
  if (n_train == 0) throw Error("config: n_train must be positive");
  if (seeds.empty()) throw Error("config: seeds must list at least one seed");
  if (layout.num_scenes == 0 || layout.labels_per_scene == 0) {
    throw Error("config: num_scenes and labels_per_scene must be positive");
  }
  Spec().Validate();
  train.Validate();
}

std::uint64_t ExperimentConfig::DataSeed() const {
  return DeriveSeed(seed, "data");
}

namespace {

// Shortest text that reads back to the same double.
std::string FormatShortest(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

const char* TemperatureModeName(TemperatureMode m) {
  return m == TemperatureMode::kMultiply ? "multiply" : "divide";
}

// A key's textual value and a setter parsing one.
struct Field {
  std::string section;
  std::string key;
  std::string doc;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&, LineReader&)> set;
};

Field Real(const std::string& section, const std::string& key,
           const std::string& doc, std::function<double&(ExperimentConfig&)> ref) {
  return {section, key, doc,
          [ref](ExperimentConfig c) { return FormatShortest(ref(c)); },
          [ref](ExperimentConfig& c, const std::string& v, LineReader& r) {
            ref(c) = r.ParseDouble(v);
          }};
}

Field Count(const std::string& section, const std::string& key,
            const std::string& doc,
            std::function<std::size_t&(ExperimentConfig&)> ref) {
  return {section, key, doc,
          [ref](ExperimentConfig c) { return std::to_string(ref(c)); },
          [ref](ExperimentConfig& c, const std::string& v, LineReader& r) {
            ref(c) = r.ParseCount(v);
          }};
}

const std::vector<Field>& Fields() {
  using C = ExperimentConfig;
  static const std::vector<Field> fields = {
      {"experiment", "seed", "dataset seed and default training seed",
       [](const C& c) { return std::to_string(c.seed); },
       [](C& c, const std::string& v, LineReader& r) { c.seed = r.ParseU64(v); }},
      {"experiment", "seeds", "training seeds for ablate, space separated",
       [](const C& c) {
         std::string s;
         for (std::uint64_t x : c.seeds) s += (s.empty() ? "" : " ") + std::to_string(x);
         return s;
       },
       [](C& c, const std::string& v, LineReader& r) {
         c.seeds.clear();
         for (const std::string& t : SplitWhitespace(v)) c.seeds.push_back(r.ParseU64(t));
       }},

      Count("data", "num_scenes", "co-occurrence clusters",
            [](C& c) -> std::size_t& { return c.layout.num_scenes; }),
      Count("data", "labels_per_scene", "labels owned by each scene",
            [](C& c) -> std::size_t& { return c.layout.labels_per_scene; }),
      Real("data", "anchor_prob", "activation probability of anchor labels",
           [](C& c) -> double& { return c.layout.anchor_prob; }),
      Real("data", "dependent_prob", "activation probability of dependent labels",
           [](C& c) -> double& { return c.layout.dependent_prob; }),
      Real("data", "overlap_prob",
           "probability of the label each scene borrows from the next (0 = none)",
           [](C& c) -> double& { return c.layout.overlap_prob; }),
      Real("data", "anchor_fraction", "fraction of scene labels visible in x",
           [](C& c) -> double& { return c.layout.anchor_fraction; }),
      Real("data", "noise_std", "feature noise",
           [](C& c) -> double& { return c.layout.noise_std; }),
      Real("data", "signature_scale", "std of label signature entries",
           [](C& c) -> double& { return c.layout.signature_scale; }),
      Count("data", "feature_dim", "feature dimension d",
            [](C& c) -> std::size_t& { return c.layout.feature_dim; }),
      Count("data", "n_train", "train instances",
            [](C& c) -> std::size_t& { return c.n_train; }),
      Count("data", "n_test", "test instances",
            [](C& c) -> std::size_t& { return c.n_test; }),

      Real("gan", "alpha", "logistic-loss weight in the generator loss",
           [](C& c) -> double& { return c.train.gan.alpha; }),
      Real("gan", "lambda", "gradient-penalty weight",
           [](C& c) -> double& { return c.train.gan.lambda; }),
      Real("gan", "inv_temperature", "Gumbel-sigmoid inverse temperature",
           [](C& c) -> double& { return c.train.gan.inv_temperature; }),
      {"gan", "temperature_mode", "multiply or divide the noisy logit",
       [](const C& c) { return std::string(TemperatureModeName(c.train.gan.temperature_mode)); },
       [](C& c, const std::string& v, LineReader& r) {
         if (v == "multiply") {
           c.train.gan.temperature_mode = TemperatureMode::kMultiply;
         } else if (v == "divide") {
           c.train.gan.temperature_mode = TemperatureMode::kDivide;
         } else {
           r.Fail("temperature_mode must be 'multiply' or 'divide'");
         }
       }},
      Count("gan", "proj_dim", "discriminator projection width",
            [](C& c) -> std::size_t& { return c.train.gan.proj_dim; }),
      Count("gan", "hidden_dim", "discriminator hidden width",
            [](C& c) -> std::size_t& { return c.train.gan.hidden_dim; }),
      Count("gan", "hidden_layers", "discriminator hidden layers",
            [](C& c) -> std::size_t& { return c.train.gan.hidden_layers; }),
      Real("gan", "leaky_slope", "leaky-relu negative slope",
           [](C& c) -> double& { return c.train.gan.leaky_slope; }),

      Real("train", "lr_g", "generator Adam step size (adversarial phase)",
           [](C& c) -> double& { return c.train.lr_g; }),
      Real("train", "lr_d", "discriminator Adam step size",
           [](C& c) -> double& { return c.train.lr_d; }),
      Real("train", "pretrain_lr", "generator Adam step size (pretraining)",
           [](C& c) -> double& { return c.train.pretrain_lr; }),
      Count("train", "batch_size", "instances per batch",
            [](C& c) -> std::size_t& { return c.train.batch_size; }),
      Count("train", "d_steps_per_g", "discriminator updates per generator update",
            [](C& c) -> std::size_t& { return c.train.d_steps_per_g; }),
      Count("train", "pretrain_epochs", "logistic-loss passes over the train split",
            [](C& c) -> std::size_t& { return c.train.pretrain_epochs; }),
      Count("train", "adv_epochs", "adversarial epochs",
            [](C& c) -> std::size_t& { return c.train.adv_epochs; }),
      Count("train", "generator_hidden", "generator hidden width",
            [](C& c) -> std::size_t& { return c.train.generator_hidden; }),
      Count("train", "feature_budget", "features above this width are projected",
            [](C& c) -> std::size_t& { return c.train.feature_budget; }),
      Count("train", "validation_size", "leading train instances scored each epoch",
            [](C& c) -> std::size_t& { return c.train.validation_size; }),
      {"train", "variant", "full, no_negative_sampling, unconditional_d, no_gumbel or baseline_only",
       [](const C& c) { return std::string(VariantName(c.train.variant)); },
       [](C& c, const std::string& v, LineReader& r) {
         try {
           c.train.variant = ParseVariant(v);
         } catch (const Error& e) {
           r.Fail(e.what());
         }
       }},

      {"paths", "dataset", "dataset file",
       [](const C& c) { return c.dataset; },
       [](C& c, const std::string& v, LineReader&) { c.dataset = v; }},
      {"paths", "out_dir", "directory for checkpoints and logs",
       [](const C& c) { return c.out_dir; },
       [](C& c, const std::string& v, LineReader&) { c.out_dir = v; }},
  };
  return fields;
}

const Field* FindField(const std::string& section, const std::string& key) {
  for (const Field& f : Fields()) {
    if (f.section == section && f.key == key) return &f;
  }
  return nullptr;
}

bool KnownSection(const std::string& section) {
  for (const Field& f : Fields()) {
    if (f.section == section) return true;
  }
  return false;
}

}  // namespace

ExperimentConfig ParseConfig(std::istream& in, const std::string& source) {
  ExperimentConfig cfg;
  LineReader reader(in, source);
  std::string section;
  std::map<std::string, std::size_t> seen;
  std::string line;
  while (reader.TryNext(line)) {
    if (const std::size_t hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    line = Trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') reader.Fail("unterminated section header");
      section = Trim(line.substr(1, line.size() - 2));
      if (!KnownSection(section)) reader.Fail("unknown section [" + section + "]");
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) reader.Fail("expected 'key = value'");
    const std::string key = Trim(line.substr(0, eq));
    const std::string value = Trim(line.substr(eq + 1));
    if (section.empty()) reader.Fail("key '" + key + "' appears before any [section]");
    const Field* field = FindField(section, key);
    if (field == nullptr) {
      reader.Fail("unknown key '" + key + "' in [" + section + "]");
    }
    const std::string qualified = section + "." + key;
    if (seen.count(qualified)) {
      reader.Fail("duplicate key '" + key + "' (first set on line " +
                  std::to_string(seen[qualified]) + ")");
    }
    seen[qualified] = reader.line_number();
    if (value.empty()) reader.Fail("key '" + key + "' has no value");
    field->set(cfg, value, reader);
  }
  try {
    cfg.Validate();
  } catch (const Error& e) {
    throw Error(source + ": " + e.what());
  }
  return cfg;
}

ExperimentConfig LoadConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config '" + path + "'");
  return ParseConfig(in, path);
}

void WriteConfig(const ExperimentConfig& cfg, std::ostream& out) {
  std::string section;
  for (const Field& f : Fields()) {
    if (f.section != section) {
      out << (section.empty() ? "" : "\n") << "[" << f.section << "]\n";
      section = f.section;
    }
    out << f.key << " = " << f.get(cfg) << "\n";
  }
}

std::string ConfigKeyHelp() {
  const ExperimentConfig defaults;
  std::ostringstream out;
  out << "Config keys (default in parentheses):\n";
  std::string section;
  for (const Field& f : Fields()) {
    if (f.section != section) {
      out << "  [" << f.section << "]\n";
      section = f.section;
    }
    out << "    " << f.key << " (" << f.get(defaults) << "): " << f.doc << "\n";
  }
  return out.str();
}

}  // namespace mlgan
