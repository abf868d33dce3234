#include "mlgan/cli.h"

#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "doctest.h"
#include "mlgan/config.h"
#include "mlgan/gan.h"
#include "mlgan/metrics.h"
#include "mlgan/synthdata.h"
#include "mlgan/text_format.h"
#include "mlgan/training.h"

namespace mlgan {
namespace {

namespace fs = std::filesystem;

struct Result {
  int status = 0;
  std::string out;
  std::string err;
};

Result Run(std::vector<std::string> args) {
  args.insert(args.begin(), "mlgan");
  std::ostringstream out, err;
  Result r;
  r.status = RunCli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string Slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

void Spit(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  f << text;
}

std::vector<std::string> Lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

std::size_t Fields(const std::string& line) {
  return static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
}

// A fresh directory under the system temp dir, removed on exit.
struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / ("mlgan_cli_test_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& f) const { return (path / f).string(); }
};

// A small, quick experiment writing into `dir`.
std::string SmallConfig(const TempDir& dir) {
  const std::string text =
      "[data]\nn_train = 160\nn_test = 64\n"
      "[gan]\nhidden_dim = 16\nhidden_layers = 2\nproj_dim = 8\n"
      "[train]\npretrain_epochs = 2\nadv_epochs = 1\ngenerator_hidden = 16\n"
      "[paths]\ndataset = " + (dir / "data.txt") + "\nout_dir = " +
      (dir / "run") + "\n";
  Spit(dir / "exp.ini", text);
  return dir / "exp.ini";
}

TEST_CASE("gen-data with defaults writes 6000 instances, reproducibly") {
  TempDir dir("gen");
  const Result a = Run({"gen-data", "--out", dir / "a.txt"});
  REQUIRE(a.status == kExitOk);
  const Result b = Run({"gen-data", "--out", dir / "b.txt"});
  REQUIRE(b.status == kExitOk);
  const std::string text = Slurp(dir / "a.txt");
  CHECK(text == Slurp(dir / "b.txt"));
  const std::vector<std::string> lines = Lines(text);
  REQUIRE(lines.size() >= 2);
  CHECK(lines[0] == "MLGAN-DATA v1");
  CHECK(SplitWhitespace(lines[1])[0] == "6000");
  const Dataset data = LoadDataset(dir / "a.txt");
  CHECK(data.size() == 6000);
  CHECK(data.Indices(Split::kTest).size() == 1000);
  CHECK(a.out.find("marginals") != std::string::npos);
  CHECK(a.out.find("co-occurrence") != std::string::npos);

  // A different seed gives a different file.
  REQUIRE(Run({"gen-data", "--seed", "2", "--out", dir / "c.txt"}).status ==
          kExitOk);
  CHECK(Slurp(dir / "c.txt") != text);
}

TEST_CASE("config errors exit with status 1 and say why") {
  TempDir dir("cfg");
  Spit(dir / "bad.ini", "[data]\nanchor_fraction = 0\n");
  Result r = Run({"gen-data", "--config", dir / "bad.ini"});
  CHECK(r.status == kExitUsage);
  CHECK(r.err.find("anchor_fraction") != std::string::npos);

  Spit(dir / "typo.ini", "[data]\nn_train = 10\nn_tset = 5\n");
  r = Run({"gen-data", "--config", dir / "typo.ini"});
  CHECK(r.status == kExitUsage);
  CHECK(r.err.find("typo.ini:3:") != std::string::npos);
  CHECK(r.err.find("n_tset") != std::string::npos);

  r = Run({"gen-data", "--config", dir / "missing.ini"});
  CHECK(r.status == kExitUsage);
  CHECK(r.err.find("missing.ini") != std::string::npos);

  CHECK(Run({"train", "--bogus-flag"}).status == kExitUsage);
  CHECK(Run({"train", "--variant", "best"}).status == kExitUsage);
  CHECK(Run({}).status == kExitUsage);
}

TEST_CASE("train needs an existing dataset") {
  TempDir dir("nodata");
  const std::string cfg = SmallConfig(dir);
  const Result r = Run({"train", "--config", cfg});
  CHECK(r.status == kExitUsage);
  CHECK(r.err.find(dir / "data.txt") != std::string::npos);
}

TEST_CASE("baseline_only logs pretraining rows only; full logs the penalty") {
  TempDir dir("train");
  const std::string cfg = SmallConfig(dir);
  REQUIRE(Run({"gen-data", "--config", cfg}).status == kExitOk);

  Result r = Run({"train", "--config", cfg, "--variant", "baseline_only",
                  "--out", dir / "base"});
  REQUIRE(r.status == kExitOk);
  std::vector<std::string> log = Lines(Slurp(dir / "base/train_log.csv"));
  REQUIRE(log.size() == 1 + 2 * 3);  // ceil(160 / 64) = 3 batches, 2 epochs
  for (std::size_t i = 1; i < log.size(); ++i) {
    CHECK(log[i].rfind("pretrain,", 0) == 0);
  }
  CHECK(fs::exists(dir / "base/generator.ckpt"));
  CHECK_FALSE(fs::exists(dir / "base/discriminator.ckpt"));

  r = Run({"train", "--config", cfg, "--variant", "full", "--out",
           dir / "full"});
  REQUIRE(r.status == kExitOk);
  log = Lines(Slurp(dir / "full/train_log.csv"));
  const std::vector<std::string> header = {"phase",  "epoch",  "iteration",
                                           "logistic", "loss_g", "loss_d",
                                           "gp",     "grad_norm"};
  std::string joined;
  for (const std::string& h : header) joined += (joined.empty() ? "" : ",") + h;
  CHECK(log[0] == joined);
  std::size_t adversarial = 0;
  for (const std::string& line : log) {
    if (line.rfind("adversarial,", 0) != 0) continue;
    ++adversarial;
    CHECK(Fields(line) == 8);
    CHECK(line.find(",,") == std::string::npos);
  }
  CHECK(adversarial == 3);
  CHECK(fs::exists(dir / "full/discriminator.ckpt"));
  CHECK_NOTHROW(LoadDiscriminator(dir / "full/discriminator.ckpt"));

  // The generator after pretraining is shared: pretrain alone equals the
  // baseline checkpoint.
  REQUIRE(Run({"pretrain", "--config", cfg, "--out", dir / "pre"}).status ==
          kExitOk);
  CHECK(Slurp(dir / "pre/generator.ckpt") ==
        Slurp(dir / "base/generator.ckpt"));
}

TEST_CASE("train is byte-reproducible") {
  TempDir dir("repro");
  const std::string cfg = SmallConfig(dir);
  REQUIRE(Run({"gen-data", "--config", cfg}).status == kExitOk);
  REQUIRE(Run({"train", "--config", cfg, "--out", dir / "a"}).status == kExitOk);
  REQUIRE(Run({"train", "--config", cfg, "--out", dir / "b"}).status == kExitOk);
  for (const char* f : {"generator.ckpt", "discriminator.ckpt",
                        "train_log.csv", "epoch_log.csv"}) {
    CHECK_MESSAGE(Slurp(dir.path / "a" / f) == Slurp(dir.path / "b" / f), f);
  }
}

TEST_CASE("a numeric abort exits with status 2") {
  TempDir dir("nan");
  const std::string cfg = SmallConfig(dir);
  Dataset data = GenerateDataset(DependencySpec::FromLayout({}), 100, 1, 20);
  data.features.at(3, 2) = std::numeric_limits<double>::quiet_NaN();
  SaveDataset(data, dir / "data.txt");
  const Result r = Run({"train", "--config", cfg});
  CHECK(r.status == kExitNumeric);
  CHECK(r.err.find("not finite") != std::string::npos);
}

TEST_CASE("eval reproduces in-process evaluation and appends rows") {
  TempDir dir("eval");
  const std::string cfg = SmallConfig(dir);
  REQUIRE(Run({"gen-data", "--config", cfg}).status == kExitOk);
  REQUIRE(Run({"train", "--config", cfg}).status == kExitOk);
  const std::string ckpt = dir / "run/generator.ckpt";

  Result r = Run({"eval", "--config", cfg, "--checkpoint", ckpt, "--split",
                  "test", "--method", "full", "--out", dir / "rows.csv"});
  REQUIRE(r.status == kExitOk);
  const std::vector<std::string> printed = Lines(r.out);
  REQUIRE(printed.size() == 1);
  CHECK(Fields(printed[0]) == 8);

  const ExperimentConfig ec = LoadConfig(cfg);
  TrainConfig tc = ec.train;
  tc.seed = ec.seed;
  const Dataset data = LoadDataset(ec.dataset);
  const Mlp g = LoadMlp(ckpt);
  const MetricReport expected =
      EvaluateGenerator(g, ExtractorFor(data, tc), data, Split::kTest);
  CHECK(printed[0] == MetricCsvRow("full", expected));

  r = Run({"eval", "--config", cfg, "--checkpoint", ckpt, "--split", "train",
           "--method", "full", "--out", dir / "rows.csv"});
  REQUIRE(r.status == kExitOk);
  const std::vector<std::string> rows = Lines(Slurp(dir / "rows.csv"));
  REQUIRE(rows.size() == 3);
  CHECK(rows[0] == MetricCsvHeader());
  CHECK(rows[1] == printed[0]);
  CHECK(Fields(rows[2]) == 8);

  CHECK(Run({"eval", "--config", cfg, "--checkpoint", ckpt, "--split",
             "validation"}).status == kExitUsage);
}

TEST_CASE("eval rejects malformed and mismatched checkpoints") {
  TempDir dir("badckpt");
  const std::string cfg = SmallConfig(dir);
  REQUIRE(Run({"gen-data", "--config", cfg}).status == kExitOk);
  REQUIRE(Run({"train", "--config", cfg, "--variant", "baseline_only"})
              .status == kExitOk);
  std::string text = Slurp(dir / "run/generator.ckpt");
  Spit(dir / "cut.ckpt", text.substr(0, text.size() / 2));
  Result r = Run({"eval", "--config", cfg, "--checkpoint", dir / "cut.ckpt"});
  CHECK(r.status == kExitUsage);
  CHECK(r.err.find("cut.ckpt:") != std::string::npos);

  Spit(dir / "junk.ckpt", "hello\n");
  r = Run({"eval", "--config", cfg, "--checkpoint", dir / "junk.ckpt"});
  CHECK(r.status == kExitUsage);
  CHECK(r.err.find("junk.ckpt:1:") != std::string::npos);

  // A generator for 5 features cannot score a 16-feature dataset.
  Rng rng(1);
  const std::vector<std::size_t> sizes = {5, 4, 12};
  SaveMlp(InitMlp(sizes, Activation::kLeakyRelu, Activation::kSigmoid, rng),
          dir / "narrow.ckpt");
  r = Run({"eval", "--config", cfg, "--checkpoint", dir / "narrow.ckpt"});
  CHECK(r.status == kExitUsage);
  CHECK_FALSE(r.err.empty());
}

TEST_CASE("report takes per-method medians in table column order") {
  TempDir dir("report");
  const std::string header = MetricCsvHeader() + "\n";
  Spit(dir / "s1.csv", header +
                           "full,0.1,0.2,0.3,0.4,0.5,0.6,2.0\n"
                           "baseline_only,0.5,0.5,0.5,0.5,0.5,0.5,1.0\n");
  Spit(dir / "s2.csv", header + "full,0.3,0.4,0.5,0.6,0.7,0.8,3.0\n");
  Spit(dir / "s3.csv", header + "full,0.2,0.9,0.1,0.5,0.6,0.7,2.5\n");

  Result r = Run({"report", dir / "s1.csv", dir / "s2.csv", dir / "s3.csv"});
  REQUIRE(r.status == kExitOk);
  std::vector<std::string> lines = Lines(r.out);
  REQUIRE(lines.size() == 4);
  CHECK(lines[0] ==
        "| method | C-P | C-R | C-F1 | O-P | O-R | O-F1 | mean_labels |");
  CHECK(lines[2] ==
        "| full | 0.2000 | 0.4000 | 0.3000 | 0.5000 | 0.6000 | 0.7000 | 2.5000 |");
  CHECK(lines[3] ==
        "| baseline_only | 0.5000 | 0.5000 | 0.5000 | 0.5000 | 0.5000 | "
        "0.5000 | 1.0000 |");

  // Two seeds: the median is the midpoint.
  r = Run({"report", dir / "s2.csv", dir / "s3.csv"});
  REQUIRE(r.status == kExitOk);
  lines = Lines(r.out);
  REQUIRE(lines.size() == 3);
  CHECK(lines[2] ==
        "| full | 0.2500 | 0.6500 | 0.3000 | 0.5500 | 0.6500 | 0.7500 | 2.7500 |");

  // A single row gives a single-row table.
  r = Run({"report", dir / "s2.csv", "--out", dir / "t.md"});
  REQUIRE(r.status == kExitOk);
  CHECK(Lines(Slurp(dir / "t.md")).size() == 3);

  Spit(dir / "odd.csv", "method,C-F1,O-F1\nfull,0.1,0.2\n");
  r = Run({"report", dir / "s1.csv", dir / "odd.csv"});
  CHECK(r.status == kExitUsage);
  CHECK(r.err.find("odd.csv") != std::string::npos);
  Spit(dir / "short.csv", header + "full,0.1,0.2\n");
  CHECK(Run({"report", dir / "short.csv"}).status == kExitUsage);
  Spit(dir / "empty.csv", header);
  CHECK(Run({"report", dir / "empty.csv"}).status == kExitUsage);
}

TEST_CASE("median report on in-memory CSV text") {
  const std::string h = MetricCsvHeader() + "\n";
  const std::string md = MedianReport(
      {h + "a,1,1,1,1,1,1,1\n", h + "a,0,0,0,0,0,0,0\n", h + "a,0,0,0,0,0,0,5\n"});
  CHECK(Lines(md).back() ==
        "| a | 0.0000 | 0.0000 | 0.0000 | 0.0000 | 0.0000 | 0.0000 | 1.0000 |");
  CHECK_THROWS_AS(MedianReport({}), Error);
}

TEST_CASE("every subcommand's help documents the config keys") {
  for (const char* sub :
       {"gen-data", "pretrain", "train", "eval", "ablate", "report"}) {
    const Result r = Run({sub, "--help"});
    CHECK_MESSAGE(r.status == kExitOk, sub);
    for (const char* key : {"anchor_fraction", "inv_temperature",
                            "d_steps_per_g", "out_dir", "seeds"}) {
      CHECK_MESSAGE(r.out.find(key) != std::string::npos, sub, " ", key);
    }
  }
  const Result top = Run({"--help"});
  CHECK(top.status == kExitOk);
  CHECK(top.out.find("ablate") != std::string::npos);
}

TEST_CASE("ablate writes five rows per seed and a median table") {
  TempDir dir("ablate");
  const std::string cfg = SmallConfig(dir);
  Spit(cfg, Slurp(cfg) + "[experiment]\nseeds = 1 2\n");
  REQUIRE(Run({"gen-data", "--config", cfg}).status == kExitOk);
  const Result r = Run({"ablate", "--config", cfg});
  REQUIRE(r.status == kExitOk);
  const std::vector<std::string> rows = Lines(Slurp(dir / "run/ablation.csv"));
  REQUIRE(rows.size() == 1 + 10);
  CHECK(rows[0] == MetricCsvHeader());
  CHECK(rows[1].rfind("baseline_only,", 0) == 0);
  CHECK(rows[2].rfind("full,", 0) == 0);
  // Table: header, rule, five methods.
  std::size_t table_rows = 0;
  for (const std::string& line : Lines(r.out)) {
    if (line.rfind("| ", 0) == 0) ++table_rows;
  }
  CHECK(table_rows == 6);
}

}  // namespace
}  // namespace mlgan
