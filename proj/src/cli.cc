#include "mlgan/cli.h"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "mlgan/config.h"
#include "mlgan/metrics.h"
#include "mlgan/synthdata.h"
#include "mlgan/text_format.h"
#include "mlgan/training.h"

namespace mlgan {

namespace {

namespace fs = std::filesystem;

struct Options {
  std::string config;
  std::string variant;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string split = "test";
  std::string checkpoint;
  std::string dataset;
  std::string method;
  std::vector<std::string> inputs;
};

ExperimentConfig ResolveConfig(const Options& o) {
  ExperimentConfig cfg = o.config.empty() ? ExperimentConfig{} : LoadConfig(o.config);
  if (o.seed) {
    cfg.seed = *o.seed;
    cfg.train.seed = *o.seed;
  } else {
    cfg.train.seed = cfg.seed;
  }
  if (!o.variant.empty()) cfg.train.variant = ParseVariant(o.variant);
  if (!o.dataset.empty()) cfg.dataset = o.dataset;
  return cfg;
}

Dataset LoadDatasetOrFail(const std::string& path) {
  if (!fs::exists(path)) throw Error("dataset '" + path + "' does not exist");
  return LoadDataset(path);
}

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open '" + path.string() + "' for writing");
  f << text;
  if (!f) throw Error("error writing '" + path.string() + "'");
}

void WriteLogs(const TrainLog& log, const fs::path& dir) {
  std::ostringstream it, ep;
  WriteIterationCsv(log, it);
  WriteEpochCsv(log, ep);
  WriteText(dir / "train_log.csv", it.str());
  WriteText(dir / "epoch_log.csv", ep.str());
}

void PrintStatistics(const Dataset& data, std::ostream& out) {
  const LabelStatistics st = ComputeLabelStatistics(data, Split::kTrain);
  out << "instances " << data.size() << " (train "
      << data.Indices(Split::kTrain).size() << ", test "
      << data.Indices(Split::kTest).size() << "), labels "
      << data.num_labels() << ", features " << data.feature_dim() << "\n";
  out << "mean labels per train instance " << FormatFixed(st.mean_labels, 4)
      << "\n";
  out << "marginals";
  for (double m : st.marginals) out << " " << FormatFixed(m, 4);
  out << "\nco-occurrence\n";
  for (const auto& row : st.co_occurrence) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      out << (j ? " " : "  ") << FormatFixed(row[j], 4);
    }
    out << "\n";
  }
}

int GenData(const Options& o, std::ostream& out) {
  const ExperimentConfig cfg = ResolveConfig(o);
  const std::string path = o.out.empty() ? cfg.dataset : o.out;
  const Dataset data = GenerateDataset(cfg.Spec(), cfg.n_train + cfg.n_test,
                                       cfg.DataSeed(), cfg.n_test);
  SaveDataset(data, path);
  out << "wrote " << path << "\n";
  PrintStatistics(data, out);
  return kExitOk;
}

fs::path OutDir(const Options& o, const ExperimentConfig& cfg) {
  fs::path dir = o.out.empty() ? fs::path(cfg.out_dir) : fs::path(o.out);
  fs::create_directories(dir);
  return dir;
}

int Pretrain(const Options& o, std::ostream& out) {
  const ExperimentConfig cfg = ResolveConfig(o);
  const Dataset data = LoadDatasetOrFail(cfg.dataset);
  const TrainedModels m = RunPretraining(data, cfg.train);
  const fs::path dir = OutDir(o, cfg);
  SaveMlp(m.generator, (dir / "generator.ckpt").string());
  WriteLogs(m.log, dir);
  out << "wrote " << (dir / "generator.ckpt").string() << "\n";
  return kExitOk;
}

int Train(const Options& o, std::ostream& out) {
  const ExperimentConfig cfg = ResolveConfig(o);
  const Dataset data = LoadDatasetOrFail(cfg.dataset);
  const TrainedModels m = RunTraining(data, cfg.train);
  const fs::path dir = OutDir(o, cfg);
  SaveMlp(m.generator, (dir / "generator.ckpt").string());
  if (m.discriminator) {
    SaveDiscriminator(*m.discriminator, (dir / "discriminator.ckpt").string());
  }
  WriteLogs(m.log, dir);
  out << "variant " << VariantName(cfg.train.variant) << ", seed "
      << cfg.train.seed << ": " << m.log.g_updates << " generator and "
      << m.log.d_updates << " discriminator updates\n";
  out << "wrote " << dir.string() << "\n";
  return kExitOk;
}

Split ParseSplit(const std::string& s) {
  if (s == "train") return Split::kTrain;
  if (s == "test") return Split::kTest;
  throw Error("--split must be 'train' or 'test', got '" + s + "'");
}

void AppendCsvRow(const std::string& path, const std::string& row) {
  const bool fresh = !fs::exists(path) || fs::file_size(path) == 0;
  std::ofstream f(path, std::ios::app | std::ios::binary);
  if (!f) throw Error("cannot open '" + path + "' for appending");
  if (fresh) f << MetricCsvHeader() << "\n";
  f << row << "\n";
}

int Eval(const Options& o, std::ostream& out) {
  const ExperimentConfig cfg = ResolveConfig(o);
  const Mlp g = LoadMlp(o.checkpoint);
  const Dataset data = LoadDatasetOrFail(cfg.dataset);
  const FeatureExtractor fext = ExtractorFor(data, cfg.train);
  if (g.in_size() != fext.out_size() || g.out_size() != data.num_labels()) {
    throw ShapeError("checkpoint maps " + std::to_string(g.in_size()) + " -> " +
                     std::to_string(g.out_size()) + " but the dataset needs " +
                     std::to_string(fext.out_size()) + " -> " +
                     std::to_string(data.num_labels()));
  }
  const MetricReport r = EvaluateGenerator(g, fext, data, ParseSplit(o.split));
  const std::string method =
      !o.method.empty() ? o.method
                        : (!o.variant.empty() ? o.variant : "model");
  const std::string row = MetricCsvRow(method, r);
  out << row << "\n";
  if (!o.out.empty()) AppendCsvRow(o.out, row);
  return kExitOk;
}

int Ablate(const Options& o, std::ostream& out) {
  const ExperimentConfig cfg = ResolveConfig(o);
  const Dataset data = LoadDatasetOrFail(cfg.dataset);
  std::vector<std::uint64_t> seeds = cfg.seeds;
  if (o.seed) seeds = {*o.seed};
  const std::vector<AblationRow> rows = RunAblation(data, cfg.train, seeds);
  std::ostringstream csv;
  csv << MetricCsvHeader() << "\n";
  for (const AblationRow& r : rows) {
    csv << MetricCsvRow(VariantName(r.variant), r.test) << "\n";
  }
  const std::string path =
      o.out.empty() ? (OutDir(o, cfg) / "ablation.csv").string() : o.out;
  WriteText(path, csv.str());
  out << MedianReport({csv.str()});
  out << "wrote " << path << "\n";
  return kExitOk;
}

int Report(const Options& o, std::ostream& out) {
  if (o.inputs.empty()) throw Error("report: needs at least one CSV input");
  std::vector<std::string> texts;
  for (const std::string& p : o.inputs) {
    std::ifstream f(p);
    if (!f) throw Error("cannot open '" + p + "'");
    std::ostringstream s;
    s << f.rdbuf();
    texts.push_back(s.str());
  }
  const std::string table = MedianReport(texts, o.inputs);
  if (o.out.empty()) {
    out << table;
  } else {
    WriteText(o.out, table);
    out << "wrote " << o.out << "\n";
  }
  return kExitOk;
}

double Median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::string MedianReport(const std::vector<std::string>& csv_texts,
                         const std::vector<std::string>& sources) {
  const std::string header = MetricCsvHeader();
  const std::vector<std::string> columns = [&] {
    std::vector<std::string> c;
    std::stringstream s(header);
    for (std::string t; std::getline(s, t, ',');) c.push_back(t);
    return c;
  }();
  std::vector<std::string> order;
  std::map<std::string, std::vector<std::vector<double>>> values;
  for (std::size_t f = 0; f < csv_texts.size(); ++f) {
    std::istringstream in(csv_texts[f]);
    LineReader reader(in, f < sources.size() ? sources[f]
                                             : "input " + std::to_string(f + 1));
    std::string line;
    if (!reader.TryNext(line) || Trim(line) != header) {
      reader.Fail("expected header '" + header + "'");
    }
    while (reader.TryNext(line)) {
      if (Trim(line).empty()) continue;
      std::vector<std::string> cells;
      std::stringstream s(Trim(line));
      for (std::string t; std::getline(s, t, ',');) cells.push_back(t);
      if (cells.size() != columns.size()) {
        reader.Fail("expected " + std::to_string(columns.size()) +
                    " fields, got " + std::to_string(cells.size()));
      }
      if (!values.count(cells[0])) order.push_back(cells[0]);
      auto& cols = values[cells[0]];
      cols.resize(columns.size() - 1);
      for (std::size_t c = 1; c < cells.size(); ++c) {
        cols[c - 1].push_back(reader.ParseDouble(cells[c]));
      }
    }
  }
  if (order.empty()) throw Error("report: no metric rows");
  std::ostringstream out;
  out << "|";
  for (const std::string& c : columns) out << " " << c << " |";
  out << "\n|";
  for (std::size_t c = 0; c < columns.size(); ++c) out << (c ? "---:|" : "---|");
  out << "\n";
  for (const std::string& m : order) {
    out << "| " << m << " |";
    for (const auto& col : values[m]) out << " " << FormatFixed(Median(col), 4) << " |";
    out << "\n";
  }
  return out.str();
}

int RunCli(int argc, const char* const* argv, std::ostream& out,
           std::ostream& err) {
  CLI::App app{"Adversarially trained multi-label classifier on synthetic data",
               "mlgan"};
  app.require_subcommand(1);
  Options o;
  const std::string keys = ConfigKeyHelp();

  auto add_config = [&](CLI::App* c) {
    c->add_option("--config", o.config, "experiment config file");
    c->add_option("--seed", o.seed, "overrides [experiment] seed");
    c->footer(keys);
  };

  CLI::App* gen = app.add_subcommand("gen-data", "generate a synthetic dataset");
  add_config(gen);
  gen->add_option("--out", o.out, "dataset path (default [paths] dataset)");

  CLI::App* pre = app.add_subcommand("pretrain", "pretrain the classifier only");
  add_config(pre);
  pre->add_option("--dataset", o.dataset, "overrides [paths] dataset");
  pre->add_option("--out", o.out, "output directory (default [paths] out_dir)");

  CLI::App* train = app.add_subcommand("train", "pretrain, then adversarial training");
  add_config(train);
  train->add_option("--variant", o.variant, "overrides [train] variant");
  train->add_option("--dataset", o.dataset, "overrides [paths] dataset");
  train->add_option("--out", o.out, "output directory (default [paths] out_dir)");

  CLI::App* eval = app.add_subcommand("eval", "score a generator checkpoint");
  add_config(eval);
  eval->add_option("--checkpoint", o.checkpoint, "generator checkpoint")->required();
  eval->add_option("--dataset", o.dataset, "overrides [paths] dataset");
  eval->add_option("--split", o.split, "train or test")
      ->check(CLI::IsMember({"train", "test"}));
  eval->add_option("--variant", o.variant, "method label for the CSV row");
  eval->add_option("--method", o.method, "method label (overrides --variant)");
  eval->add_option("--out", o.out, "CSV file to append the row to");

  CLI::App* ablate = app.add_subcommand("ablate", "all variants over [experiment] seeds");
  add_config(ablate);
  ablate->add_option("--dataset", o.dataset, "overrides [paths] dataset");
  ablate->add_option("--out", o.out, "CSV output (default <out_dir>/ablation.csv)");

  CLI::App* report = app.add_subcommand("report", "median markdown table from CSV rows");
  report->add_option("inputs", o.inputs, "metric CSV files")->required();
  report->add_option("--out", o.out, "markdown output (default stdout)");
  report->footer(keys);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen) return GenData(o, out);
    if (*pre) return Pretrain(o, out);
    if (*train) return Train(o, out);
    if (*eval) return Eval(o, out);
    if (*ablate) return Ablate(o, out);
    if (*report) return Report(o, out);
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err) {
  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  return RunCli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace mlgan
