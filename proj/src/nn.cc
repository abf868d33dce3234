#include "mlgan/nn.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "mlgan/text_format.h"

namespace mlgan {

const char* ActivationName(Activation a) {
  switch (a) {
    case Activation::kIdentity: return "identity";
    case Activation::kLeakyRelu: return "leaky_relu";
    case Activation::kSigmoid: return "sigmoid";
  }
  return "?";
}

Activation ParseActivation(const std::string& name) {
  if (name == "identity") return Activation::kIdentity;
  if (name == "leaky_relu") return Activation::kLeakyRelu;
  if (name == "sigmoid") return Activation::kSigmoid;
  throw Error("unknown activation '" + name + "'");
}

std::vector<std::size_t> Mlp::sizes() const {
  std::vector<std::size_t> s;
  if (layers.empty()) return s;
  s.push_back(layers.front().in_size());
  for (const LinearLayer& l : layers) s.push_back(l.out_size());
  return s;
}

std::vector<Tensor*> Mlp::parameters() {
  std::vector<Tensor*> p;
  for (LinearLayer& l : layers) {
    p.push_back(&l.weight);
    p.push_back(&l.bias);
  }
  return p;
}

std::vector<const Tensor*> Mlp::parameters() const {
  std::vector<const Tensor*> p;
  for (const LinearLayer& l : layers) {
    p.push_back(&l.weight);
    p.push_back(&l.bias);
  }
  return p;
}

bool operator==(const Mlp& a, const Mlp& b) {
  if (a.hidden != b.hidden || a.output != b.output ||
      a.leaky_slope != b.leaky_slope || a.layers.size() != b.layers.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.layers.size(); ++i) {
    if (a.layers[i].weight != b.layers[i].weight ||
        a.layers[i].bias != b.layers[i].bias) {
      return false;
    }
  }
  return true;
}

LinearLayer InitLinear(std::size_t in, std::size_t out, Rng& rng) {
  if (in == 0 || out == 0) throw Error("InitLinear: sizes must be positive");
  const double a = std::sqrt(6.0 / static_cast<double>(in + out));
  LinearLayer layer{Tensor(Shape{out, in}), Tensor(Shape{out})};
  for (double& w : layer.weight.data()) w = rng.Uniform(-a, a);
  return layer;
}

Mlp InitMlp(std::span<const std::size_t> sizes, Activation hidden,
            Activation output, Rng& rng, double leaky_slope) {
  if (sizes.size() < 2) {
    throw Error("InitMlp: need at least input and output sizes, got " +
                std::to_string(sizes.size()));
  }
  Mlp model;
  model.hidden = hidden;
  model.output = output;
  model.leaky_slope = leaky_slope;
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    model.layers.push_back(InitLinear(sizes[i], sizes[i + 1], rng));
  }
  return model;
}

std::vector<Var> BindParameters(std::span<const Tensor* const> params,
                                Tape& tape, bool trainable) {
  std::vector<Var> vars;
  vars.reserve(params.size());
  for (const Tensor* p : params) {
    vars.push_back(trainable ? tape.Variable(*p) : tape.Constant(*p));
  }
  return vars;
}

Var LinearForward(Var weight, Var bias, Var input) {
  const std::size_t batch = input.shape()[0];
  return Add(MatMul(input, Transpose(weight)), ExpandRows(bias, batch));
}

Var Activate(Var x, Activation act, double leaky_slope) {
  switch (act) {
    case Activation::kIdentity: return x;
    case Activation::kLeakyRelu: return LeakyRelu(x, leaky_slope);
    case Activation::kSigmoid: return Sigmoid(x);
  }
  return x;
}

Var MlpForward(const Mlp& model, std::span<const Var> params, Var input) {
  if (model.layers.empty()) throw Error("MlpForward: model has no layers");
  if (params.size() != 2 * model.layers.size()) {
    throw Error("MlpForward: expected " +
                std::to_string(2 * model.layers.size()) + " parameters, got " +
                std::to_string(params.size()));
  }
  const Shape in_shape = input.shape();
  if (in_shape.empty() || in_shape.size() > 2 ||
      in_shape.back() != model.in_size()) {
    throw ShapeError("MlpForward: input shape " + ShapeString(in_shape) +
                     " does not end in " + std::to_string(model.in_size()));
  }
  const bool single = in_shape.size() == 1;
  Var h = single ? Reshape(input, {1, in_shape[0]}) : input;
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    h = LinearForward(params[2 * i], params[2 * i + 1], h);
    const bool last = i + 1 == model.layers.size();
    h = Activate(h, last ? model.output : model.hidden, model.leaky_slope);
  }
  return single ? Reshape(h, {model.out_size()}) : h;
}

Var MlpForward(const Mlp& model, Var input) {
  const auto params = model.parameters();
  const std::vector<Var> vars = BindParameters(params, *input.tape(), false);
  return MlpForward(model, vars, input);
}

AdamState InitAdam(std::span<const Tensor* const> params, AdamConfig config) {
  AdamState state;
  state.config = config;
  for (const Tensor* p : params) {
    state.m.emplace_back(p->shape());
    state.v.emplace_back(p->shape());
  }
  return state;
}

void AdamStep(std::span<Tensor* const> params, std::span<const Tensor> grads,
              AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw Error("AdamStep: " + std::to_string(params.size()) +
                " parameters, " + std::to_string(grads.size()) +
                " gradients, " + std::to_string(state.m.size()) + " moments");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (grads[i].shape() != params[i]->shape()) {
      throw ShapeError("AdamStep: gradient " + std::to_string(i) +
                       " has shape " + ShapeString(grads[i].shape()) +
                       ", parameter has " + ShapeString(params[i]->shape()));
    }
    if (!grads[i].AllFinite()) {
      throw NumericError("AdamStep: non-finite gradient for parameter " +
                         std::to_string(i));
    }
  }
  const AdamConfig& c = state.config;
  state.t += 1;
  const double t = static_cast<double>(state.t);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i]->data();
    auto& m = state.m[i].data();
    auto& v = state.v[i].data();
    const auto& g = grads[i].data();
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = c.beta1 * m[j] + (1.0 - c.beta1) * g[j];
      v[j] = c.beta2 * v[j] + (1.0 - c.beta2) * g[j] * g[j];
      const double m_hat = m[j] / bc1;
      const double v_hat = v[j] / bc2;
      p[j] -= c.lr * m_hat / (std::sqrt(v_hat) + c.eps);
    }
  }
}

namespace {

constexpr char kMlpMagic[] = "MLGAN-MLP v1";

}  // namespace

void WriteMlp(const Mlp& model, std::ostream& out) {
  out << kMlpMagic << "\n";
  out << "activation " << ActivationName(model.hidden) << " "
      << ActivationName(model.output) << " "
      << FormatDouble(model.leaky_slope) << "\n";
  out << "sizes";
  for (std::size_t s : model.sizes()) out << " " << s;
  out << "\n";
  for (const Tensor* p : model.parameters()) {
    WriteValuesLine(p->values(), out);
  }
}

Mlp ReadMlp(LineReader& reader) {
  reader.ExpectLine(kMlpMagic);

  std::vector<std::string> act = reader.Tokens();
  if (act.size() != 4 || act[0] != "activation") {
    reader.Fail("expected 'activation <hidden> <output> <slope>'");
  }
  Mlp model;
  try {
    model.hidden = ParseActivation(act[1]);
    model.output = ParseActivation(act[2]);
  } catch (const Error& e) {
    reader.Fail(e.what());
  }
  model.leaky_slope = reader.ParseDouble(act[3]);

  std::vector<std::string> size_tokens = reader.Tokens();
  if (size_tokens.size() < 3 || size_tokens[0] != "sizes") {
    reader.Fail("expected 'sizes <in> ... <out>' with at least two sizes");
  }
  std::vector<std::size_t> sizes;
  for (std::size_t i = 1; i < size_tokens.size(); ++i) {
    const std::size_t s = reader.ParseCount(size_tokens[i]);
    if (s == 0) reader.Fail("layer sizes must be positive");
    sizes.push_back(s);
  }
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    LinearLayer layer;
    layer.weight =
        Tensor(Shape{sizes[i + 1], sizes[i]}, reader.Doubles(sizes[i + 1] * sizes[i]));
    layer.bias = Tensor(Shape{sizes[i + 1]}, reader.Doubles(sizes[i + 1]));
    model.layers.push_back(std::move(layer));
  }
  return model;
}

Mlp ReadMlp(std::istream& in, const std::string& source) {
  LineReader reader(in, source);
  Mlp model = ReadMlp(reader);
  reader.ExpectEnd();
  return model;
}

void SaveMlp(const Mlp& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  WriteMlp(model, out);
  if (!out) throw Error("error writing '" + path + "'");
}

Mlp LoadMlp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open checkpoint '" + path + "'");
  return ReadMlp(in, path);
}

}  // namespace mlgan
