#ifndef MLGAN_NN_H_
#define MLGAN_NN_H_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mlgan/autodiff.h"
#include "mlgan/random.h"
#include "mlgan/tensor.h"
#include "mlgan/text_format.h"

namespace mlgan {

enum class Activation { kIdentity, kLeakyRelu, kSigmoid };

const char* ActivationName(Activation a);
Activation ParseActivation(const std::string& name);

// y = x W^T + b with W of shape (out, in).
struct LinearLayer {
  Tensor weight;
  Tensor bias;

  std::size_t in_size() const { return weight.shape()[1]; }
  std::size_t out_size() const { return weight.shape()[0]; }
};

struct Mlp {
  std::vector<LinearLayer> layers;
  Activation hidden = Activation::kLeakyRelu;
  Activation output = Activation::kIdentity;
  double leaky_slope = 0.2;

  // Layer widths, input first: {in, h1, ..., out}.
  std::vector<std::size_t> sizes() const;
  std::size_t in_size() const { return layers.front().in_size(); }
  std::size_t out_size() const { return layers.back().out_size(); }

  // Parameters in checkpoint order: W0, b0, W1, b1, ...
  std::vector<Tensor*> parameters();
  std::vector<const Tensor*> parameters() const;

  friend bool operator==(const Mlp&, const Mlp&);
};

// Glorot-uniform weights, a = sqrt(6 / (fan_in + fan_out)); zero biases.
LinearLayer InitLinear(std::size_t in, std::size_t out, Rng& rng);

// `sizes` lists widths from input to output and needs at least two entries.
Mlp InitMlp(std::span<const std::size_t> sizes, Activation hidden,
            Activation output, Rng& rng, double leaky_slope = 0.2);

// Registers tensors as leaves on `tape`, trainable or constant.
std::vector<Var> BindParameters(std::span<const Tensor* const> params,
                                Tape& tape, bool trainable);

Var LinearForward(Var weight, Var bias, Var input);

// Applies `act` as used between/after MLP layers.
Var Activate(Var x, Activation act, double leaky_slope);

// Forward pass with parameters already on the tape (from BindParameters).
// `input` is (batch, in) or a single (in,) vector; the output keeps the
// input's rank.
Var MlpForward(const Mlp& model, std::span<const Var> params, Var input);

// Forward pass with the parameters bound as constants on input's tape.
Var MlpForward(const Mlp& model, Var input);

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::int64_t t = 0;
};

// Zeroed moments shaped like `params`.
AdamState InitAdam(std::span<const Tensor* const> params, AdamConfig config);

// One bias-corrected Adam update in place. Throws NumericError naming the
// parameter index if a gradient is not finite; nothing is modified then.
void AdamStep(std::span<Tensor* const> params, std::span<const Tensor> grads,
              AdamState& state);

// Checkpoint text format (all values written with 17 significant digits):
//
//   MLGAN-MLP v1
//   activation <hidden> <output> <leaky_slope>
//   sizes <in> <h1> ... <out>
//   <W0 values, row-major>
//   <b0 values>
//   ...
//
// One line per parameter tensor, in parameters() order.
void WriteMlp(const Mlp& model, std::ostream& out);
Mlp ReadMlp(std::istream& in, const std::string& source = "checkpoint");
// Reads one model from the reader's current line, leaving later lines.
Mlp ReadMlp(LineReader& reader);
void SaveMlp(const Mlp& model, const std::string& path);
Mlp LoadMlp(const std::string& path);

}  // namespace mlgan

#endif  // MLGAN_NN_H_
