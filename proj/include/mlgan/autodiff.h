#ifndef MLGAN_AUTODIFF_H_
#define MLGAN_AUTODIFF_H_

// Tape-based reverse-mode automatic differentiation.
//
// A Tape records primitive operations over dense tensors. Values are
// computed lazily by Evaluate() and memoized. Grad() does not compute
// numbers: it appends the backward pass to the same tape as ordinary
// primitive nodes. Every primitive's derivative rule is itself written in
// terms of primitives, so a gradient can be fed into further operations and
// differentiated again. This is what the gradient penalty needs: the norm of
// dD/dy is a node whose own gradient w.r.t. the critic's weights exists.
//
//   Tape tape;
//   Var x = tape.Variable(Tensor::Scalar(3.0));
//   Var f = x * x;
//   Var df = tape.Grad(f, {x})[0];     // 6
//   Var ddf = tape.Grad(df, {x})[0];   // 2
//
// A tape is confined to one thread.

#include <cstddef>
#include <cstdint>
#include <deque>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mlgan/tensor.h"

namespace mlgan {

enum class Op : std::uint8_t {
  kLeaf,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kSafeDiv,      // a / b, defined as 0 where b == 0
  kScale,        // a * c
  kAddScalar,    // a + c
  kMatMul,
  kTranspose,
  kSigmoid,
  kLog,
  kSquare,
  kLeakyRelu,    // slope c on the negative side
  kLeakyReluSlope,  // 1 where a > 0 else c; piecewise constant
  kClamp,        // clamp to [c, c2]
  kClampMask,    // 1 inside [c, c2] else 0; piecewise constant
  kConcat,       // along the last axis
  kSlice,        // last-axis columns [offset, offset + width)
  kPad,          // inverse of kSlice: zero-pad last axis to `width`
  kSum,          // all elements -> scalar
  kMean,         // all elements -> scalar
  kBroadcast,    // scalar -> `shape`
  kSumRows,      // (r, c) -> (c,)
  kExpandRows,   // (c,) -> (r, c)
  kSumLast,      // drop the last axis by summation
  kExpandLast,   // append a last axis of size `width` by repetition
  kL2Norm,       // Euclidean norm over the last axis
  kReshape,
};

const char* OpName(Op op);

class Tape;

// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::uint32_t id) : tape_(tape), id_(id) {}

  Tape* tape() const { return tape_; }
  std::uint32_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }
  const Shape& shape() const;
  bool requires_grad() const;
  // Shorthand for tape()->Evaluate(*this).
  const Tensor& value() const;

 private:
  Tape* tape_ = nullptr;
  std::uint32_t id_ = 0;
};

struct OpAttrs {
  double c = 0.0;
  double c2 = 0.0;
  std::size_t offset = 0;
  std::size_t width = 0;
  Shape shape = {};
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // A leaf without a value; Bind() must be called before evaluation.
  Var Leaf(Shape shape, bool requires_grad, std::string name = {});
  // A bound leaf that gradients may be taken with respect to.
  Var Variable(Tensor value, std::string name = {});
  // A bound leaf that is never differentiated.
  Var Constant(Tensor value, std::string name = {});
  // A new requires-grad leaf holding the current value of `v`. The
  // result is disconnected from v's inputs.
  Var Detach(Var v, bool requires_grad = true);

  // (Re)binds a leaf. Clears memoized values of all non-leaf nodes.
  void Bind(Var leaf, Tensor value);

  // Records one primitive. Shape rules are checked here; values are not
  // computed until Evaluate().
  Var Apply(Op op, std::span<const Var> inputs, OpAttrs attrs = {});

  // Computes (and memoizes) the value of `v`.
  const Tensor& Evaluate(Var v);

  // d output / d wrt[i] as nodes on this tape. `output` must be a scalar
  // and every wrt entry must require grad. A wrt node the output does not
  // depend on gets an all-zero constant.
  std::vector<Var> Grad(Var output, std::span<const Var> wrt);
  std::vector<Var> Grad(Var output, std::initializer_list<Var> wrt) {
    return Grad(output, std::span<const Var>(wrt.begin(), wrt.size()));
  }

  std::size_t size() const { return nodes_.size(); }
  const Shape& shape(Var v) const { return node(v).shape; }
  bool requires_grad(Var v) const { return node(v).requires_grad; }
  Op op(Var v) const { return node(v).op; }

 private:
  struct Node {
    Op op = Op::kLeaf;
    std::vector<std::uint32_t> inputs;
    OpAttrs attrs;
    Shape shape;
    bool requires_grad = false;
    std::optional<Tensor> value;
    std::string name;
  };

  const Node& node(Var v) const;
  Var Push(Node n);
  void Compute(std::uint32_t id);
  // Appends the input adjoints of node `id` given its output adjoint.
  void Backward(std::uint32_t id, Var grad_out,
                std::vector<std::optional<Var>>& adjoints,
                const std::vector<bool>& relevant);

  // deque: node references stay valid while the tape grows.
  std::deque<Node> nodes_;
};

// Primitive constructors. Each validates shapes and records one node.
Var Add(Var a, Var b);
Var Sub(Var a, Var b);
Var Mul(Var a, Var b);
Var Div(Var a, Var b);
Var SafeDiv(Var a, Var b);
Var Scale(Var a, double c);
Var AddScalar(Var a, double c);
Var MatMul(Var a, Var b);
Var Transpose(Var a);
Var Sigmoid(Var a);
Var Log(Var a);
Var Square(Var a);
Var LeakyRelu(Var a, double slope = 0.2);
Var LeakyReluSlope(Var a, double slope = 0.2);
Var Clamp(Var a, double lo, double hi);
Var ClampMask(Var a, double lo, double hi);
Var Concat(std::span<const Var> parts);
Var Concat(std::initializer_list<Var> parts);
Var Slice(Var a, std::size_t offset, std::size_t width);
Var Pad(Var a, std::size_t offset, std::size_t width);
Var Sum(Var a);
Var Mean(Var a);
Var Broadcast(Var scalar, Shape shape);
Var SumRows(Var a);
Var ExpandRows(Var a, std::size_t rows);
Var SumLast(Var a);
Var ExpandLast(Var a, std::size_t width);
Var L2Norm(Var a);
Var Reshape(Var a, Shape shape);

inline Var operator+(Var a, Var b) { return Add(a, b); }
inline Var operator-(Var a, Var b) { return Sub(a, b); }
inline Var operator*(Var a, Var b) { return Mul(a, b); }
inline Var operator/(Var a, Var b) { return Div(a, b); }
inline Var operator-(Var a) { return Scale(a, -1.0); }
inline Var operator*(double c, Var a) { return Scale(a, c); }
inline Var operator*(Var a, double c) { return Scale(a, c); }
inline Var operator+(Var a, double c) { return AddScalar(a, c); }
inline Var operator+(double c, Var a) { return AddScalar(a, c); }
inline Var operator-(Var a, double c) { return AddScalar(a, -c); }
inline Var operator-(double c, Var a) { return AddScalar(Scale(a, -1.0), c); }

}  // namespace mlgan

#endif  // MLGAN_AUTODIFF_H_
