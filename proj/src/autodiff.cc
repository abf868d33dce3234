#include "mlgan/autodiff.h"

#include <algorithm>
#include <cmath>

namespace mlgan {

namespace {

// Ops whose derivative is zero almost everywhere.
bool IsPiecewiseConstant(Op op) {
  return op == Op::kLeakyReluSlope || op == Op::kClampMask;
}

std::size_t LeadingSize(const Shape& s) {
  // Product of all but the last axis.
  std::size_t n = 1;
  for (std::size_t i = 0; i + 1 < s.size(); ++i) n *= s[i];
  return n;
}

Shape DropLast(const Shape& s) { return Shape(s.begin(), s.end() - 1); }

[[noreturn]] void ShapeFail(Op op, std::span<const Shape* const> shapes,
                            const std::string& why) {
  std::string msg = std::string(OpName(op)) + ": " + why + "; operand shapes";
  for (const Shape* s : shapes) msg += " " + ShapeString(*s);
  throw ShapeError(msg);
}

double Sigm(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

const char* OpName(Op op) {
  switch (op) {
    case Op::kLeaf: return "leaf";
    case Op::kAdd: return "add";
    case Op::kSub: return "sub";
    case Op::kMul: return "mul";
    case Op::kDiv: return "div";
    case Op::kSafeDiv: return "safe_div";
    case Op::kScale: return "scale";
    case Op::kAddScalar: return "add_scalar";
    case Op::kMatMul: return "matmul";
    case Op::kTranspose: return "transpose";
    case Op::kSigmoid: return "sigmoid";
    case Op::kLog: return "log";
    case Op::kSquare: return "square";
    case Op::kLeakyRelu: return "leaky_relu";
    case Op::kLeakyReluSlope: return "leaky_relu_slope";
    case Op::kClamp: return "clamp";
    case Op::kClampMask: return "clamp_mask";
    case Op::kConcat: return "concat";
    case Op::kSlice: return "slice";
    case Op::kPad: return "pad";
    case Op::kSum: return "sum";
    case Op::kMean: return "mean";
    case Op::kBroadcast: return "broadcast";
    case Op::kSumRows: return "sum_rows";
    case Op::kExpandRows: return "expand_rows";
    case Op::kSumLast: return "sum_last";
    case Op::kExpandLast: return "expand_last";
    case Op::kL2Norm: return "l2_norm";
    case Op::kReshape: return "reshape";
  }
  return "?";
}

const Shape& Var::shape() const { return tape_->shape(*this); }
bool Var::requires_grad() const { return tape_->requires_grad(*this); }
const Tensor& Var::value() const { return tape_->Evaluate(*this); }

const Tape::Node& Tape::node(Var v) const {
  if (v.tape() != this || v.id() >= nodes_.size()) {
    throw Error("Var does not belong to this tape");
  }
  return nodes_[v.id()];
}

Var Tape::Push(Node n) {
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Var Tape::Leaf(Shape shape, bool requires_grad, std::string name) {
  Node n;
  n.shape = std::move(shape);
  n.requires_grad = requires_grad;
  n.name = name.empty() ? "leaf#" + std::to_string(nodes_.size())
                        : std::move(name);
  return Push(std::move(n));
}

Var Tape::Variable(Tensor value, std::string name) {
  Var v = Leaf(value.shape(), true, std::move(name));
  Bind(v, std::move(value));
  return v;
}

Var Tape::Constant(Tensor value, std::string name) {
  Var v = Leaf(value.shape(), false, std::move(name));
  Bind(v, std::move(value));
  return v;
}

Var Tape::Detach(Var v, bool requires_grad) {
  Tensor value = Evaluate(v);
  Var leaf = Leaf(value.shape(), requires_grad);
  nodes_[leaf.id()].value = std::move(value);
  return leaf;
}

void Tape::Bind(Var leaf, Tensor value) {
  const Node& n = node(leaf);
  if (n.op != Op::kLeaf) {
    throw Error("Bind: node " + std::to_string(leaf.id()) + " is not a leaf");
  }
  if (value.shape() != n.shape) {
    throw ShapeError("Bind: leaf '" + n.name + "' has shape " +
                     ShapeString(n.shape) + ", value has shape " +
                     ShapeString(value.shape()));
  }
  if (!value.AllFinite()) {
    throw NumericError("Bind: non-finite value for leaf '" + n.name + "'");
  }
  // An unbound leaf has no evaluated dependents; only rebinding invalidates.
  if (n.value) {
    for (Node& other : nodes_) {
      if (other.op != Op::kLeaf) other.value.reset();
    }
  }
  nodes_[leaf.id()].value = std::move(value);
}

Var Tape::Apply(Op op, std::span<const Var> inputs, OpAttrs attrs) {
  std::vector<const Shape*> shapes;
  for (Var v : inputs) shapes.push_back(&node(v).shape);
  auto need_inputs = [&](std::size_t k) {
    if (inputs.size() != k) {
      ShapeFail(op, shapes, "expects " + std::to_string(k) + " operand(s)");
    }
  };

  Shape out;
  switch (op) {
    case Op::kLeaf:
      throw Error("Apply: use Leaf/Variable/Constant to create leaves");
    case Op::kAdd:
    case Op::kSub:
    case Op::kMul:
    case Op::kDiv:
    case Op::kSafeDiv:
      need_inputs(2);
      if (*shapes[0] != *shapes[1]) ShapeFail(op, shapes, "shapes differ");
      out = *shapes[0];
      break;
    case Op::kScale:
    case Op::kAddScalar:
    case Op::kSigmoid:
    case Op::kLog:
    case Op::kSquare:
    case Op::kLeakyRelu:
    case Op::kLeakyReluSlope:
    case Op::kClamp:
    case Op::kClampMask:
      need_inputs(1);
      out = *shapes[0];
      break;
    case Op::kMatMul:
      need_inputs(2);
      if (shapes[0]->size() != 2 || shapes[1]->size() != 2 ||
          (*shapes[0])[1] != (*shapes[1])[0]) {
        ShapeFail(op, shapes, "needs (m, k) x (k, n)");
      }
      out = {(*shapes[0])[0], (*shapes[1])[1]};
      break;
    case Op::kTranspose:
      need_inputs(1);
      if (shapes[0]->size() != 2) ShapeFail(op, shapes, "needs rank 2");
      out = {(*shapes[0])[1], (*shapes[0])[0]};
      break;
    case Op::kConcat: {
      if (inputs.empty()) ShapeFail(op, shapes, "needs at least one operand");
      const Shape& first = *shapes[0];
      if (first.empty()) ShapeFail(op, shapes, "operands must have rank >= 1");
      std::size_t total = 0;
      for (const Shape* s : shapes) {
        if (s->size() != first.size() || DropLast(*s) != DropLast(first)) {
          ShapeFail(op, shapes, "leading axes differ");
        }
        total += s->back();
      }
      out = first;
      out.back() = total;
      break;
    }
    case Op::kSlice:
      need_inputs(1);
      if (shapes[0]->empty() ||
          attrs.offset + attrs.width > shapes[0]->back()) {
        ShapeFail(op, shapes, "slice out of range");
      }
      out = *shapes[0];
      out.back() = attrs.width;
      break;
    case Op::kPad:
      need_inputs(1);
      if (shapes[0]->empty() ||
          attrs.offset + shapes[0]->back() > attrs.width) {
        ShapeFail(op, shapes, "pad target too narrow");
      }
      out = *shapes[0];
      out.back() = attrs.width;
      break;
    case Op::kSum:
    case Op::kMean:
      need_inputs(1);
      if (ShapeSize(*shapes[0]) == 0) ShapeFail(op, shapes, "empty operand");
      out = {};
      break;
    case Op::kBroadcast:
      need_inputs(1);
      if (ShapeSize(*shapes[0]) != 1) {
        ShapeFail(op, shapes, "operand must hold one value");
      }
      if (attrs.shape.size() > 2) ShapeFail(op, shapes, "target rank > 2");
      out = attrs.shape;
      break;
    case Op::kSumRows:
      need_inputs(1);
      if (shapes[0]->size() != 2) ShapeFail(op, shapes, "needs rank 2");
      out = {(*shapes[0])[1]};
      break;
    case Op::kExpandRows:
      need_inputs(1);
      if (shapes[0]->size() != 1) ShapeFail(op, shapes, "needs rank 1");
      out = {attrs.width, (*shapes[0])[0]};
      break;
    case Op::kSumLast:
    case Op::kL2Norm:
      need_inputs(1);
      if (shapes[0]->empty()) ShapeFail(op, shapes, "needs rank >= 1");
      out = DropLast(*shapes[0]);
      break;
    case Op::kExpandLast:
      need_inputs(1);
      if (shapes[0]->size() > 1) ShapeFail(op, shapes, "needs rank <= 1");
      out = *shapes[0];
      out.push_back(attrs.width);
      break;
    case Op::kReshape:
      need_inputs(1);
      if (ShapeSize(attrs.shape) != ShapeSize(*shapes[0]) ||
          attrs.shape.size() > 2) {
        ShapeFail(op, shapes, "cannot reshape to " + ShapeString(attrs.shape));
      }
      out = attrs.shape;
      break;
  }

  Node n;
  n.op = op;
  n.attrs = std::move(attrs);
  n.shape = std::move(out);
  for (Var v : inputs) {
    n.inputs.push_back(v.id());
    n.requires_grad = n.requires_grad || node(v).requires_grad;
  }
  if (IsPiecewiseConstant(op)) n.requires_grad = false;
  return Push(std::move(n));
}

const Tensor& Tape::Evaluate(Var v) {
  const Node& target = node(v);
  if (target.value) return *target.value;

  // Iterative post-order over the unevaluated part of the graph.
  std::vector<std::uint32_t> stack{v.id()};
  while (!stack.empty()) {
    const std::uint32_t id = stack.back();
    Node& n = nodes_[id];
    if (n.value) {
      stack.pop_back();
      continue;
    }
    if (n.op == Op::kLeaf) {
      throw Error("evaluate: leaf '" + n.name + "' is unbound");
    }
    bool ready = true;
    for (std::uint32_t in : n.inputs) {
      if (!nodes_[in].value) {
        stack.push_back(in);
        ready = false;
      }
    }
    if (ready) {
      Compute(id);
      stack.pop_back();
    }
  }
  return *nodes_[v.id()].value;
}

void Tape::Compute(std::uint32_t id) {
  Node& n = nodes_[id];
  auto in = [&](std::size_t k) -> const Tensor& {
    return *nodes_[n.inputs[k]].value;
  };
  Tensor out(n.shape);
  std::vector<double>& o = out.data();
  const OpAttrs& at = n.attrs;

  switch (n.op) {
    case Op::kLeaf:
      return;
    case Op::kAdd: {
      const auto &a = in(0).data(), &b = in(1).data();
      for (std::size_t i = 0; i < o.size(); ++i) o[i] = a[i] + b[i];
      break;
    }
    case Op::kSub: {
      const auto &a = in(0).data(), &b = in(1).data();
      for (std::size_t i = 0; i < o.size(); ++i) o[i] = a[i] - b[i];
      break;
    }
    case Op::kMul: {
      const auto &a = in(0).data(), &b = in(1).data();
      for (std::size_t i = 0; i < o.size(); ++i) o[i] = a[i] * b[i];
      break;
    }
    case Op::kDiv: {
      const auto &a = in(0).data(), &b = in(1).data();
      for (std::size_t i = 0; i < o.size(); ++i) o[i] = a[i] / b[i];
      break;
    }
    case Op::kSafeDiv: {
      const auto &a = in(0).data(), &b = in(1).data();
      for (std::size_t i = 0; i < o.size(); ++i) {
        o[i] = b[i] == 0.0 ? 0.0 : a[i] / b[i];
      }
      break;
    }
    case Op::kScale: {
      const auto& a = in(0).data();
      for (std::size_t i = 0; i < o.size(); ++i) o[i] = a[i] * at.c;
      break;
    }
    case Op::kAddScalar: {
      const auto& a = in(0).data();
      for (std::size_t i = 0; i < o.size(); ++i) o[i] = a[i] + at.c;
      break;
    }
    case Op::kMatMul: {
      const Tensor& a = in(0);
      const Tensor& b = in(1);
      const std::size_t m = a.shape()[0], k = a.shape()[1], p = b.shape()[1];
      const double* pa = a.data().data();
      const double* pb = b.data().data();
      double* po = o.data();
      for (std::size_t i = 0; i < m; ++i) {
        double* row = po + i * p;
        for (std::size_t kk = 0; kk < k; ++kk) {
          const double aik = pa[i * k + kk];
          if (aik == 0.0) continue;
          const double* brow = pb + kk * p;
          for (std::size_t j = 0; j < p; ++j) row[j] += aik * brow[j];
        }
      }
      break;
    }
    case Op::kTranspose: {
      const Tensor& a = in(0);
      const std::size_t r = a.shape()[0], c = a.shape()[1];
      for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) o[j * r + i] = a[i * c + j];
      }
      break;
    }
    case Op::kSigmoid: {
      const auto& a = in(0).data();
      for (std::size_t i = 0; i < o.size(); ++i) o[i] = Sigm(a[i]);
      break;
    }
    case Op::kLog: {
      const auto& a = in(0).data();
      for (std::size_t i = 0; i < o.size(); ++i) {
        if (!(a[i] > 0.0)) {
          throw DomainError("log: non-positive argument " +
                            std::to_string(a[i]) + " at index " +
                            std::to_string(i) + " of node " +
                            std::to_string(id));
        }
        o[i] = std::log(a[i]);
      }
      break;
    }
    case Op::kSquare: {
      const auto& a = in(0).data();
      for (std::size_t i = 0; i < o.size(); ++i) o[i] = a[i] * a[i];
      break;
    }
    case Op::kLeakyRelu: {
      const auto& a = in(0).data();
      for (std::size_t i = 0; i < o.size(); ++i) {
        o[i] = a[i] > 0.0 ? a[i] : at.c * a[i];
      }
      break;
    }
    case Op::kLeakyReluSlope: {
      // At exactly 0 the negative-side slope is used.
      const auto& a = in(0).data();
      for (std::size_t i = 0; i < o.size(); ++i) {
        o[i] = a[i] > 0.0 ? 1.0 : at.c;
      }
      break;
    }
    case Op::kClamp: {
      const auto& a = in(0).data();
      for (std::size_t i = 0; i < o.size(); ++i) {
        o[i] = std::clamp(a[i], at.c, at.c2);
      }
      break;
    }
    case Op::kClampMask: {
      const auto& a = in(0).data();
      for (std::size_t i = 0; i < o.size(); ++i) {
        o[i] = (a[i] >= at.c && a[i] <= at.c2) ? 1.0 : 0.0;
      }
      break;
    }
    case Op::kConcat: {
      const std::size_t rows = LeadingSize(n.shape);
      const std::size_t total = n.shape.back();
      std::size_t offset = 0;
      for (std::size_t k = 0; k < n.inputs.size(); ++k) {
        const Tensor& a = in(k);
        const std::size_t w = a.shape().back();
        for (std::size_t r = 0; r < rows; ++r) {
          std::copy_n(a.data().begin() + r * w, w,
                      o.begin() + r * total + offset);
        }
        offset += w;
      }
      break;
    }
    case Op::kSlice: {
      const Tensor& a = in(0);
      const std::size_t rows = LeadingSize(n.shape);
      const std::size_t src_w = a.shape().back();
      for (std::size_t r = 0; r < rows; ++r) {
        std::copy_n(a.data().begin() + r * src_w + at.offset, at.width,
                    o.begin() + r * at.width);
      }
      break;
    }
    case Op::kPad: {
      const Tensor& a = in(0);
      const std::size_t rows = LeadingSize(n.shape);
      const std::size_t src_w = a.shape().back();
      for (std::size_t r = 0; r < rows; ++r) {
        std::copy_n(a.data().begin() + r * src_w, src_w,
                    o.begin() + r * at.width + at.offset);
      }
      break;
    }
    case Op::kSum:
    case Op::kMean: {
      double s = 0.0;
      for (double x : in(0).data()) s += x;
      o[0] = n.op == Op::kSum ? s : s / static_cast<double>(in(0).size());
      break;
    }
    case Op::kBroadcast: {
      std::fill(o.begin(), o.end(), in(0)[0]);
      break;
    }
    case Op::kSumRows: {
      const Tensor& a = in(0);
      const std::size_t r = a.shape()[0], c = a.shape()[1];
      for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) o[j] += a[i * c + j];
      }
      break;
    }
    case Op::kExpandRows: {
      const Tensor& a = in(0);
      const std::size_t c = a.size();
      for (std::size_t i = 0; i < at.width; ++i) {
        std::copy_n(a.data().begin(), c, o.begin() + i * c);
      }
      break;
    }
    case Op::kSumLast:
    case Op::kL2Norm: {
      const Tensor& a = in(0);
      const std::size_t c = a.shape().back();
      for (std::size_t i = 0; i < o.size(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
          const double x = a[i * c + j];
          s += n.op == Op::kSumLast ? x : x * x;
        }
        o[i] = n.op == Op::kSumLast ? s : std::sqrt(s);
      }
      break;
    }
    case Op::kExpandLast: {
      const Tensor& a = in(0);
      for (std::size_t i = 0; i < a.size(); ++i) {
        std::fill_n(o.begin() + i * at.width, at.width, a[i]);
      }
      break;
    }
    case Op::kReshape:
      o = in(0).data();
      break;
  }

  if (!out.AllFinite()) {
    throw NumericError(std::string(OpName(n.op)) + ": non-finite result at node " +
                       std::to_string(id));
  }
  n.value = std::move(out);
}

std::vector<Var> Tape::Grad(Var output, std::span<const Var> wrt) {
  const Node& out_node = node(output);
  if (ShapeSize(out_node.shape) != 1) {
    throw ShapeError("grad: output must be scalar, got shape " +
                     ShapeString(out_node.shape));
  }
  std::uint32_t lowest = output.id();
  for (Var w : wrt) {
    const Node& wn = node(w);
    if (!wn.requires_grad) {
      throw Error("grad: node " + std::to_string(w.id()) + " ('" + wn.name +
                  "') does not require grad");
    }
    lowest = std::min(lowest, w.id());
  }

  const std::size_t count = output.id() + 1;
  // relevant[i]: node i depends on some wrt node through differentiable ops.
  std::vector<bool> relevant(count, false);
  for (Var w : wrt) {
    if (w.id() < count) relevant[w.id()] = true;
  }
  for (std::uint32_t id = lowest; id < count; ++id) {
    const Node& n = nodes_[id];
    if (relevant[id] || !n.requires_grad) continue;
    for (std::uint32_t in : n.inputs) {
      if (relevant[in]) {
        relevant[id] = true;
        break;
      }
    }
  }

  std::vector<std::optional<Var>> adjoints(count);
  if (relevant[output.id()]) {
    adjoints[output.id()] = Constant(Tensor(out_node.shape, 1.0), "grad_seed");
  }
  for (std::uint32_t id = output.id() + 1; id-- > lowest;) {
    if (!adjoints[id] || nodes_[id].op == Op::kLeaf) continue;
    Backward(id, *adjoints[id], adjoints, relevant);
  }

  std::vector<Var> result;
  result.reserve(wrt.size());
  for (Var w : wrt) {
    if (w.id() < count && adjoints[w.id()]) {
      result.push_back(*adjoints[w.id()]);
    } else {
      result.push_back(Constant(Tensor(node(w).shape, 0.0), "zero_grad"));
    }
  }
  return result;
}

void Tape::Backward(std::uint32_t id, Var g,
                    std::vector<std::optional<Var>>& adjoints,
                    const std::vector<bool>& relevant) {
  // Copy what is needed: pushing nodes below may not move existing ones
  // (deque), but keeping locals keeps this readable.
  const Op op = nodes_[id].op;
  const std::vector<std::uint32_t> ins = nodes_[id].inputs;
  const OpAttrs at = nodes_[id].attrs;
  const Var z(this, id);
  auto input = [&](std::size_t k) { return Var(this, ins[k]); };
  auto wants = [&](std::size_t k) { return relevant[ins[k]]; };
  auto accumulate = [&](std::size_t k, Var contribution) {
    std::optional<Var>& slot = adjoints[ins[k]];
    slot = slot ? Add(*slot, contribution) : contribution;
  };

  switch (op) {
    case Op::kLeaf:
    case Op::kLeakyReluSlope:
    case Op::kClampMask:
      break;
    case Op::kAdd:
      if (wants(0)) accumulate(0, g);
      if (wants(1)) accumulate(1, g);
      break;
    case Op::kSub:
      if (wants(0)) accumulate(0, g);
      if (wants(1)) accumulate(1, Scale(g, -1.0));
      break;
    case Op::kMul:
      if (wants(0)) accumulate(0, Mul(g, input(1)));
      if (wants(1)) accumulate(1, Mul(input(0), g));
      break;
    case Op::kDiv:
      // z = a / b: da = g / b, db = -g z / b
      if (wants(0)) accumulate(0, Div(g, input(1)));
      if (wants(1)) accumulate(1, Scale(Div(Mul(g, z), input(1)), -1.0));
      break;
    case Op::kSafeDiv:
      if (wants(0)) accumulate(0, SafeDiv(g, input(1)));
      if (wants(1)) accumulate(1, Scale(SafeDiv(Mul(g, z), input(1)), -1.0));
      break;
    case Op::kScale:
      if (wants(0)) accumulate(0, Scale(g, at.c));
      break;
    case Op::kAddScalar:
      if (wants(0)) accumulate(0, g);
      break;
    case Op::kMatMul:
      // z = a b: da = g b^T, db = a^T g
      if (wants(0)) accumulate(0, MatMul(g, Transpose(input(1))));
      if (wants(1)) accumulate(1, MatMul(Transpose(input(0)), g));
      break;
    case Op::kTranspose:
      if (wants(0)) accumulate(0, Transpose(g));
      break;
    case Op::kSigmoid:
      // dz/da = z (1 - z)
      if (wants(0)) {
        accumulate(0, Mul(g, Mul(z, AddScalar(Scale(z, -1.0), 1.0))));
      }
      break;
    case Op::kLog:
      if (wants(0)) accumulate(0, Div(g, input(0)));
      break;
    case Op::kSquare:
      if (wants(0)) accumulate(0, Mul(g, Scale(input(0), 2.0)));
      break;
    case Op::kLeakyRelu:
      if (wants(0)) accumulate(0, Mul(g, LeakyReluSlope(input(0), at.c)));
      break;
    case Op::kClamp:
      if (wants(0)) accumulate(0, Mul(g, ClampMask(input(0), at.c, at.c2)));
      break;
    case Op::kConcat: {
      std::size_t offset = 0;
      for (std::size_t k = 0; k < ins.size(); ++k) {
        const std::size_t w = nodes_[ins[k]].shape.back();
        if (wants(k)) accumulate(k, Slice(g, offset, w));
        offset += w;
      }
      break;
    }
    case Op::kSlice:
      if (wants(0)) {
        accumulate(0, Pad(g, at.offset, nodes_[ins[0]].shape.back()));
      }
      break;
    case Op::kPad:
      if (wants(0)) {
        accumulate(0, Slice(g, at.offset, nodes_[ins[0]].shape.back()));
      }
      break;
    case Op::kSum:
      if (wants(0)) accumulate(0, Broadcast(g, nodes_[ins[0]].shape));
      break;
    case Op::kMean:
      if (wants(0)) {
        const Shape& s = nodes_[ins[0]].shape;
        accumulate(0, Scale(Broadcast(g, s),
                            1.0 / static_cast<double>(ShapeSize(s))));
      }
      break;
    case Op::kBroadcast:
      if (wants(0)) accumulate(0, Reshape(Sum(g), nodes_[ins[0]].shape));
      break;
    case Op::kSumRows:
      if (wants(0)) accumulate(0, ExpandRows(g, nodes_[ins[0]].shape[0]));
      break;
    case Op::kExpandRows:
      if (wants(0)) accumulate(0, SumRows(g));
      break;
    case Op::kSumLast:
      if (wants(0)) accumulate(0, ExpandLast(g, nodes_[ins[0]].shape.back()));
      break;
    case Op::kExpandLast:
      if (wants(0)) accumulate(0, SumLast(g));
      break;
    case Op::kL2Norm:
      // dz/da = a / z, taken as 0 where z == 0.
      if (wants(0)) {
        const std::size_t w = nodes_[ins[0]].shape.back();
        accumulate(0, Mul(input(0), ExpandLast(SafeDiv(g, z), w)));
      }
      break;
    case Op::kReshape:
      if (wants(0)) accumulate(0, Reshape(g, nodes_[ins[0]].shape));
      break;
  }
}

namespace {

Var Unary(Op op, Var a, OpAttrs attrs = {}) {
  const Var in[] = {a};
  return a.tape()->Apply(op, in, std::move(attrs));
}

Var Binary(Op op, Var a, Var b) {
  if (a.tape() != b.tape()) throw Error("operands live on different tapes");
  const Var in[] = {a, b};
  return a.tape()->Apply(op, in);
}

}  // namespace

Var Add(Var a, Var b) { return Binary(Op::kAdd, a, b); }
Var Sub(Var a, Var b) { return Binary(Op::kSub, a, b); }
Var Mul(Var a, Var b) { return Binary(Op::kMul, a, b); }
Var Div(Var a, Var b) { return Binary(Op::kDiv, a, b); }
Var SafeDiv(Var a, Var b) { return Binary(Op::kSafeDiv, a, b); }
Var MatMul(Var a, Var b) { return Binary(Op::kMatMul, a, b); }

Var Scale(Var a, double c) { return Unary(Op::kScale, a, {.c = c}); }
Var AddScalar(Var a, double c) { return Unary(Op::kAddScalar, a, {.c = c}); }
Var Transpose(Var a) { return Unary(Op::kTranspose, a); }
Var Sigmoid(Var a) { return Unary(Op::kSigmoid, a); }
Var Log(Var a) { return Unary(Op::kLog, a); }
Var Square(Var a) { return Unary(Op::kSquare, a); }
Var LeakyRelu(Var a, double slope) {
  return Unary(Op::kLeakyRelu, a, {.c = slope});
}
Var LeakyReluSlope(Var a, double slope) {
  return Unary(Op::kLeakyReluSlope, a, {.c = slope});
}
Var Clamp(Var a, double lo, double hi) {
  return Unary(Op::kClamp, a, {.c = lo, .c2 = hi});
}
Var ClampMask(Var a, double lo, double hi) {
  return Unary(Op::kClampMask, a, {.c = lo, .c2 = hi});
}

Var Concat(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat: needs at least one operand");
  for (Var p : parts) {
    if (p.tape() != parts.front().tape()) {
      throw Error("operands live on different tapes");
    }
  }
  return parts.front().tape()->Apply(Op::kConcat, parts);
}

Var Concat(std::initializer_list<Var> parts) {
  return Concat(std::span<const Var>(parts.begin(), parts.size()));
}

Var Slice(Var a, std::size_t offset, std::size_t width) {
  return Unary(Op::kSlice, a, {.offset = offset, .width = width});
}
Var Pad(Var a, std::size_t offset, std::size_t width) {
  return Unary(Op::kPad, a, {.offset = offset, .width = width});
}
Var Sum(Var a) { return Unary(Op::kSum, a); }
Var Mean(Var a) { return Unary(Op::kMean, a); }
Var Broadcast(Var scalar, Shape shape) {
  return Unary(Op::kBroadcast, scalar, {.shape = std::move(shape)});
}
Var SumRows(Var a) { return Unary(Op::kSumRows, a); }
Var ExpandRows(Var a, std::size_t rows) {
  return Unary(Op::kExpandRows, a, {.width = rows});
}
Var SumLast(Var a) { return Unary(Op::kSumLast, a); }
Var ExpandLast(Var a, std::size_t width) {
  return Unary(Op::kExpandLast, a, {.width = width});
}
Var L2Norm(Var a) { return Unary(Op::kL2Norm, a); }
Var Reshape(Var a, Shape shape) {
  return Unary(Op::kReshape, a, {.shape = std::move(shape)});
}

}  // namespace mlgan
