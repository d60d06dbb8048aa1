#include "sweep/field_expr.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <utility>

namespace sweep {

ParseError::ParseError(const std::string& message, std::size_t offset)
    : std::runtime_error(message + " (offset " + std::to_string(offset) + ")"),
      offset_(offset) {}

EvalError::EvalError(const std::string& message, std::string subexpr)
    : std::runtime_error(message + " in '" + subexpr + "'"),
      subexpr_(std::move(subexpr)) {}

namespace {

enum class Op {
  constant,
  time_var,
  coord,
  add,
  sub,
  mul,
  div,
  pow,
  neg,
  sin,
  cos,
  exp,
  log,
  sqrt,
  abs,
  min,
  max,
};

const char* fn_name(Op op) {
  switch (op) {
    case Op::sin: return "sin";
    case Op::cos: return "cos";
    case Op::exp: return "exp";
    case Op::log: return "log";
    case Op::sqrt: return "sqrt";
    case Op::abs: return "abs";
    case Op::min: return "min";
    case Op::max: return "max";
    default: return "?";
  }
}

}  // namespace

struct FieldExpr::Node {
  Op op = Op::constant;
  double constant = 0.0;      // Op::constant, and the folded exponent of pow
  int coord_index = 0;        // Op::coord, 1-based
  bool integral_exponent = false;
  long long int_exponent = 0;
  std::shared_ptr<const Node> lhs, rhs;
  std::size_t src_begin = 0, src_end = 0;  // byte range in the source text
};

namespace {

using NodePtr = std::shared_ptr<const FieldExpr::Node>;
using Node = FieldExpr::Node;

// ---------------------------------------------------------------------------
// Parser: expr := term (('+'|'-') term)*
//         term := unary (('*'|'/') unary)*
//         unary := '-' unary | power
//         power := primary ('^' unary)?        right-associative
//         primary := number | 't' | 'xK' | fn '(' args ')' | '(' expr ')'
// ---------------------------------------------------------------------------

class Parser {
 public:
  Parser(std::string_view src, int dim) : src_(src), dim_(dim) {}

  NodePtr run() {
    skip_ws();
    if (pos_ >= src_.size())
      throw ParseError("empty formula", 0);
    NodePtr e = parse_expr();
    skip_ws();
    if (pos_ != src_.size())
      throw ParseError("unexpected trailing input", pos_);
    return e;
  }

 private:
  std::string_view src_;
  int dim_;
  std::size_t pos_ = 0;

  void skip_ws() {
    while (pos_ < src_.size() &&
           std::isspace(static_cast<unsigned char>(src_[pos_])))
      ++pos_;
  }

  bool peek_char(char c) {
    skip_ws();
    return pos_ < src_.size() && src_[pos_] == c;
  }

  bool consume_char(char c) {
    if (peek_char(c)) {
      ++pos_;
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& msg, std::size_t at) {
    throw ParseError(msg, at);
  }

  NodePtr make(Op op, NodePtr lhs, NodePtr rhs, std::size_t b, std::size_t e) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->lhs = std::move(lhs);
    n->rhs = std::move(rhs);
    n->src_begin = b;
    n->src_end = e;
    return n;
  }

  NodePtr parse_expr() {
    std::size_t begin = pos_;
    NodePtr lhs = parse_term();
    for (;;) {
      skip_ws();
      if (consume_char('+'))
        lhs = make(Op::add, lhs, parse_term(), begin, pos_);
      else if (pos_ < src_.size() && src_[pos_] == '-') {
        ++pos_;
        lhs = make(Op::sub, lhs, parse_term(), begin, pos_);
      } else
        return lhs;
    }
  }

  NodePtr parse_term() {
    std::size_t begin = pos_;
    NodePtr lhs = parse_unary();
    for (;;) {
      skip_ws();
      if (consume_char('*'))
        lhs = make(Op::mul, lhs, parse_unary(), begin, pos_);
      else if (consume_char('/'))
        lhs = make(Op::div, lhs, parse_unary(), begin, pos_);
      else
        return lhs;
    }
  }

  NodePtr parse_unary() {
    skip_ws();
    std::size_t begin = pos_;
    if (consume_char('-'))
      return make(Op::neg, parse_unary(), nullptr, begin, pos_);
    return parse_power();
  }

  NodePtr parse_power() {
    std::size_t begin = pos_;
    NodePtr base = parse_primary();
    skip_ws();
    if (!consume_char('^')) return base;
    NodePtr exponent = parse_unary();  // right-associative, allows -2 etc.
    double folded = 0.0;
    if (!fold_constant(exponent, folded))
      fail("exponent must be a constant expression", exponent->src_begin);
    auto n = std::make_shared<Node>();
    n->op = Op::pow;
    n->lhs = base;
    n->rhs = exponent;
    n->constant = folded;
    n->integral_exponent =
        std::nearbyint(folded) == folded && std::abs(folded) < 1e15;
    n->int_exponent =
        n->integral_exponent ? static_cast<long long>(folded) : 0;
    n->src_begin = begin;
    n->src_end = pos_;
    return n;
  }

  static bool fold_constant(const NodePtr& n, double& out) {
    switch (n->op) {
      case Op::constant:
        out = n->constant;
        return true;
      case Op::neg: {
        double v;
        if (!fold_constant(n->lhs, v)) return false;
        out = -v;
        return true;
      }
      case Op::add:
      case Op::sub:
      case Op::mul:
      case Op::div: {
        double a, b;
        if (!fold_constant(n->lhs, a) || !fold_constant(n->rhs, b))
          return false;
        out = n->op == Op::add   ? a + b
              : n->op == Op::sub ? a - b
              : n->op == Op::mul ? a * b
                                 : a / b;
        return true;
      }
      case Op::pow: {
        double a;
        if (!fold_constant(n->lhs, a)) return false;
        out = std::pow(a, n->constant);
        return true;
      }
      default:
        return false;
    }
  }

  NodePtr parse_primary() {
    skip_ws();
    if (pos_ >= src_.size()) fail("unexpected end of formula", pos_);
    std::size_t begin = pos_;
    const char c = src_[pos_];

    if (c == '(') {
      ++pos_;
      NodePtr inner = parse_expr();
      if (!consume_char(')')) fail("expected ')'", pos_);
      // keep the parenthesized range for error reporting
      auto n = std::make_shared<Node>(*inner);
      n->src_begin = begin;
      n->src_end = pos_;
      return n;
    }

    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.')
      return parse_number();

    if (std::isalpha(static_cast<unsigned char>(c))) return parse_ident();

    fail(std::string("unexpected character '") + c + "'", pos_);
  }

  NodePtr parse_number() {
    std::size_t begin = pos_;
    double value = 0.0;
    const char* first = src_.data() + pos_;
    const char* last = src_.data() + src_.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{}) fail("malformed number", pos_);
    pos_ = static_cast<std::size_t>(ptr - src_.data());
    auto n = std::make_shared<Node>();
    n->op = Op::constant;
    n->constant = value;
    n->src_begin = begin;
    n->src_end = pos_;
    return n;
  }

  NodePtr parse_ident() {
    std::size_t begin = pos_;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
            src_[pos_] == '_'))
      ++pos_;
    const std::string_view name = src_.substr(begin, pos_ - begin);

    if (name == "t") {
      auto n = std::make_shared<Node>();
      n->op = Op::time_var;
      n->src_begin = begin;
      n->src_end = pos_;
      return n;
    }

    if (name.size() >= 2 && name[0] == 'x' &&
        std::all_of(name.begin() + 1, name.end(), [](char ch) {
          return std::isdigit(static_cast<unsigned char>(ch));
        })) {
      int index = 0;
      std::from_chars(name.data() + 1, name.data() + name.size(), index);
      if (index < 1 || index > dim_)
        fail("variable index exceeds dim", begin);
      auto n = std::make_shared<Node>();
      n->op = Op::coord;
      n->coord_index = index;
      n->src_begin = begin;
      n->src_end = pos_;
      return n;
    }

    Op fn;
    if (name == "sin") fn = Op::sin;
    else if (name == "cos") fn = Op::cos;
    else if (name == "exp") fn = Op::exp;
    else if (name == "log") fn = Op::log;
    else if (name == "sqrt") fn = Op::sqrt;
    else if (name == "abs") fn = Op::abs;
    else if (name == "min") fn = Op::min;
    else if (name == "max") fn = Op::max;
    else fail("unknown identifier '" + std::string(name) + "'", begin);

    if (!consume_char('(')) fail("expected '(' after function name", pos_);
    NodePtr a = parse_expr();
    NodePtr b;
    if (fn == Op::min || fn == Op::max) {
      if (!consume_char(',')) fail("expected ',' in min/max", pos_);
      b = parse_expr();
    }
    if (!consume_char(')')) fail("expected ')'", pos_);
    auto n = make(fn, a, b, begin, pos_);
    return n;
  }
};

// ---------------------------------------------------------------------------
// Forward-mode evaluation. One tangent per independent variable (t, x1..xn).
// ---------------------------------------------------------------------------

// ---------------------------------------------------------------------------
// Tape evaluation. The ast is flattened once into a post-order instruction
// list; evaluation fills a thread-local scratch matrix (value, dt, dx per
// slot) so a jet costs no allocations.
// ---------------------------------------------------------------------------

struct Instr {
  Op op = Op::constant;
  int a = -1, b = -1;
  double constant = 0.0;
  bool integral_exponent = false;
  long long int_exponent = 0;
  int coord_index = 0;
  std::size_t src_begin = 0, src_end = 0;
};

std::string instr_text(const Instr& in, const std::string& source) {
  if (in.src_end > in.src_begin && in.src_end <= source.size())
    return source.substr(in.src_begin, in.src_end - in.src_begin);
  return source;
}

int flatten(const Node& n, std::vector<Instr>& tape) {
  Instr in;
  in.op = n.op;
  in.constant = n.constant;
  in.integral_exponent = n.integral_exponent;
  in.int_exponent = n.int_exponent;
  in.coord_index = n.coord_index;
  in.src_begin = n.src_begin;
  in.src_end = n.src_end;
  // pow exponents are folded constants; only the base is evaluated
  if (n.lhs) in.a = flatten(*n.lhs, tape);
  if (n.rhs && n.op != Op::pow) in.b = flatten(*n.rhs, tape);
  tape.push_back(in);
  return static_cast<int>(tape.size()) - 1;
}

struct Scratch {
  std::vector<double> val;
  std::vector<double> dt;
  std::vector<double> dx;  // tape size x dim, row-major
};

thread_local Scratch tls_scratch;

}  // namespace

struct FieldExpr::Tape {
  std::vector<Instr> instrs;
};

namespace {

FieldJet eval_tape(const std::vector<Instr>& tape, int dim, double t,
                   std::span<const double> x, const std::string& source) {
  Scratch& s = tls_scratch;
  const std::size_t n = tape.size();
  const std::size_t d = static_cast<std::size_t>(dim);
  if (s.val.size() < n) {
    s.val.resize(n);
    s.dt.resize(n);
  }
  if (s.dx.size() < n * d) s.dx.resize(n * d);
  bool nonsmooth = false;

  auto dx_row = [&](std::size_t i) { return s.dx.data() + i * d; };
  auto zero_row = [&](std::size_t i) {
    double* row = dx_row(i);
    for (std::size_t k = 0; k < d; ++k) row[k] = 0.0;
  };
  auto copy_slot = [&](std::size_t dst, int from) {
    const std::size_t src_i = static_cast<std::size_t>(from);
    s.val[dst] = s.val[src_i];
    s.dt[dst] = s.dt[src_i];
    const double* src_row = dx_row(src_i);
    double* row = dx_row(dst);
    for (std::size_t k = 0; k < d; ++k) row[k] = src_row[k];
  };

  for (std::size_t i = 0; i < n; ++i) {
    const Instr& in = tape[i];
    switch (in.op) {
      case Op::constant:
        s.val[i] = in.constant;
        s.dt[i] = 0.0;
        zero_row(i);
        break;
      case Op::time_var:
        s.val[i] = t;
        s.dt[i] = 1.0;
        zero_row(i);
        break;
      case Op::coord: {
        s.val[i] = x[static_cast<std::size_t>(in.coord_index - 1)];
        s.dt[i] = 0.0;
        zero_row(i);
        dx_row(i)[in.coord_index - 1] = 1.0;
        break;
      }
      case Op::add:
      case Op::sub: {
        const std::size_t a = static_cast<std::size_t>(in.a);
        const std::size_t b = static_cast<std::size_t>(in.b);
        const double sign = in.op == Op::add ? 1.0 : -1.0;
        s.val[i] = s.val[a] + sign * s.val[b];
        s.dt[i] = s.dt[a] + sign * s.dt[b];
        const double* ra = dx_row(a);
        const double* rb = dx_row(b);
        double* row = dx_row(i);
        for (std::size_t k = 0; k < d; ++k) row[k] = ra[k] + sign * rb[k];
        break;
      }
      case Op::mul: {
        const std::size_t a = static_cast<std::size_t>(in.a);
        const std::size_t b = static_cast<std::size_t>(in.b);
        const double va = s.val[a], vb = s.val[b];
        s.val[i] = va * vb;
        s.dt[i] = s.dt[a] * vb + va * s.dt[b];
        const double* ra = dx_row(a);
        const double* rb = dx_row(b);
        double* row = dx_row(i);
        for (std::size_t k = 0; k < d; ++k) row[k] = ra[k] * vb + va * rb[k];
        break;
      }
      case Op::div: {
        const std::size_t a = static_cast<std::size_t>(in.a);
        const std::size_t b = static_cast<std::size_t>(in.b);
        if (s.val[b] == 0.0)
          throw EvalError("division by zero", instr_text(in, source));
        const double inv = 1.0 / s.val[b];
        const double q = s.val[a] * inv;
        s.val[i] = q;
        s.dt[i] = (s.dt[a] - q * s.dt[b]) * inv;
        const double* ra = dx_row(a);
        const double* rb = dx_row(b);
        double* row = dx_row(i);
        for (std::size_t k = 0; k < d; ++k) row[k] = (ra[k] - q * rb[k]) * inv;
        break;
      }
      case Op::neg: {
        copy_slot(i, in.a);
        s.val[i] = -s.val[i];
        s.dt[i] = -s.dt[i];
        double* row = dx_row(i);
        for (std::size_t k = 0; k < d; ++k) row[k] = -row[k];
        break;
      }
      case Op::pow: {
        const std::size_t a = static_cast<std::size_t>(in.a);
        const double base = s.val[a];
        double value = 0.0, dfdu = 0.0;
        if (in.integral_exponent) {
          const long long kexp = in.int_exponent;
          if (kexp < 0 && base == 0.0)
            throw EvalError("zero base with negative exponent",
                            instr_text(in, source));
          value = std::pow(base, static_cast<double>(kexp));
          dfdu = (kexp == 0) ? 0.0
                             : static_cast<double>(kexp) *
                                   std::pow(base, static_cast<double>(kexp - 1));
        } else {
          if (base <= 0.0)
            throw EvalError("nonpositive base with non-integer exponent",
                            instr_text(in, source));
          value = std::pow(base, in.constant);
          dfdu = in.constant * std::pow(base, in.constant - 1.0);
        }
        s.val[i] = value;
        s.dt[i] = dfdu * s.dt[a];
        const double* ra = dx_row(a);
        double* row = dx_row(i);
        for (std::size_t k = 0; k < d; ++k) row[k] = dfdu * ra[k];
        break;
      }
      case Op::sin:
      case Op::cos:
      case Op::exp:
      case Op::log:
      case Op::sqrt:
      case Op::abs: {
        const std::size_t a = static_cast<std::size_t>(in.a);
        const double u = s.val[a];
        double value = 0.0, dfdu = 0.0;
        switch (in.op) {
          case Op::sin: value = std::sin(u); dfdu = std::cos(u); break;
          case Op::cos: value = std::cos(u); dfdu = -std::sin(u); break;
          case Op::exp: value = std::exp(u); dfdu = value; break;
          case Op::log:
            if (u <= 0.0)
              throw EvalError("log of nonpositive value",
                              instr_text(in, source));
            value = std::log(u);
            dfdu = 1.0 / u;
            break;
          case Op::sqrt:
            if (u < 0.0)
              throw EvalError("sqrt of negative value",
                              instr_text(in, source));
            if (u == 0.0)
              throw EvalError("sqrt derivative undefined at zero",
                              instr_text(in, source));
            value = std::sqrt(u);
            dfdu = 0.5 / value;
            break;
          case Op::abs:
            if (u == 0.0) {
              // one-sided derivative from the argument's own direction
              nonsmooth = true;
              value = 0.0;
              dfdu = 1.0;
            } else {
              value = std::abs(u);
              dfdu = u > 0.0 ? 1.0 : -1.0;
            }
            break;
          default: break;
        }
        s.val[i] = value;
        s.dt[i] = dfdu * s.dt[a];
        const double* ra = dx_row(a);
        double* row = dx_row(i);
        for (std::size_t k = 0; k < d; ++k) row[k] = dfdu * ra[k];
        break;
      }
      case Op::min:
      case Op::max: {
        const std::size_t a = static_cast<std::size_t>(in.a);
        const std::size_t b = static_cast<std::size_t>(in.b);
        if (s.val[a] == s.val[b]) {
          nonsmooth = true;  // tie: keep the first argument's derivative
          copy_slot(i, in.a);
        } else {
          const bool take_a = (in.op == Op::min) ? (s.val[a] < s.val[b])
                                                 : (s.val[a] > s.val[b]);
          copy_slot(i, take_a ? in.a : in.b);
        }
        break;
      }
    }
  }

  FieldJet out;
  out.value = s.val[n - 1];
  out.dt = s.dt[n - 1];
  out.dx.assign(dx_row(n - 1), dx_row(n - 1) + d);
  out.nonsmooth = nonsmooth;
  return out;
}

// ---------------------------------------------------------------------------
// Printing and structural comparison
// ---------------------------------------------------------------------------

void print_node(const Node& n, std::string& out) {
  char buf[40];
  switch (n.op) {
    case Op::constant:
      std::snprintf(buf, sizeof buf, "%.17g", n.constant);
      out += buf;
      return;
    case Op::time_var:
      out += 't';
      return;
    case Op::coord:
      out += 'x';
      out += std::to_string(n.coord_index);
      return;
    case Op::add:
    case Op::sub:
    case Op::mul:
    case Op::div:
    case Op::pow: {
      const char* sym = n.op == Op::add   ? " + "
                        : n.op == Op::sub ? " - "
                        : n.op == Op::mul ? " * "
                        : n.op == Op::div ? " / "
                                          : " ^ ";
      out += '(';
      print_node(*n.lhs, out);
      out += sym;
      print_node(*n.rhs, out);
      out += ')';
      return;
    }
    case Op::neg:
      out += "(-";
      print_node(*n.lhs, out);
      out += ')';
      return;
    default: {
      out += fn_name(n.op);
      out += '(';
      print_node(*n.lhs, out);
      if (n.rhs) {
        out += ", ";
        print_node(*n.rhs, out);
      }
      out += ')';
      return;
    }
  }
}

bool nodes_equal(const Node& a, const Node& b) {
  if (a.op != b.op) return false;
  switch (a.op) {
    case Op::constant:
      return a.constant == b.constant;
    case Op::time_var:
      return true;
    case Op::coord:
      return a.coord_index == b.coord_index;
    default:
      break;
  }
  if (a.op == Op::pow && a.constant != b.constant) return false;
  if (static_cast<bool>(a.lhs) != static_cast<bool>(b.lhs)) return false;
  if (static_cast<bool>(a.rhs) != static_cast<bool>(b.rhs)) return false;
  if (a.lhs && !nodes_equal(*a.lhs, *b.lhs)) return false;
  if (a.rhs && !nodes_equal(*a.rhs, *b.rhs)) return false;
  return true;
}

bool node_uses(const Node& n, bool time) {
  if (time && n.op == Op::time_var) return true;
  if (!time && n.op == Op::coord) return true;
  if (n.lhs && node_uses(*n.lhs, time)) return true;
  if (n.rhs && node_uses(*n.rhs, time)) return true;
  return false;
}

}  // namespace

FieldExpr parse_field(std::string_view source, int dim) {
  if (dim < 1) throw ParseError("dim must be positive", 0);
  if (source.empty()) throw ParseError("empty formula", 0);
  Parser p(source, dim);
  FieldExpr e;
  e.root_ = p.run();
  e.source_ = std::string(source);
  e.dim_ = dim;
  auto tape = std::make_shared<FieldExpr::Tape>();
  flatten(*e.root_, tape->instrs);
  e.tape_ = std::move(tape);
  return e;
}

bool FieldExpr::uses_time() const noexcept {
  return root_ && node_uses(*root_, true);
}

bool FieldExpr::uses_coords() const noexcept {
  return root_ && node_uses(*root_, false);
}

FieldJet FieldExpr::jet(double t, std::span<const double> x) const {
  if (!root_ || !tape_) throw EvalError("empty expression", "");
  if (static_cast<int>(x.size()) != dim_)
    throw EvalError("point dimension mismatch", source_);
  return eval_tape(tape_->instrs, dim_, t, x, source_);
}

double FieldExpr::value(double t, std::span<const double> x) const {
  return jet(t, x).value;
}

std::string FieldExpr::print() const {
  std::string out;
  if (root_) print_node(*root_, out);
  return out;
}

bool FieldExpr::same_ast(const FieldExpr& other) const {
  if (!root_ || !other.root_) return root_ == other.root_;
  return nodes_equal(*root_, *other.root_);
}

FieldJet eval_jet(const FieldExpr& expr, double t, std::span<const double> x) {
  return expr.jet(t, x);
}

}  // namespace sweep
