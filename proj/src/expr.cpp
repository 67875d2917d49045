#include "riddle/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>

namespace riddle::expr {

bool is_unary(NodeKind k) {
    switch (k) {
    case NodeKind::Sin: case NodeKind::Cos: case NodeKind::Exp:
    case NodeKind::Log: case NodeKind::Abs: case NodeKind::Neg:
        return true;
    default:
        return false;
    }
}

bool is_binary(NodeKind k) {
    switch (k) {
    case NodeKind::Add: case NodeKind::Sub: case NodeKind::Mul:
    case NodeKind::Div: case NodeKind::Pow:
        return true;
    default:
        return false;
    }
}

namespace {

using NodePtr = std::unique_ptr<Node>;

NodePtr make_const(double v) {
    auto n = std::make_unique<Node>();
    n->kind = NodeKind::Constant;
    n->value = v;
    return n;
}

NodePtr make_leaf(NodeKind k) {
    auto n = std::make_unique<Node>();
    n->kind = k;
    return n;
}

NodePtr make_unary(NodeKind k, NodePtr a) {
    auto n = std::make_unique<Node>();
    n->kind = k;
    n->a = std::move(a);
    return n;
}

NodePtr make_binary(NodeKind k, NodePtr a, NodePtr b) {
    auto n = std::make_unique<Node>();
    n->kind = k;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

NodePtr clone_node(const Node& n) {
    auto c = std::make_unique<Node>();
    c->kind = n.kind;
    c->value = n.value;
    if (n.a) c->a = clone_node(*n.a);
    if (n.b) c->b = clone_node(*n.b);
    return c;
}

bool node_depends_on_x(const Node& n) {
    if (n.kind == NodeKind::VarX) return true;
    if (n.a && node_depends_on_x(*n.a)) return true;
    if (n.b && node_depends_on_x(*n.b)) return true;
    return false;
}

bool node_contains_abs(const Node& n) {
    if (n.kind == NodeKind::Abs) return true;
    if (n.a && node_contains_abs(*n.a)) return true;
    if (n.b && node_contains_abs(*n.b)) return true;
    return false;
}

class Parser {
public:
    explicit Parser(std::string_view text) : text_(text) {}

    NodePtr run() {
        skip_ws();
        if (pos_ >= text_.size())
            throw SyntaxError(pos_, "empty formula");
        NodePtr e = additive();
        skip_ws();
        if (pos_ < text_.size())
            throw SyntaxError(pos_, "unexpected trailing input");
        return e;
    }

private:
    std::string_view text_;
    std::size_t pos_ = 0;

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
    }

    char peek() {
        skip_ws();
        return pos_ < text_.size() ? text_[pos_] : '\0';
    }

    bool accept(char c) {
        if (peek() == c) { ++pos_; return true; }
        return false;
    }

    NodePtr additive() {
        NodePtr lhs = multiplicative();
        for (;;) {
            if (accept('+'))
                lhs = make_binary(NodeKind::Add, std::move(lhs), multiplicative());
            else if (accept('-'))
                lhs = make_binary(NodeKind::Sub, std::move(lhs), multiplicative());
            else
                return lhs;
        }
    }

    NodePtr multiplicative() {
        NodePtr lhs = unary();
        for (;;) {
            if (accept('*'))
                lhs = make_binary(NodeKind::Mul, std::move(lhs), unary());
            else if (accept('/'))
                lhs = make_binary(NodeKind::Div, std::move(lhs), unary());
            else
                return lhs;
        }
    }

    NodePtr unary() {
        if (accept('+')) return unary();
        if (accept('-')) {
            NodePtr inner = unary();
            // fold a negated literal so that "-3" round-trips structurally
            if (inner->kind == NodeKind::Constant)
                return make_const(-inner->value);
            return make_unary(NodeKind::Neg, std::move(inner));
        }
        return power();
    }

    NodePtr power() {
        NodePtr base = primary();
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == '^') {
            std::size_t caret = pos_;
            ++pos_;
            NodePtr exponent = unary(); // right-associative, allows a^-2
            if (node_depends_on_x(*exponent))
                throw SyntaxError(caret, "exponent of ^ must be constant");
            return make_binary(NodeKind::Pow, std::move(base), std::move(exponent));
        }
        return base;
    }

    NodePtr primary() {
        skip_ws();
        if (pos_ >= text_.size())
            throw SyntaxError(pos_, "unexpected end of formula");
        char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            NodePtr e = additive();
            if (!accept(')'))
                throw SyntaxError(pos_, "expected ')'");
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.')
            return number();
        if (std::isalpha(static_cast<unsigned char>(c)))
            return identifier();
        throw SyntaxError(pos_, std::string("unexpected character '") + c + "'");
    }

    NodePtr number() {
        const char* begin = text_.data() + pos_;
        const char* end = text_.data() + text_.size();
        double v = 0.0;
        auto res = std::from_chars(begin, end, v);
        if (res.ec != std::errc())
            throw SyntaxError(pos_, "malformed number");
        pos_ = static_cast<std::size_t>(res.ptr - text_.data());
        return make_const(v);
    }

    NodePtr identifier() {
        std::size_t start = pos_;
        while (pos_ < text_.size() &&
               std::isalpha(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
        std::string name(text_.substr(start, pos_ - start));
        if (name == "x") return make_leaf(NodeKind::VarX);
        if (name == "pi") return make_leaf(NodeKind::Pi);

        NodeKind fn;
        if (name == "sin") fn = NodeKind::Sin;
        else if (name == "cos") fn = NodeKind::Cos;
        else if (name == "exp") fn = NodeKind::Exp;
        else if (name == "log") fn = NodeKind::Log;
        else if (name == "abs") fn = NodeKind::Abs;
        else throw UnknownIdentifier(start, name);

        if (!accept('('))
            throw SyntaxError(pos_, "expected '(' after function name");
        NodePtr arg = additive();
        if (!accept(')'))
            throw SyntaxError(pos_, "expected ')'");
        return make_unary(fn, std::move(arg));
    }
};

double eval_node(const Node& n, double x) {
    switch (n.kind) {
    case NodeKind::Constant: return n.value;
    case NodeKind::VarX: return x;
    case NodeKind::Pi: return M_PI;
    case NodeKind::Sin: return std::sin(eval_node(*n.a, x));
    case NodeKind::Cos: return std::cos(eval_node(*n.a, x));
    case NodeKind::Exp: {
        double v = std::exp(eval_node(*n.a, x));
        if (!std::isfinite(v)) throw DomainError("exp overflow");
        return v;
    }
    case NodeKind::Log: {
        double a = eval_node(*n.a, x);
        if (!(a > 0.0)) throw DomainError("log of non-positive argument");
        return std::log(a);
    }
    case NodeKind::Abs: return std::fabs(eval_node(*n.a, x));
    case NodeKind::Neg: return -eval_node(*n.a, x);
    case NodeKind::Add: return eval_node(*n.a, x) + eval_node(*n.b, x);
    case NodeKind::Sub: return eval_node(*n.a, x) - eval_node(*n.b, x);
    case NodeKind::Mul: return eval_node(*n.a, x) * eval_node(*n.b, x);
    case NodeKind::Div: {
        double d = eval_node(*n.b, x);
        if (d == 0.0) throw DomainError("division by zero");
        return eval_node(*n.a, x) / d;
    }
    case NodeKind::Pow: {
        double b = eval_node(*n.a, x);
        double e = eval_node(*n.b, x);
        double v = std::pow(b, e);
        if (!std::isfinite(v))
            throw DomainError("power with non-finite result");
        return v;
    }
    }
    throw DomainError("corrupt expression node");
}

NodePtr derive_node(const Node& n) {
    switch (n.kind) {
    case NodeKind::Constant:
    case NodeKind::Pi:
        return make_const(0.0);
    case NodeKind::VarX:
        return make_const(1.0);
    case NodeKind::Sin:
        return make_binary(NodeKind::Mul,
                           make_unary(NodeKind::Cos, clone_node(*n.a)),
                           derive_node(*n.a));
    case NodeKind::Cos:
        return make_unary(NodeKind::Neg,
                          make_binary(NodeKind::Mul,
                                      make_unary(NodeKind::Sin, clone_node(*n.a)),
                                      derive_node(*n.a)));
    case NodeKind::Exp:
        return make_binary(NodeKind::Mul,
                           make_unary(NodeKind::Exp, clone_node(*n.a)),
                           derive_node(*n.a));
    case NodeKind::Log:
        return make_binary(NodeKind::Div, derive_node(*n.a), clone_node(*n.a));
    case NodeKind::Abs:
        throw Unsupported("derivative of abs is not defined everywhere");
    case NodeKind::Neg:
        return make_unary(NodeKind::Neg, derive_node(*n.a));
    case NodeKind::Add:
        return make_binary(NodeKind::Add, derive_node(*n.a), derive_node(*n.b));
    case NodeKind::Sub:
        return make_binary(NodeKind::Sub, derive_node(*n.a), derive_node(*n.b));
    case NodeKind::Mul:
        return make_binary(NodeKind::Add,
                           make_binary(NodeKind::Mul, derive_node(*n.a), clone_node(*n.b)),
                           make_binary(NodeKind::Mul, clone_node(*n.a), derive_node(*n.b)));
    case NodeKind::Div:
        // (u/v)' = (u'v - uv') / v^2
        return make_binary(
            NodeKind::Div,
            make_binary(NodeKind::Sub,
                        make_binary(NodeKind::Mul, derive_node(*n.a), clone_node(*n.b)),
                        make_binary(NodeKind::Mul, clone_node(*n.a), derive_node(*n.b))),
            make_binary(NodeKind::Pow, clone_node(*n.b), make_const(2.0)));
    case NodeKind::Pow: {
        // exponent is constant by grammar: (u^c)' = c u^(c-1) u'
        double c = eval_node(*n.b, 0.0);
        return make_binary(
            NodeKind::Mul,
            make_binary(NodeKind::Mul, make_const(c),
                        make_binary(NodeKind::Pow, clone_node(*n.a), make_const(c - 1.0))),
            derive_node(*n.a));
    }
    }
    throw Unsupported("corrupt expression node");
}

// precedence for the serializer; constants with a negative value print a
// leading '-' and must parenthesize like a unary minus
int effective_prec(const Node& n) {
    switch (n.kind) {
    case NodeKind::Add: case NodeKind::Sub: return 1;
    case NodeKind::Mul: case NodeKind::Div: return 2;
    case NodeKind::Neg: return 3;
    case NodeKind::Pow: return 4;
    case NodeKind::Constant:
        return std::signbit(n.value) ? 3 : 5;
    default: return 5;
    }
}

void serialize_node(const Node& n, std::string& out) {
    auto child = [&out](const Node& c, bool parens) {
        if (parens) out += '(';
        serialize_node(c, out);
        if (parens) out += ')';
    };
    switch (n.kind) {
    case NodeKind::Constant: {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", n.value);
        out += buf;
        return;
    }
    case NodeKind::VarX: out += 'x'; return;
    case NodeKind::Pi: out += "pi"; return;
    case NodeKind::Sin: out += "sin("; serialize_node(*n.a, out); out += ')'; return;
    case NodeKind::Cos: out += "cos("; serialize_node(*n.a, out); out += ')'; return;
    case NodeKind::Exp: out += "exp("; serialize_node(*n.a, out); out += ')'; return;
    case NodeKind::Log: out += "log("; serialize_node(*n.a, out); out += ')'; return;
    case NodeKind::Abs: out += "abs("; serialize_node(*n.a, out); out += ')'; return;
    case NodeKind::Neg:
        out += '-';
        child(*n.a, effective_prec(*n.a) <= 2);
        return;
    case NodeKind::Add:
        child(*n.a, effective_prec(*n.a) < 1);
        out += " + ";
        child(*n.b, effective_prec(*n.b) <= 1);
        return;
    case NodeKind::Sub:
        child(*n.a, effective_prec(*n.a) < 1);
        out += " - ";
        child(*n.b, effective_prec(*n.b) <= 1);
        return;
    case NodeKind::Mul:
        child(*n.a, effective_prec(*n.a) < 2);
        out += '*';
        child(*n.b, effective_prec(*n.b) <= 2);
        return;
    case NodeKind::Div:
        child(*n.a, effective_prec(*n.a) < 2);
        out += '/';
        child(*n.b, effective_prec(*n.b) <= 2);
        return;
    case NodeKind::Pow:
        child(*n.a, effective_prec(*n.a) <= 4);
        out += '^';
        child(*n.b, effective_prec(*n.b) <= 2);
        return;
    }
}

} // namespace

Expression Expression::parse(std::string_view text) {
    Parser p(text);
    Expression e;
    e.root_ = std::shared_ptr<const Node>(p.run().release());
    return e;
}

double Expression::evaluate(double x) const {
    double v = eval_node(*root_, x);
    if (!std::isfinite(v)) throw DomainError("non-finite result");
    return v;
}

Expression Expression::derivative() const {
    Expression e;
    e.root_ = std::shared_ptr<const Node>(derive_node(*root_).release());
    return e;
}

std::string Expression::serialize() const {
    std::string out;
    serialize_node(*root_, out);
    return out;
}

bool Expression::depends_on_x() const { return root_ && node_depends_on_x(*root_); }
bool Expression::contains_abs() const { return root_ && node_contains_abs(*root_); }

Compiled::Compiled(const Expression& e) {
    emit(e.root(), 0);
}

void Compiled::emit(const Node& n, int depth) {
    if (depth > 60)
        throw Unsupported("expression too deep to compile");
    // fold constant subtrees
    if (!node_depends_on_x(n)) {
        ops_.push_back({OpCode::PushConst, eval_node(n, 0.0), 0});
        return;
    }
    switch (n.kind) {
    case NodeKind::Constant:
    case NodeKind::Pi:
        ops_.push_back({OpCode::PushConst, eval_node(n, 0.0), 0});
        return;
    case NodeKind::VarX: ops_.push_back({OpCode::PushX, 0.0, 0}); return;
    case NodeKind::Sin: emit(*n.a, depth + 1); ops_.push_back({OpCode::Sin, 0.0, 0}); return;
    case NodeKind::Cos: emit(*n.a, depth + 1); ops_.push_back({OpCode::Cos, 0.0, 0}); return;
    case NodeKind::Exp: emit(*n.a, depth + 1); ops_.push_back({OpCode::Exp, 0.0, 0}); return;
    case NodeKind::Log: emit(*n.a, depth + 1); ops_.push_back({OpCode::Log, 0.0, 0}); return;
    case NodeKind::Abs: emit(*n.a, depth + 1); ops_.push_back({OpCode::Abs, 0.0, 0}); return;
    case NodeKind::Neg: emit(*n.a, depth + 1); ops_.push_back({OpCode::Neg, 0.0, 0}); return;
    case NodeKind::Add: emit(*n.a, depth + 1); emit(*n.b, depth + 1); ops_.push_back({OpCode::Add, 0.0, 0}); return;
    case NodeKind::Sub: emit(*n.a, depth + 1); emit(*n.b, depth + 1); ops_.push_back({OpCode::Sub, 0.0, 0}); return;
    case NodeKind::Mul: emit(*n.a, depth + 1); emit(*n.b, depth + 1); ops_.push_back({OpCode::Mul, 0.0, 0}); return;
    case NodeKind::Div: emit(*n.a, depth + 1); emit(*n.b, depth + 1); ops_.push_back({OpCode::Div, 0.0, 0}); return;
    case NodeKind::Pow: {
        emit(*n.a, depth + 1);
        double c = eval_node(*n.b, 0.0);
        double r = std::round(c);
        if (r == c && std::fabs(c) <= 64.0)
            ops_.push_back({OpCode::PowInt, 0.0, static_cast<int>(r)});
        else
            ops_.push_back({OpCode::PowConst, c, 0});
        return;
    }
    }
}

double Compiled::operator()(double x) const noexcept {
    double st[64];
    int sp = 0;
    for (const Op& op : ops_) {
        switch (op.code) {
        case OpCode::PushConst: st[sp++] = op.imm; break;
        case OpCode::PushX: st[sp++] = x; break;
        case OpCode::Sin: st[sp - 1] = std::sin(st[sp - 1]); break;
        case OpCode::Cos: st[sp - 1] = std::cos(st[sp - 1]); break;
        case OpCode::Exp: st[sp - 1] = std::exp(st[sp - 1]); break;
        case OpCode::Log: st[sp - 1] = std::log(st[sp - 1]); break;
        case OpCode::Abs: st[sp - 1] = std::fabs(st[sp - 1]); break;
        case OpCode::Neg: st[sp - 1] = -st[sp - 1]; break;
        case OpCode::Add: --sp; st[sp - 1] += st[sp]; break;
        case OpCode::Sub: --sp; st[sp - 1] -= st[sp]; break;
        case OpCode::Mul: --sp; st[sp - 1] *= st[sp]; break;
        case OpCode::Div: --sp; st[sp - 1] /= st[sp]; break;
        case OpCode::PowConst: st[sp - 1] = std::pow(st[sp - 1], op.imm); break;
        case OpCode::PowInt: {
            double b = st[sp - 1];
            int e = op.iexp;
            bool inv = e < 0;
            unsigned n = static_cast<unsigned>(inv ? -e : e);
            double acc = 1.0;
            while (n) {
                if (n & 1u) acc *= b;
                b *= b;
                n >>= 1u;
            }
            st[sp - 1] = inv ? 1.0 / acc : acc;
            break;
        }
        }
    }
    return st[0];
}

} // namespace riddle::expr
