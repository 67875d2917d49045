#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "riddle/errors.hpp"

namespace riddle::expr {

enum class NodeKind : std::uint8_t {
    Constant, VarX, Pi,
    Sin, Cos, Exp, Log, Abs, Neg,
    Add, Sub, Mul, Div, Pow,
};

bool is_unary(NodeKind k);
bool is_binary(NodeKind k);

struct Node {
    NodeKind kind;
    double value = 0.0; // Constant only
    std::unique_ptr<Node> a, b;
};

// Immutable closed-form observable of one real variable.  Grammar:
//   +,-,*,/,^ with standard precedence (^ tightest and right-associative,
//   then unary minus, then *,/ then +,-), functions sin cos exp log abs,
//   names x and pi.  Exponents of ^ are restricted to constants.
class Expression {
public:
    Expression() = default;

    static Expression parse(std::string_view text);

    // Checked recursive evaluation; throws DomainError on log of a
    // non-positive argument, division by zero, or a non-finite result.
    double evaluate(double x) const;

    // Symbolic derivative; throws Unsupported when the tree contains abs.
    Expression derivative() const;

    std::string serialize() const;

    bool depends_on_x() const;
    bool contains_abs() const;
    bool empty() const { return root_ == nullptr; }
    const Node& root() const { return *root_; }

private:
    std::shared_ptr<const Node> root_;
};

// Expression flattened to a postfix tape for tight loops.  Evaluation is
// pure IEEE arithmetic with no checks and no allocation; invalid inputs
// produce NaN/Inf rather than throwing.  Constant subtrees are folded and
// small integer exponents become repeated squaring.
class Compiled {
public:
    Compiled() = default;
    explicit Compiled(const Expression& e);

    double operator()(double x) const noexcept;
    bool empty() const { return ops_.empty(); }

private:
    enum class OpCode : std::uint8_t {
        PushConst, PushX,
        Sin, Cos, Exp, Log, Abs, Neg,
        Add, Sub, Mul, Div, PowConst, PowInt,
    };
    struct Op {
        OpCode code;
        double imm = 0.0;
        int iexp = 0;
    };
    std::vector<Op> ops_;

    void emit(const Node& n, int depth);
};

} // namespace riddle::expr
