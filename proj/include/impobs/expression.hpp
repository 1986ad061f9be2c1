#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

namespace impobs {

// Scalar expression over state variables x1..xn, compiled to a postfix
// program. Supports + - * / ^, unary minus, parentheses, named parameters and
// the functions sin cos tan exp log sqrt abs tanh atan sat min max.
class Expression {
public:
    static Expression parse(const std::string& source, const std::map<std::string, double>& params,
                            std::size_t num_vars);

    double eval(std::span<const double> x) const;
    const std::string& source() const noexcept { return source_; }
    // True when the expression has no variable references.
    bool is_constant() const noexcept;

    enum class Op : unsigned char {
        Const, Var, Add, Sub, Mul, Div, Pow, IntPow, Neg,
        Sin, Cos, Tan, Exp, Log, Sqrt, Abs, Tanh, Atan, Sat, Min, Max,
    };
    struct Instr {
        Op op;
        double value = 0.0;
        int index = 0;
    };

private:
    std::string source_;
    std::vector<Instr> program_;
    std::size_t max_stack_ = 0;
};

}  // namespace impobs
