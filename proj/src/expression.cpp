#include "impobs/expression.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>

#include "impobs/errors.hpp"

namespace impobs {

namespace {

using Op = Expression::Op;
using Instr = Expression::Instr;

struct FunctionInfo {
    const char* name;
    Op op;
    int arity;
};

constexpr std::array<FunctionInfo, 12> kFunctions{{
    {"sin", Op::Sin, 1},  {"cos", Op::Cos, 1},   {"tan", Op::Tan, 1},   {"exp", Op::Exp, 1},
    {"log", Op::Log, 1},  {"sqrt", Op::Sqrt, 1}, {"abs", Op::Abs, 1},   {"tanh", Op::Tanh, 1},
    {"atan", Op::Atan, 1}, {"sat", Op::Sat, 1},  {"min", Op::Min, 2},   {"max", Op::Max, 2},
}};

class Compiler {
public:
    Compiler(const std::string& src, const std::map<std::string, double>& params, std::size_t num_vars)
        : s_(src), params_(params), num_vars_(num_vars) {}

    std::vector<Instr> compile() {
        expr();
        skip_ws();
        if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
        if (out_.empty()) fail("empty expression");
        return std::move(out_);
    }

private:
    [[noreturn]] void fail(const std::string& msg) const {
        throw Error(ErrorKind::Config,
                    "expression \"" + s_ + "\": " + msg + " at offset " + std::to_string(pos_));
    }

    void skip_ws() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expr() {
        term();
        while (true) {
            if (accept('+')) {
                term();
                out_.push_back({Op::Add});
            } else if (accept('-')) {
                term();
                out_.push_back({Op::Sub});
            } else {
                return;
            }
        }
    }

    void term() {
        unary();
        while (true) {
            if (accept('*')) {
                unary();
                out_.push_back({Op::Mul});
            } else if (accept('/')) {
                unary();
                out_.push_back({Op::Div});
            } else {
                return;
            }
        }
    }

    void unary() {
        if (accept('-')) {
            unary();
            out_.push_back({Op::Neg});
        } else if (accept('+')) {
            unary();
        } else {
            power();
        }
    }

    void power() {
        primary();
        if (accept('^')) {
            const std::size_t before = out_.size();
            unary();
            // Small integer literal exponents become repeated multiplication.
            if (out_.size() == before + 1 && out_.back().op == Op::Const) {
                const double e = out_.back().value;
                if (e == std::floor(e) && std::abs(e) <= 64) {
                    out_.back() = {Op::IntPow, 0.0, static_cast<int>(e)};
                    return;
                }
            }
            out_.push_back({Op::Pow});
        }
    }

    void primary() {
        skip_ws();
        if (pos_ >= s_.size()) fail("unexpected end");
        const char c = s_[pos_];
        if (c == '(') {
            ++pos_;
            expr();
            if (!accept(')')) fail("expected ')'");
            return;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            double v = 0.0;
            auto [ptr, ec] = std::from_chars(s_.data() + pos_, s_.data() + s_.size(), v);
            if (ec != std::errc()) fail("bad number");
            pos_ = static_cast<std::size_t>(ptr - s_.data());
            out_.push_back({Op::Const, v});
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            const std::size_t start = pos_;
            while (pos_ < s_.size() &&
                   (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
                ++pos_;
            const std::string name = s_.substr(start, pos_ - start);
            skip_ws();
            if (pos_ < s_.size() && s_[pos_] == '(') {
                call(name);
                return;
            }
            if (auto it = params_.find(name); it != params_.end()) {
                out_.push_back({Op::Const, it->second});
                return;
            }
            if (name.size() > 1 && name[0] == 'x' &&
                std::all_of(name.begin() + 1, name.end(), [](char d) { return std::isdigit(static_cast<unsigned char>(d)); })) {
                const int idx = std::stoi(name.substr(1));
                if (idx < 1 || static_cast<std::size_t>(idx) > num_vars_) {
                    fail("variable " + name + " out of range x1..x" + std::to_string(num_vars_));
                }
                out_.push_back({Op::Var, 0.0, idx - 1});
                return;
            }
            if (name == "pi") {
                out_.push_back({Op::Const, 3.14159265358979323846});
                return;
            }
            fail("unknown identifier '" + name + "'");
        }
        fail("unexpected '" + std::string(1, c) + "'");
    }

    void call(const std::string& name) {
        const auto* fn = std::find_if(kFunctions.begin(), kFunctions.end(),
                                      [&](const FunctionInfo& f) { return name == f.name; });
        if (fn == kFunctions.end()) fail("unknown function '" + name + "'");
        accept('(');
        for (int a = 0; a < fn->arity; ++a) {
            if (a > 0 && !accept(',')) fail("expected ',' in call to " + name);
            expr();
        }
        if (!accept(')')) fail("expected ')' after arguments of " + name);
        out_.push_back({fn->op});
    }

    const std::string& s_;
    const std::map<std::string, double>& params_;
    std::size_t num_vars_;
    std::size_t pos_ = 0;
    std::vector<Instr> out_;
};

double int_pow(double x, int e) {
    if (e < 0) return 1.0 / int_pow(x, -e);
    double r = 1.0;
    while (e) {
        if (e & 1) r *= x;
        x *= x;
        e >>= 1;
    }
    return r;
}

int stack_effect(Op op) {
    switch (op) {
        case Op::Const:
        case Op::Var: return 1;
        case Op::Add:
        case Op::Sub:
        case Op::Mul:
        case Op::Div:
        case Op::Pow:
        case Op::Min:
        case Op::Max: return -1;
        default: return 0;
    }
}

}  // namespace

Expression Expression::parse(const std::string& source, const std::map<std::string, double>& params,
                             std::size_t num_vars) {
    Expression e;
    e.source_ = source;
    e.program_ = Compiler(source, params, num_vars).compile();
    long depth = 0;
    long max_depth = 0;
    for (const auto& in : e.program_) {
        depth += stack_effect(in.op);
        max_depth = std::max(max_depth, depth);
    }
    e.max_stack_ = static_cast<std::size_t>(max_depth);
    return e;
}

bool Expression::is_constant() const noexcept {
    return std::none_of(program_.begin(), program_.end(), [](const Instr& i) { return i.op == Op::Var; });
}

double Expression::eval(std::span<const double> x) const {
    constexpr std::size_t kInline = 32;
    std::array<double, kInline> inline_stack{};
    std::vector<double> heap_stack;
    double* st = inline_stack.data();
    if (max_stack_ > kInline) {
        heap_stack.resize(max_stack_);
        st = heap_stack.data();
    }
    std::size_t sp = 0;
    for (const auto& in : program_) {
        switch (in.op) {
            case Op::Const: st[sp++] = in.value; break;
            case Op::Var: st[sp++] = x[static_cast<std::size_t>(in.index)]; break;
            case Op::Add: --sp; st[sp - 1] += st[sp]; break;
            case Op::Sub: --sp; st[sp - 1] -= st[sp]; break;
            case Op::Mul: --sp; st[sp - 1] *= st[sp]; break;
            case Op::Div: --sp; st[sp - 1] /= st[sp]; break;
            case Op::Pow: --sp; st[sp - 1] = std::pow(st[sp - 1], st[sp]); break;
            case Op::Min: --sp; st[sp - 1] = std::min(st[sp - 1], st[sp]); break;
            case Op::Max: --sp; st[sp - 1] = std::max(st[sp - 1], st[sp]); break;
            case Op::IntPow: st[sp - 1] = int_pow(st[sp - 1], in.index); break;
            case Op::Neg: st[sp - 1] = -st[sp - 1]; break;
            case Op::Sin: st[sp - 1] = std::sin(st[sp - 1]); break;
            case Op::Cos: st[sp - 1] = std::cos(st[sp - 1]); break;
            case Op::Tan: st[sp - 1] = std::tan(st[sp - 1]); break;
            case Op::Exp: st[sp - 1] = std::exp(st[sp - 1]); break;
            case Op::Log: st[sp - 1] = std::log(st[sp - 1]); break;
            case Op::Sqrt: st[sp - 1] = std::sqrt(st[sp - 1]); break;
            case Op::Abs: st[sp - 1] = std::abs(st[sp - 1]); break;
            case Op::Tanh: st[sp - 1] = std::tanh(st[sp - 1]); break;
            case Op::Atan: st[sp - 1] = std::atan(st[sp - 1]); break;
            case Op::Sat: st[sp - 1] = std::clamp(st[sp - 1], -1.0, 1.0); break;
        }
    }
    return st[0];
}

}  // namespace impobs
