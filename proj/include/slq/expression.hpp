#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace slq {

/// Scalar expression in the two variables t (time) and w (Brownian value).
///
/// Grammar: numbers, `t`, `w`, `+ - * /`, unary minus, parentheses and the
/// functions `tanh`, `sin`, `cos`, `exp`. Parsed once into postfix code;
/// evaluation is allocation-free.
class Expression {
public:
    Expression() = default;

    /// Throws ConfigError with the offending position on malformed input.
    static Expression parse(std::string_view text);
    static Expression constant(double value);

    [[nodiscard]] double evaluate(double t, double w) const;

    [[nodiscard]] bool uses_time() const noexcept { return uses_t_; }
    [[nodiscard]] bool uses_brownian() const noexcept { return uses_w_; }
    [[nodiscard]] const std::string& text() const noexcept { return text_; }

private:
    enum class Op : unsigned char { Push, LoadT, LoadW, Add, Sub, Mul, Div, Neg, Tanh, Sin, Cos, Exp };
    struct Instr {
        Op op;
        double value;
    };

    friend class ExpressionParser;

    std::vector<Instr> code_;
    int max_stack_ = 0;
    bool uses_t_ = false;
    bool uses_w_ = false;
    std::string text_;
};

}  // namespace slq
