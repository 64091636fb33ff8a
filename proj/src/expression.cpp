#include "slq/expression.hpp"

#include "slq/types.hpp"

#include <cctype>
#include <charconv>
#include <cmath>

namespace slq {

namespace {

constexpr int kStackLimit = 64;

}  // namespace

class ExpressionParser {
public:
    explicit ExpressionParser(std::string_view text) : text_(text) {}

    Expression run() {
        Expression e;
        e.text_ = std::string(text_);
        out_ = &e;
        parse_sum();
        skip_space();
        if (pos_ != text_.size()) fail("unexpected character");
        if (e.code_.empty()) fail("empty expression");
        e.max_stack_ = max_depth_;
        if (max_depth_ > kStackLimit) fail("expression too deeply nested");
        return e;
    }

private:
    using Op = Expression::Op;

    void emit(Op op, double value = 0.0) {
        out_->code_.push_back({op, value});
        switch (op) {
        case Op::Push:
        case Op::LoadT:
        case Op::LoadW:
            ++depth_;
            break;
        case Op::Add:
        case Op::Sub:
        case Op::Mul:
        case Op::Div:
            --depth_;
            break;
        default:
            break;
        }
        if (depth_ > max_depth_) max_depth_ = depth_;
    }

    [[noreturn]] void fail(const char* what) const {
        throw ConfigError("expression '" + std::string(text_) + "': " + what + " at position " +
                          std::to_string(pos_));
    }

    void skip_space() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip_space();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void parse_sum() {
        parse_product();
        for (;;) {
            if (accept('+')) {
                parse_product();
                emit(Op::Add);
            } else if (accept('-')) {
                parse_product();
                emit(Op::Sub);
            } else {
                return;
            }
        }
    }

    void parse_product() {
        parse_unary();
        for (;;) {
            if (accept('*')) {
                parse_unary();
                emit(Op::Mul);
            } else if (accept('/')) {
                parse_unary();
                emit(Op::Div);
            } else {
                return;
            }
        }
    }

    void parse_unary() {
        if (accept('-')) {
            parse_unary();
            emit(Op::Neg);
            return;
        }
        if (accept('+')) {
            parse_unary();
            return;
        }
        parse_primary();
    }

    void parse_primary() {
        skip_space();
        if (pos_ >= text_.size()) fail("unexpected end");
        const char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            parse_sum();
            if (!accept(')')) fail("expected ')'");
            return;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            double value = 0.0;
            const char* begin = text_.data() + pos_;
            const char* end = text_.data() + text_.size();
            auto [ptr, ec] = std::from_chars(begin, end, value);
            if (ec != std::errc()) fail("bad number");
            pos_ += static_cast<std::size_t>(ptr - begin);
            emit(Op::Push, value);
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            const std::size_t start = pos_;
            while (pos_ < text_.size() && std::isalnum(static_cast<unsigned char>(text_[pos_]))) ++pos_;
            const std::string_view name = text_.substr(start, pos_ - start);
            if (name == "t") {
                out_->uses_t_ = true;
                emit(Op::LoadT);
                return;
            }
            if (name == "w") {
                out_->uses_w_ = true;
                emit(Op::LoadW);
                return;
            }
            Op fn;
            if (name == "tanh") {
                fn = Op::Tanh;
            } else if (name == "sin") {
                fn = Op::Sin;
            } else if (name == "cos") {
                fn = Op::Cos;
            } else if (name == "exp") {
                fn = Op::Exp;
            } else {
                pos_ = start;
                fail("unknown identifier");
            }
            if (!accept('(')) fail("expected '(' after function name");
            parse_sum();
            if (!accept(')')) fail("expected ')'");
            emit(fn);
            return;
        }
        fail("unexpected character");
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    int depth_ = 0;
    int max_depth_ = 0;
    Expression* out_ = nullptr;
};

Expression Expression::parse(std::string_view text) { return ExpressionParser(text).run(); }

Expression Expression::constant(double value) {
    Expression e;
    e.code_.push_back({Op::Push, value});
    e.max_stack_ = 1;
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    e.text_.assign(buf, ptr);
    return e;
}

double Expression::evaluate(double t, double w) const {
    double stack[kStackLimit];
    int top = 0;
    for (const Instr& in : code_) {
        switch (in.op) {
        case Op::Push:
            stack[top++] = in.value;
            break;
        case Op::LoadT:
            stack[top++] = t;
            break;
        case Op::LoadW:
            stack[top++] = w;
            break;
        case Op::Add:
            --top;
            stack[top - 1] += stack[top];
            break;
        case Op::Sub:
            --top;
            stack[top - 1] -= stack[top];
            break;
        case Op::Mul:
            --top;
            stack[top - 1] *= stack[top];
            break;
        case Op::Div:
            --top;
            stack[top - 1] /= stack[top];
            break;
        case Op::Neg:
            stack[top - 1] = -stack[top - 1];
            break;
        case Op::Tanh:
            stack[top - 1] = std::tanh(stack[top - 1]);
            break;
        case Op::Sin:
            stack[top - 1] = std::sin(stack[top - 1]);
            break;
        case Op::Cos:
            stack[top - 1] = std::cos(stack[top - 1]);
            break;
        case Op::Exp:
            stack[top - 1] = std::exp(stack[top - 1]);
            break;
        }
    }
    return stack[0];
}

}  // namespace slq
