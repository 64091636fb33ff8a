#include "slq/config.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <string>

using namespace slq;

namespace {

const std::string kDir = SLQ_INSTANCE_DIR;

std::string minimal(const std::string& extra = "") {
    return R"({"dims": {"n": 1, "m": 1, "d": 1}, "T": 1, "delta": 1,
               "B": {"mode": "constant", "data": 1},
               "Q": {"mode": "constant", "data": 1},
               "N": {"mode": "constant", "data": 1})" +
           extra + "}";
}

}  // namespace

TEST(Config, ShippedInstancesLoadAndValidate) {
    for (const char* name : {"tanh", "det2x2", "scalar_cd", "p2", "flows"}) {
        const Instance inst = load_instance(kDir + "/" + name + ".json");
        EXPECT_EQ(inst.name, name);
        EXPECT_TRUE(validate(inst.spec).valid()) << name;
        EXPECT_EQ(inst.x0.size(), inst.spec.dims.n);
    }
}

TEST(Config, BadNLoadsButFailsValidation) {
    const Instance inst = load_instance(kDir + "/bad_N.json");
    EXPECT_FALSE(validate(inst.spec).valid());
}

TEST(Config, DefaultsFillOptionalFields) {
    const Instance inst = parse_instance(minimal());
    EXPECT_EQ(inst.name, "unnamed");
    EXPECT_DOUBLE_EQ(inst.x0(0), 1.0);
    EXPECT_DOUBLE_EQ(inst.c_bias, 0.0);
    EXPECT_TRUE(inst.spec.A.is_zero());
    EXPECT_DOUBLE_EQ(terminal_weight(inst.spec, 0.0)(0, 0), 0.0);
    ASSERT_EQ(inst.spec.C.size(), 1u);
    EXPECT_DOUBLE_EQ(inst.spec.C[0](0, 0)(0, 0), 0.0);
}

TEST(Config, BrownianExpressionIsParsed) {
    const Instance inst = load_instance(kDir + "/p2.json");
    EXPECT_EQ(inst.spec.mode(), CoefficientMode::BrownianFunctional);
    EXPECT_DOUBLE_EQ(inst.spec.A(0.3, 0.8)(0, 0), 0.1 * std::tanh(0.8));
}

TEST(Config, MatrixDataAndTimeVaryingMode) {
    const Instance inst = parse_instance(R"({"dims": {"n": 2, "m": 1, "d": 1}, "T": 2, "delta": 0.5,
        "A": {"mode": "time_varying", "data": [["t", 1], [0, "-t"]]},
        "B": {"mode": "constant", "data": [[1], [0]]},
        "Q": {"mode": "constant", "data": [[1, 0], [0, 1]]},
        "N": {"mode": "constant", "data": [[2]]},
        "x0": [1, -1], "c_bias": 0.5})");
    EXPECT_EQ(inst.spec.mode(), CoefficientMode::TimeVarying);
    const Matrix A = inst.spec.A(1.5, 0.0);
    EXPECT_DOUBLE_EQ(A(0, 0), 1.5);
    EXPECT_DOUBLE_EQ(A(0, 1), 1.0);
    EXPECT_DOUBLE_EQ(A(1, 1), -1.5);
    EXPECT_DOUBLE_EQ(inst.x0(1), -1.0);
    EXPECT_DOUBLE_EQ(inst.c_bias, 0.5);
}

TEST(Config, MalformedInputsRaiseConfigError) {
    EXPECT_THROW(parse_instance("{"), ConfigError);
    EXPECT_THROW(parse_instance(R"({"dims": {"n": 1, "m": 1, "d": 1}, "T": 1, "delta": 1})"), ConfigError);
    EXPECT_THROW(parse_instance(minimal(R"(, "A": {"mode": "weird", "data": 0})")), ConfigError);
    EXPECT_THROW(parse_instance(minimal(R"(, "A": {"mode": "constant", "data": "t"})")), ConfigError);
    EXPECT_THROW(parse_instance(minimal(R"(, "A": {"mode": "constant", "data": [[1, 2]]})")), ConfigError);
    EXPECT_THROW(parse_instance(minimal(R"(, "C": [])")), ConfigError);
    EXPECT_THROW(parse_instance(minimal(R"(, "x0": [1, 2])")), ConfigError);
    EXPECT_THROW(parse_instance(minimal(R"(, "c_bias": -1)")), ConfigError);
    EXPECT_THROW(load_instance(kDir + "/does_not_exist.json"), ConfigError);
}
