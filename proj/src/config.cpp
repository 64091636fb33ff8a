#include "slq/config.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace slq {

using nlohmann::json;

namespace {

CoefficientMode parse_mode(const std::string& s) {
    if (s == "constant") return CoefficientMode::Constant;
    if (s == "time_varying") return CoefficientMode::TimeVarying;
    if (s == "brownian") return CoefficientMode::BrownianFunctional;
    throw ConfigError("unknown coefficient mode '" + s + "' (expected constant, time_varying or brownian)");
}

Expression parse_entry(const json& v, const std::string& where) {
    if (v.is_number()) return Expression::constant(v.get<double>());
    if (v.is_string()) return Expression::parse(v.get<std::string>());
    throw ConfigError(where + ": matrix entries must be numbers or expression strings");
}

// `data` is a nested array (rows of entries). A bare scalar is accepted for
// 1x1 shapes.
CoefficientProcess parse_process(const json& obj, const std::string& where, int rows, int cols,
                                 double default_bound) {
    if (!obj.is_object()) throw ConfigError(where + ": expected an object {mode, data}");
    if (!obj.contains("data")) throw ConfigError(where + ": missing 'data'");
    const CoefficientMode mode = parse_mode(obj.value("mode", std::string("constant")));
    const double bound = obj.value("bound", default_bound);
    const json& data = obj.at("data");

    std::vector<Expression> entries;
    if (data.is_number() || data.is_string()) {
        if (rows != 1 || cols != 1) throw ConfigError(where + ": scalar data only allowed for 1x1 coefficients");
        entries.push_back(parse_entry(data, where));
    } else if (data.is_array()) {
        if (data.size() != static_cast<std::size_t>(rows)) {
            throw ConfigError(where + ": expected " + std::to_string(rows) + " rows, got " + std::to_string(data.size()));
        }
        for (const auto& row : data) {
            if (!row.is_array() || row.size() != static_cast<std::size_t>(cols)) {
                throw ConfigError(where + ": every row must hold " + std::to_string(cols) + " entries");
            }
            for (const auto& v : row) entries.push_back(parse_entry(v, where));
        }
    } else {
        throw ConfigError(where + ": 'data' must be a nested array");
    }
    try {
        return CoefficientProcess::from_expressions(mode, rows, cols, std::move(entries), bound);
    } catch (const ConfigError& e) {
        throw ConfigError(where + ": " + e.what());
    }
}

CoefficientProcess zero_process(int rows, int cols) { return CoefficientProcess::constant(Matrix::Zero(rows, cols)); }

}  // namespace

Instance parse_instance(std::string_view json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    try {
        Instance inst;
        inst.name = root.value("name", std::string("unnamed"));
        ProblemSpec& spec = inst.spec;

        const json& dims = root.at("dims");
        spec.dims = {dims.at("n").get<int>(), dims.at("m").get<int>(), dims.at("d").get<int>()};
        const int n = spec.dims.n;
        const int m = spec.dims.m;
        const int d = spec.dims.d;
        if (n < 1 || m < 1 || d < 1 || n > kMaxDim || m > kMaxDim || d > kMaxDim) {
            throw ConfigError("dims out of range [1, " + std::to_string(kMaxDim) + "]");
        }
        spec.horizon = root.at("T").get<double>();
        spec.delta = root.at("delta").get<double>();
        const double default_bound = root.value("bound", CoefficientProcess::kUndeclaredBound);

        auto required = [&](const char* key, int r, int c) {
            if (!root.contains(key)) throw ConfigError(std::string("missing coefficient '") + key + "'");
            return parse_process(root.at(key), key, r, c, default_bound);
        };
        auto optional = [&](const char* key, int r, int c) {
            return root.contains(key) ? parse_process(root.at(key), key, r, c, default_bound) : zero_process(r, c);
        };
        auto list = [&](const char* key, int r, int c) {
            std::vector<CoefficientProcess> out;
            if (!root.contains(key)) {
                for (int i = 0; i < d; ++i) out.push_back(zero_process(r, c));
                return out;
            }
            const json& arr = root.at(key);
            if (!arr.is_array() || arr.size() != static_cast<std::size_t>(d)) {
                throw ConfigError(std::string(key) + ": expected a list of d = " + std::to_string(d) + " coefficients");
            }
            for (std::size_t i = 0; i < arr.size(); ++i) {
                out.push_back(parse_process(arr[i], std::string(key) + "[" + std::to_string(i) + "]", r, c, default_bound));
            }
            return out;
        };

        spec.A = optional("A", n, n);
        spec.B = required("B", n, m);
        spec.C = list("C", n, n);
        spec.D = list("D", n, m);
        spec.Q = required("Q", n, n);
        spec.N = required("N", m, m);
        spec.M = optional("M", n, n);

        if (root.contains("x0")) {
            const auto x = root.at("x0").get<std::vector<double>>();
            if (x.size() != static_cast<std::size_t>(n)) throw ConfigError("x0 must have n entries");
            inst.x0 = Eigen::Map<const Eigen::VectorXd>(x.data(), n);
        } else {
            inst.x0 = Vector::Ones(n);
        }
        inst.c_bias = root.value("c_bias", 0.0);
        if (inst.c_bias < 0.0) throw ConfigError("c_bias must be nonnegative");
        return inst;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config schema error: ") + e.what());
    }
}

Instance load_instance(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_instance(buf.str());
}

}  // namespace slq
