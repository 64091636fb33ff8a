#include "slq/cli.hpp"

#include "slq/bsre_pde.hpp"
#include "slq/config.hpp"
#include "slq/csv.hpp"
#include "slq/evaluator.hpp"
#include "slq/oracle_dp.hpp"
#include "slq/parallel.hpp"
#include "slq/riccati_ode.hpp"
#include "slq/riccati_solution.hpp"
#include "slq/sde_sim.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>

namespace slq {

namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

struct Options {
    std::string command;
    std::string config;
    std::uint64_t seed = 0;
    std::size_t paths = 0;
    int steps = 0;
    int space_nodes = 0;
    double wmax = 0.0;
    std::string out = "./out";
    std::string policy = "feedback";
    std::string tree_mode = "recombining";
    int record_stride = 1;
    int threads = 0;
    std::vector<std::string> args;
};

struct Output {
    fs::path dir;
    std::vector<std::string> files;

    void write(const std::string& name, const std::function<void(std::ostream&)>& body) {
        fs::create_directories(dir);
        write_file_atomic(dir / name, body);
        files.push_back(name);
    }
    void write_text(const std::string& name, const std::string& text) {
        write(name, [&](std::ostream& os) { os << text; });
    }
};

int default_steps(const std::string& cmd) {
    if (cmd == "solve-tree" || cmd == "compare") return 200;
    if (cmd == "verify" || cmd == "evaluate") return 2000;
    if (cmd == "solve-pde") return 0;
    return 1000;
}

// Monte Carlo checks feed the field's gain into every step, so they use a
// finer w-grid than the standalone solver.
int default_space_nodes(const std::string& cmd) {
    if (cmd == "verify" || cmd == "evaluate" || cmd == "simulate") return 801;
    return 201;
}

std::size_t default_paths(const std::string& cmd) {
    if (cmd == "verify" || cmd == "evaluate") return 100000;
    if (cmd == "solve-pde") return 10000;
    return 1000;
}

FieldConfig field_config(const Options& o) {
    FieldConfig f;
    f.space_nodes = o.space_nodes;
    f.w_max = o.wmax;
    if (o.command == "solve-pde") f.time_steps = o.steps;
    return f;
}

std::shared_ptr<const RiccatiSolution> make_solution(const Instance& inst, const Options& o) {
    const int ode_steps = std::max(o.steps, 1000);
    return std::make_shared<const RiccatiSolution>(solve_riccati(inst.spec, ode_steps, field_config(o)));
}

Policy parse_policy(const std::string& text, const Instance& inst, const std::shared_ptr<const RiccatiSolution>& sol) {
    const int m = inst.spec.dims.m;
    if (text == "zero") return ZeroPolicy{};
    if (text == "feedback") return FeedbackPolicy{sol, 1.0};
    if (text.rfind("const:", 0) == 0) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(text.substr(6), &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != text.size() - 6) throw ConfigError("bad constant policy '" + text + "'");
        return OpenLoopPolicy{{Vector::Constant(m, v)}};
    }
    if (text.rfind("file:", 0) == 0) {
        const std::string path = text.substr(5);
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open policy file " + path);
        OpenLoopPolicy pol;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#') continue;
            for (char& c : line)
                if (c == ',') c = ' ';
            std::istringstream row(line);
            std::vector<double> vals;
            double v;
            while (row >> v) vals.push_back(v);
            if (vals.empty() && !line.empty()) continue;  // header
            if (static_cast<int>(vals.size()) != m) throw ConfigError("policy file rows must hold m values");
            Vector u(m);
            for (int i = 0; i < m; ++i) u(i) = vals[static_cast<std::size_t>(i)];
            pol.grid.push_back(u);
        }
        if (pol.grid.empty()) throw ConfigError("policy file " + path + " has no rows");
        return pol;
    }
    throw ConfigError("unknown policy '" + text + "' (zero, feedback, const:<v>, file:<path>)");
}

std::string matrix_json(const Matrix& K) {
    ordered_json rows = ordered_json::array();
    for (Eigen::Index i = 0; i < K.rows(); ++i) {
        ordered_json r = ordered_json::array();
        for (Eigen::Index j = 0; j < K.cols(); ++j) r.push_back(K(i, j));
        rows.push_back(r);
    }
    return rows.dump();
}

void write_manifest(Output& out, const Options& o, double seconds) {
    ordered_json j;
    j["command"] = o.command;
    j["arguments"] = o.args;
    j["config"] = o.config;
    j["seed"] = o.seed;
    j["steps"] = o.steps;
    j["space_nodes"] = o.space_nodes;
    j["paths"] = o.paths;
    j["wmax"] = o.wmax;
    j["policy"] = o.policy;
    j["out"] = o.out;
    j["tool_version"] = kToolVersion;
    j["wall_clock_seconds"] = seconds;
    j["files"] = out.files;
    const std::string text = j.dump(2) + "\n";
    fs::create_directories(out.dir);
    write_file_atomic(out.dir / "manifest.json", [&](std::ostream& os) { os << text; });
}

int cmd_validate(const Instance& inst, std::ostream& out, std::ostream& err) {
    const ValidationReport rep = validate(inst.spec);
    if (rep.valid()) {
        out << inst.name << ": valid (" << to_string(inst.spec.mode()) << " coefficients)\n";
        return kExitOk;
    }
    const Violation& v = rep.violations.front();
    err << "invalid config: " << v.message << " at t=" << v.t << ", w=" << v.w;
    if (rep.violations.size() > 1) err << " (+" << rep.violations.size() - 1 << " more)";
    err << "\n";
    return kExitConfig;
}

int cmd_solve_ode(const Instance& inst, const Options& o, Output& files, std::ostream& out) {
    const RiccatiPath path = solve_backward(inst.spec, o.steps);
    files.write("riccati_ode.csv", [&](std::ostream& os) { write_csv(os, path); });
    out << "K(0) = " << matrix_json(path.K.front()) << "\n";
    return kExitOk;
}

int cmd_solve_pde(const Instance& inst, const Options& o, Output& files, std::ostream& out) {
    const RiccatiField field = solve_field(inst.spec, field_config(o));
    files.write("riccati_field.csv", [&](std::ostream& os) { write_csv(os, field); });
    const FieldSample at0 = sample_solution(field, 0.0, 0.0);
    const LMomentReport lm = sample_L_moments(field, o.paths, o.seed);

    ordered_json j;
    j["time_steps"] = field.t_grid().size() - 1;
    j["space_nodes"] = field.w_grid().size();
    j["w_max"] = field.w_max();
    j["K00"] = ordered_json::parse(matrix_json(at0.point.K));
    j["sup_L_norm"] = field.sup_L_norm();
    ordered_json m;
    m["paths"] = lm.paths;
    m["all_finite"] = lm.all_finite;
    m["max_integral"] = lm.max_integral;
    m["integral_bound"] = lm.integral_bound;
    m["clamped_samples"] = lm.clamped_samples;
    ordered_json rows = ordered_json::array();
    bool bounded = lm.all_finite;
    for (std::size_t i = 0; i < lm.powers.size(); ++i) {
        rows.push_back({{"p", lm.powers[i]}, {"moment", lm.moments[i]}, {"bound", lm.moment_bounds[i]}});
        bounded = bounded && lm.moments[i] <= lm.moment_bounds[i];
    }
    m["moments"] = rows;
    m["bounded"] = bounded;
    j["L_moments"] = m;
    files.write_text("riccati_field.json", j.dump(2) + "\n");
    out << "K(0,0) = " << matrix_json(at0.point.K) << "\n";
    out << "L moments " << (bounded ? "bounded" : "NOT bounded") << " over " << lm.paths << " paths\n";
    return bounded ? kExitOk : kExitAssertion;
}

TreeMode parse_tree_mode(const std::string& s) {
    if (s == "recombining") return TreeMode::Recombining;
    if (s == "path") return TreeMode::PathDependent;
    throw ConfigError("unknown tree mode '" + s + "' (recombining, path)");
}

int cmd_solve_tree(const Instance& inst, const Options& o, Output& files, std::ostream& out) {
    const TreeValue tree = solve_tree(inst.spec, o.steps, parse_tree_mode(o.tree_mode));
    files.write("tree.csv", [&](std::ostream& os) { write_tree_csv(os, tree); });
    out << "tree root K = " << matrix_json(tree.root()) << "\n";
    return kExitOk;
}

SimConfig sim_config(const Instance& inst, const Options& o) {
    SimConfig sc;
    sc.steps = o.steps;
    sc.paths = o.paths;
    sc.seed = o.seed;
    sc.x0 = inst.x0;
    sc.record_stride = o.record_stride;
    return sc;
}

int cmd_simulate(const Instance& inst, const Options& o, Output& files, std::ostream& out) {
    const auto sol = make_solution(inst, o);
    const Policy policy = parse_policy(o.policy, inst, sol);
    const TrajectoryBatch b = simulate(inst.spec, sim_config(inst, o), policy);
    files.write("trajectories.csv", [&](std::ostream& os) { write_trajectories_csv(os, b); });
    files.write("summary.csv", [&](std::ostream& os) { write_summary_csv(os, inst.spec, b); });
    const CostEstimate e = estimate_cost(b);
    out << "J = " << format_double(e.mean) << " +- " << format_double(e.std_error) << " (" << e.paths << " paths)\n";
    return kExitOk;
}

int cmd_evaluate(const Instance& inst, const Options& o, Output& files, std::ostream& out) {
    const auto sol = make_solution(inst, o);
    const Policy policy = parse_policy(o.policy, inst, sol);
    SimConfig sc = sim_config(inst, o);
    sc.record_stride = 0;
    const TrajectoryBatch b = simulate(inst.spec, sc, policy);
    const CostEstimate e = estimate_cost(b);
    const Matrix K0 = solution_point(*sol, 0.0, 0.0).K;
    ordered_json j;
    j["instance"] = inst.name;
    j["policy"] = o.policy;
    j["mean"] = e.mean;
    j["stderr"] = e.std_error;
    j["paths"] = e.paths;
    j["terminal_part"] = e.terminal_part;
    j["running_part"] = e.running_part;
    j["K0_quadratic_form"] = inst.x0.dot(K0 * inst.x0);
    files.write_text("cost.json", j.dump(2) + "\n");
    out << "J(" << o.policy << ") = " << format_double(e.mean) << " +- " << format_double(e.std_error) << "\n";
    return kExitOk;
}

int cmd_verify(const Instance& inst, const Options& o, Output& files, std::ostream& out) {
    const auto sol = make_solution(inst, o);
    EvalConfig ec;
    ec.steps = o.steps;
    ec.paths = o.paths;
    ec.seed = o.seed;
    ec.x0 = inst.x0;
    ec.c_bias = inst.c_bias;
    Evaluator ev(inst.spec, sol, ec, inst.name);
    const VerificationReport rep = ev.verify_all();
    files.write_text("report.json", rep.to_json());
    files.write_text("report.txt", rep.to_table());
    out << rep.to_table();
    return rep.passed() ? kExitOk : kExitAssertion;
}

int cmd_compare(const Instance& inst, const Options& o, Output& files, std::ostream& out) {
    if (inst.spec.dims.d != 1) throw ConfigError("compare needs d = 1 (tree oracle)");
    const auto sol = make_solution(inst, o);
    const Matrix K_solver = solution_point(*sol, 0.0, 0.0).K;
    const double solver_norm = std::max(K_solver.norm(), 1e-300);
    std::vector<int> ladder;
    for (int s = 25; s <= std::max(o.steps, 25); s *= 2) ladder.push_back(s);

    ordered_json j;
    j["instance"] = inst.name;
    j["solver"] = depends_on_brownian(*sol) ? "bsre_pde" : "riccati_ode";
    j["solver_K00"] = ordered_json::parse(matrix_json(K_solver));
    ordered_json rows = ordered_json::array();
    std::vector<double> gaps;
    std::ostringstream csv_text;
    CsvWriter csv(csv_text);
    csv.header({"S", "tree_K_norm", "abs_gap", "rel_gap"});
    for (int s : ladder) {
        const TreeValue tree = solve_tree(inst.spec, s, TreeMode::Recombining);
        const double gap = (tree.root() - K_solver).norm();
        gaps.push_back(gap);
        csv.field(s);
        csv.field(tree.root().norm());
        csv.field(gap);
        csv.field(gap / solver_norm);
        csv.end_row();
        rows.push_back({{"S", s}, {"abs_gap", gap}, {"rel_gap", gap / solver_norm}});
        out << "S=" << s << "  gap=" << format_double(gap) << "  rel=" << format_double(gap / solver_norm) << "\n";
    }
    bool monotone = true;
    for (std::size_t i = 1; i < gaps.size(); ++i) monotone = monotone && gaps[i] < gaps[i - 1];
    j["ladder"] = rows;
    j["monotone"] = monotone;
    if (inst.spec.is_deterministic()) {
        // Both continuous solvers on the same constant-coefficient problem.
        const RiccatiField field = solve_field(inst.spec, field_config(o));
        const Matrix K_pde = sample_solution(field, 0.0, 0.0).point.K;
        const Matrix K_ode = solve_backward(inst.spec, std::max(o.steps, 1000)).K.front();
        j["ode_vs_pde_gap"] = (K_pde - K_ode).norm();
        out << "ode vs pde gap at (0,0): " << format_double((K_pde - K_ode).norm()) << "\n";
    }
    files.write_text("compare.csv", csv_text.str());
    files.write_text("compare.json", j.dump(2) + "\n");
    out << (monotone ? "gap decreases monotonically\n" : "gap is NOT monotone\n");
    return monotone ? kExitOk : kExitAssertion;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Stochastic linear-quadratic control lab", "slqlab"};
    app.require_subcommand(1);
    Options o;
    o.args = args;
    const std::vector<std::pair<std::string, std::string>> commands{
        {"validate", "Check a problem config against the standing assumptions"},
        {"solve-ode", "Backward Riccati ODE for deterministic coefficients"},
        {"solve-pde", "Riccati field (K, L) on a (t, w) grid for Brownian-functional coefficients"},
        {"solve-tree", "Exact dynamic programming on a binomial tree"},
        {"simulate", "Euler-Maruyama trajectories under a policy"},
        {"evaluate", "Monte Carlo cost of a policy"},
        {"verify", "Value match, completion of squares, DPP and quadratic-law checks"},
        {"compare", "Solver against tree oracle over a step-doubling ladder"},
    };
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", o.config, "Instance JSON")->required();
        sub->add_option("--seed", o.seed, "Master seed");
        sub->add_option("--paths", o.paths, "Monte Carlo paths");
        sub->add_option("--steps", o.steps, "Time steps (solver, simulation or tree)");
        sub->add_option("--space-nodes", o.space_nodes, "Field grid nodes in w (default 801 for simulate/evaluate/verify, else 201)");
        sub->add_option("--wmax", o.wmax, "Field half-width in w (0: 5 sqrt(T))");
        sub->add_option("--out", o.out, "Output directory");
        sub->add_option("--policy", o.policy, "zero | feedback | const:<v> | file:<path>");
        sub->add_option("--tree-mode", o.tree_mode, "recombining | path");
        sub->add_option("--record-stride", o.record_stride, "Trajectory recording stride (simulate)");
        sub->add_option("--threads", o.threads, "Thread cap (0: all cores)");
    }
    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n";
        return kExitConfig;
    }
    o.command = app.get_subcommands().front()->get_name();
    if (o.steps == 0) o.steps = default_steps(o.command);
    if (o.paths == 0) o.paths = default_paths(o.command);
    if (o.space_nodes == 0) o.space_nodes = default_space_nodes(o.command);
    set_thread_limit(o.threads);

    const auto start = std::chrono::steady_clock::now();
    Output files{fs::path(o.out), {}};
    try {
        const Instance inst = load_instance(o.config);
        if (o.command == "validate") return cmd_validate(inst, out, err);
        const ValidationReport rep = validate(inst.spec);
        if (!rep.valid()) {
            err << "invalid config: " << rep.violations.front().message << "\n";
            return kExitConfig;
        }
        int code = kExitOk;
        if (o.command == "solve-ode") code = cmd_solve_ode(inst, o, files, out);
        else if (o.command == "solve-pde") code = cmd_solve_pde(inst, o, files, out);
        else if (o.command == "solve-tree") code = cmd_solve_tree(inst, o, files, out);
        else if (o.command == "simulate") code = cmd_simulate(inst, o, files, out);
        else if (o.command == "evaluate") code = cmd_evaluate(inst, o, files, out);
        else if (o.command == "verify") code = cmd_verify(inst, o, files, out);
        else if (o.command == "compare") code = cmd_compare(inst, o, files, out);
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        write_manifest(files, o, seconds);
        return code;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const DimensionError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const DomainError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitAssertion;
    }
}

}  // namespace slq
