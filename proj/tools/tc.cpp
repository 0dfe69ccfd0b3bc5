// tc: generate trees, solve problems under the simulator, check against oracles, sweep round counts.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "tc/ampc/sim.hpp"
#include "tc/engine/contract.hpp"
#include "tc/oracles/brute.hpp"
#include "tc/oracles/expr_reference.hpp"
#include "tc/oracles/generators.hpp"
#include "tc/oracles/iso_reference.hpp"
#include "tc/oracles/report.hpp"
#include "tc/problems/expr.hpp"
#include "tc/problems/iso.hpp"
#include "tc/problems/mis.hpp"
#include "tc/problems/mwm.hpp"
#include "tc/problems/sum.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace tc;

namespace {

enum Exit { ok = 0, mismatch = 1, sim_fault = 2, input_error = 3 };

const std::vector<std::string> kProblems{"sum", "height", "mwm", "mis", "maximal-matching", "mwis", "expr", "iso"};

struct Run {
    std::string problem = "mwm";
    std::vector<std::string> inputs;
    std::string expr;
    double epsilon = 0.5;
    std::uint64_t seed = 1;
    bool strict = true;
    std::string report, log;
    std::string algorithm = "auto";
    double alpha = 1.0;
    bool prime_table = false;
};

ampc::SimConfig sim_config(const Run& r) {
    ampc::SimConfig c;
    c.epsilon = r.epsilon;
    c.seed = r.seed;
    c.strict = r.strict;
    if (!(r.epsilon > 0 && r.epsilon < 1)) throw InputError("--epsilon must lie in (0,1)");
    return c;
}

bool general(const Run& r) {
    if (r.algorithm == "auto" || r.algorithm == "general") return true;
    if (r.algorithm == "bounded") return false;
    throw InputError("--algorithm must be auto, general or bounded");
}

std::string read_text(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string expression_text(const Run& r) {
    if (!r.expr.empty()) return r.expr;
    if (r.inputs.empty()) throw InputError("expr needs --expr or --input");
    auto s = read_text(r.inputs[0]);
    while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
    return s;
}

// What a solve produced: text for stdout, JSON detail, and the engine by-products.
struct Solved {
    std::string text;
    json answer;
    ampc::Metrics metrics;
    std::optional<engine::ContractionLog> log;
    bool totality = true;
    std::string removal_check;
    int verdict = Exit::ok;  // iso reports its verdict through the exit code
};

template <class Out>
void take_engine(Solved& s, const Out& out) {
    s.metrics = out.metrics;
    s.log = out.log;
    s.removal_check = out.log.check_removals();
}

Solved solve_tree(const Run& r, const Tree& t) {
    auto cfg = sim_config(r);
    Solved s;
    std::ostringstream txt;
    if (r.problem == "sum") {
        auto prob = engine::lift_unary(problems::SumParent{}, 0);
        auto init = problems::initial_payloads(t, prob, problems::sum_nodes(t));
        engine::Engine<decltype(prob)> eng(t, init, prob, cfg);
        auto out = general(r) ? eng.run_general() : eng.run_bounded();
        auto rec = engine::reconstruct(out.log, prob, &eng.sim());
        out.metrics = eng.sim().metrics();
        take_engine(s, out);
        s.totality = rec.total();
        s.answer = {{"value", out.answer}, {"per_vertex", rec.value}};
        txt << "value " << out.answer << "\n";
    } else if (r.problem == "height") {
        auto h = problems::iso::heights(t, cfg);
        take_engine(s, h.run);
        s.answer = {{"value", h.h[t.root]}, {"per_vertex", h.h}};
        txt << "value " << h.h[t.root] << "\n";
    } else if (r.problem == "mwm") {
        auto sol = problems::mwm::solve(t, cfg, general(r));
        take_engine(s, sol.run);
        s.totality = sol.totality;
        json edges = json::array();
        txt << "value " << sol.value << "\n";
        for (auto [c, p] : sol.matching.edges) {
            auto w = t.attr_int(c, "ew", 0);
            edges.push_back({c, p, w});
            txt << c << " " << p << " " << w << "\n";
        }
        s.answer = {{"value", sol.value}, {"matching", edges}, {"matching_weight", sol.matching.weight},
                    {"ranking_levels", sol.matching.levels}};
    } else if (r.problem == "mis") {
        auto sol = problems::mis::mis_solve(t, cfg);
        take_engine(s, sol.run);
        s.totality = sol.totality;
        std::vector<Vid> in;
        for (Vid v = 0; v < t.size(); ++v)
            if (sol.in[v]) in.push_back(v);
        txt << "size " << in.size() << "\n";
        for (Vid v : in) txt << v << "\n";
        s.answer = {{"size", in.size()}, {"set", in}, {"expanded_size", sol.scaffold.tree.size()}};
    } else if (r.problem == "maximal-matching") {
        auto sol = problems::mis::maximal_matching_solve(t, cfg);
        take_engine(s, sol.mis.run);
        s.totality = sol.mis.totality;
        json edges = json::array();
        txt << "size " << sol.edges.size() << "\n";
        for (auto [c, p] : sol.edges) {
            edges.push_back({c, p});
            txt << c << " " << p << "\n";
        }
        s.answer = {{"size", sol.edges.size()}, {"matching", edges}};
    } else if (r.problem == "mwis") {
        auto sol = problems::mis::mwis_solve(t, cfg);
        take_engine(s, sol.run);
        s.totality = sol.totality;
        std::vector<Vid> in;
        for (Vid v = 0; v < t.size(); ++v)
            if (sol.in[v]) in.push_back(v);
        txt << "value " << sol.value << "\n";
        for (Vid v : in) txt << v << "\n";
        s.answer = {{"value", sol.value}, {"set", in}};
    } else {
        throw InputError("problem '" + r.problem + "' does not take a single tree");
    }
    s.text = txt.str();
    return s;
}

Solved solve_expr(const Run& r) {
    auto src = expression_text(r);
    auto e = problems::expr::evaluate_expression(src, sim_config(r));
    Solved s;
    take_engine(s, e.run);
    s.totality = e.totality;
    s.answer = {{"value", e.value.str()}, {"operator_tree_size", e.tree.tree.size()}};
    s.text = e.value.str() + "\n";
    return s;
}

Solved solve_iso(const Run& r, const Tree& a, const Tree& b) {
    problems::iso::IsoConfig ic{r.alpha, r.prime_table, r.seed};
    auto res = problems::iso::tree_isomorphism(a, b, sim_config(r), ic);
    Solved s;
    s.metrics.rounds = res.rounds;
    s.answer = {{"verdict", res.isomorphic ? "isomorphic" : "not-isomorphic"},
                {"modulus", std::to_string(res.modulus)},
                {"q", {std::to_string(res.q_first), std::to_string(res.q_second)}},
                {"height", res.height}};
    s.text = std::string(res.isomorphic ? "isomorphic" : "not-isomorphic") + "\n";
    s.verdict = res.isomorphic ? Exit::ok : Exit::mismatch;
    return s;
}

Solved solve_any(const Run& r) {
    if (r.problem == "expr") return solve_expr(r);
    if (r.inputs.empty()) throw InputError("--input is required");
    if (r.problem == "iso") {
        if (r.inputs.size() != 2) throw InputError("iso needs two --input trees");
        return solve_iso(r, load_tree(r.inputs[0]), load_tree(r.inputs[1]));
    }
    return solve_tree(r, load_tree(r.inputs[0]));
}

void write_side_files(const Run& r, const Solved& s) {
    if (!r.report.empty()) {
        json j = {{"problem", r.problem}, {"epsilon", r.epsilon}, {"answer", s.answer}, {"metrics", s.metrics.to_json()}};
        std::ofstream out(r.report);
        if (!out) throw InputError("cannot write " + r.report);
        out << j.dump(2) << "\n";
    }
    if (!r.log.empty() && s.log) s.log->save_file(r.log);
}

int cmd_solve(const Run& r) {
    auto s = solve_any(r);
    write_side_files(r, s);
    std::cout << s.text;
    return s.verdict;
}

// ---- verify ----

oracles::OracleReport verify_tree(const Run& r, const Tree& t, const std::string& digest) {
    oracles::OracleReport rep;
    rep.problem = r.problem;
    rep.instance_digest = digest;
    auto s = solve_tree(r, t);
    bool sound = s.totality && s.removal_check.empty();
    if (r.problem == "mwm") {
        auto b = oracles::brute_mwm(t);
        std::vector<std::pair<Vid, Vid>> edges;
        for (auto& e : s.answer["matching"]) edges.push_back({e[0].get<Vid>(), e[1].get<Vid>()});
        bool valid = oracles::valid_matching(t, edges);
        rep.oracle = {{"value", b.value}};
        rep.engine = {{"value", s.answer["value"]}, {"matching_valid", valid}, {"matching_weight", s.answer["matching_weight"]}};
        rep.equal = sound && valid && s.answer["value"] == b.value && s.answer["matching_weight"] == b.value;
    } else if (r.problem == "mwis") {
        auto b = oracles::brute_mwis(t);
        std::vector<char> in(t.size(), 0);
        for (auto v : s.answer["set"]) in[v.get<Vid>()] = 1;
        std::int64_t w = 0;
        bool indep = true;
        for (Vid v = 0; v < t.size(); ++v) {
            if (!in[v]) continue;
            w += t.attr_int(v, "vw", 0);
            if (t.parent[v] != kNone && in[t.parent[v]]) indep = false;
        }
        rep.oracle = {{"value", b.value}};
        rep.engine = {{"value", s.answer["value"]}, {"set_weight", w}, {"independent", indep}};
        rep.equal = sound && indep && s.answer["value"] == b.value && w == b.value;
    } else if (r.problem == "mis") {
        std::vector<char> in(t.size(), 0);
        for (auto v : s.answer["set"]) in[v.get<Vid>()] = 1;
        auto c = oracles::check_mis(t, in);
        rep.oracle = {{"independent", true}, {"maximal", true}};
        rep.engine = {{"independent", c.independent}, {"maximal", c.maximal}, {"detail", c.detail}};
        rep.equal = sound && c.ok();
    } else if (r.problem == "maximal-matching") {
        std::vector<std::pair<Vid, Vid>> edges;
        for (auto& e : s.answer["matching"]) edges.push_back({e[0].get<Vid>(), e[1].get<Vid>()});
        bool m = oracles::maximal_matching(t, edges);
        rep.oracle = {{"maximal", true}};
        rep.engine = {{"maximal", m}, {"size", edges.size()}};
        rep.equal = sound && m;
    } else if (r.problem == "height") {
        rep.oracle = {{"value", tree_height(t)}};
        rep.engine = {{"value", s.answer["value"]}};
        rep.equal = sound && s.answer["value"] == tree_height(t);
    } else if (r.problem == "sum") {
        std::int64_t total = 0;
        for (Vid v = 0; v < t.size(); ++v) total += t.attr_int(v, "vw", 0);
        rep.oracle = {{"value", total}};
        rep.engine = {{"value", s.answer["value"]}};
        rep.equal = sound && s.answer["value"] == total;
    }
    return rep;
}

int cmd_verify(const Run& r) {
    bool all = true;
    auto emit = [&](const oracles::OracleReport& rep) {
        std::cout << rep.to_json().dump() << "\n";
        all = all && rep.equal;
    };
    if (r.problem == "expr") {
        auto src = expression_text(r);
        oracles::OracleReport rep;
        rep.problem = "expr";
        rep.instance_digest = oracles::digest(src);
        std::string ref, eng;
        try {
            ref = oracles::eval_reference(src).str();
        } catch (const std::invalid_argument&) {
            ref = "error";
        }
        try {
            eng = problems::expr::evaluate_expression(src, sim_config(r)).value.str();
        } catch (const problems::expr::ArithmeticError&) {
            eng = "error";
        }
        rep.oracle = {{"value", ref}};
        rep.engine = {{"value", eng}};
        rep.equal = ref == eng;
        emit(rep);
    } else if (r.problem == "iso") {
        if (r.inputs.size() != 2) throw InputError("iso needs two --input trees");
        auto a = load_tree(r.inputs[0]), b = load_tree(r.inputs[1]);
        auto s = solve_iso(r, a, b);
        bool truth = oracles::canonical_iso(a, b);
        oracles::OracleReport rep;
        rep.problem = "iso";
        rep.instance_digest = oracles::digest(serialize_tree(a) + serialize_tree(b));
        rep.oracle = {{"isomorphic", truth}};
        rep.engine = s.answer;
        // a false "not-isomorphic" is impossible; missing a difference is the allowed one-sided error
        rep.equal = !truth || s.verdict == Exit::ok;
        emit(rep);
    } else {
        if (r.inputs.empty()) throw InputError("--input is required");
        for (const auto& path : r.inputs) {
            auto t = load_tree(path);
            emit(verify_tree(r, t, oracles::digest(serialize_tree(t))));
        }
    }
    return all ? Exit::ok : Exit::mismatch;
}

// ---- bench ----

struct Bench {
    std::vector<std::string> families{"path", "star", "caterpillar", "broom", "random"};
    std::vector<std::size_t> sizes{64, 256, 1024, 4096, 16384};
    std::vector<double> epsilons{0.5};
    std::string output;
};

int cmd_bench(const Run& r, const Bench& b) {
    std::ostringstream csv;
    csv << "family,n,epsilon,algorithm,problem,rounds,peak_words,total_words,violations\n";
    for (const auto& fam : b.families)
        for (std::size_t n : b.sizes)
            for (double eps : b.epsilons) {
                auto t = oracles::generate(fam, n, r.seed)[0];
                oracles::set_edge_weights(t, 1, 100, r.seed);
                oracles::set_vertex_weights(t, 0, 100, r.seed + 1);
                Run rr = r;
                rr.epsilon = eps;
                auto s = solve_tree(rr, t);
                csv << fam << "," << n << "," << eps << "," << (general(r) ? "general" : "bounded") << "," << r.problem
                    << "," << s.metrics.rounds << "," << s.metrics.peak_machine_words << "," << s.metrics.total_words
                    << "," << s.metrics.violations.size() << "\n";
            }
    if (b.output.empty()) std::cout << csv.str();
    else {
        std::ofstream out(b.output);
        if (!out) throw InputError("cannot write " + b.output);
        out << csv.str();
    }
    return Exit::ok;
}

// ---- gen ----

struct Gen {
    std::string family = "random";
    std::size_t n = 10;
    std::size_t param = 0;
    std::string ew, vw;  // "lo:hi"
    std::string output;
};

std::pair<std::int64_t, std::int64_t> range(const std::string& s) {
    auto c = s.find(':');
    if (c == std::string::npos) throw InputError("weight range must look like lo:hi");
    try {
        auto lo = std::stoll(s.substr(0, c)), hi = std::stoll(s.substr(c + 1));
        if (hi < lo) throw InputError("empty weight range " + s);
        return {lo, hi};
    } catch (const std::logic_error&) {
        throw InputError("bad weight range " + s);
    }
}

int cmd_gen(const Run& r, const Gen& g) {
    auto trees = oracles::generate(g.family, g.n, r.seed, g.param);
    for (std::size_t i = 0; i < trees.size(); ++i) {
        if (!g.ew.empty()) {
            auto [lo, hi] = range(g.ew);
            oracles::set_edge_weights(trees[i], lo, hi, r.seed + i);
        }
        if (!g.vw.empty()) {
            auto [lo, hi] = range(g.vw);
            oracles::set_vertex_weights(trees[i], lo, hi, r.seed + i + 0x9e37);
        }
    }
    if (g.output.empty()) {
        for (const auto& t : trees) std::cout << serialize_tree(t);
        return Exit::ok;
    }
    if (trees.size() == 1 && !fs::is_directory(g.output)) {
        std::ofstream out(g.output);
        if (!out) throw InputError("cannot write " + g.output);
        out << serialize_tree(trees[0]);
        return Exit::ok;
    }
    fs::create_directories(g.output);
    for (std::size_t i = 0; i < trees.size(); ++i) {
        char name[64];
        std::snprintf(name, sizeof name, "%s_%zu_%04zu.tree", g.family.c_str(), g.n, i);
        std::ofstream out(fs::path(g.output) / name);
        if (!out) throw InputError("cannot write into " + g.output);
        out << serialize_tree(trees[i]);
    }
    return Exit::ok;
}

void common_flags(CLI::App* c, Run& r) {
    c->add_option("--epsilon", r.epsilon, "memory exponent in (0,1)");
    c->add_option("--seed", r.seed, "random seed");
    c->add_flag("--strict,!--no-strict", r.strict, "abort on any budget violation (default on)");
}

void problem_flags(CLI::App* c, Run& r) {
    c->add_option("--problem", r.problem, "problem")->check(CLI::IsMember(kProblems));
    c->add_option("--input", r.inputs, "tree file(s); expression file for expr");
    c->add_option("--expr", r.expr, "expression literal (expr)");
    c->add_option("--algorithm", r.algorithm, "auto, general or bounded");
    c->add_option("--alpha", r.alpha, "iso: modulus exponent");
    c->add_flag("--prime-table", r.prime_table, "iso: draw a prime modulus");
    c->add_option("--report", r.report, "write answer and metrics JSON here");
    c->add_option("--log", r.log, "write the contraction log here");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tree contraction under a simulated adaptive massively parallel machine"};
    app.require_subcommand(1);
    Run run;
    Bench bench;
    Gen gen;

    auto* solve = app.add_subcommand("solve", "solve one instance");
    problem_flags(solve, run);
    common_flags(solve, run);
    auto* verify = app.add_subcommand("verify", "solve and compare with the reference solver");
    problem_flags(verify, run);
    common_flags(verify, run);
    auto* bch = app.add_subcommand("bench", "round counts over a family/size/epsilon sweep, as CSV");
    bch->add_option("--problem", run.problem, "problem")->check(CLI::IsMember(kProblems));
    bch->add_option("--algorithm", run.algorithm, "auto, general or bounded");
    bch->add_option("--family", bench.families, "tree families");
    bch->add_option("--sizes", bench.sizes, "tree sizes");
    bch->add_option("--eps", bench.epsilons, "epsilon values");
    bch->add_option("--output", bench.output, "CSV path (default stdout)");
    common_flags(bch, run);
    auto* g = app.add_subcommand("gen", "write generated trees");
    g->add_option("--family", gen.family, "path, star, broom, caterpillar, random, complete-k-ary, all-shapes");
    g->add_option("--n", gen.n, "vertices")->required();
    g->add_option("--param", gen.param, "broom handle length or k for complete-k-ary");
    g->add_option("--ew", gen.ew, "edge weights lo:hi");
    g->add_option("--vw", gen.vw, "vertex weights lo:hi");
    g->add_option("--output", gen.output, "file, or directory for several trees (default stdout)");
    g->add_option("--seed", run.seed, "random seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : Exit::input_error;
    }
    try {
        if (*solve) return cmd_solve(run);
        if (*verify) return cmd_verify(run);
        if (*bch) return cmd_bench(run, bench);
        if (*g) return cmd_gen(run, gen);
    } catch (const ampc::SimFault& e) {
        std::cerr << "simulation fault: " << e.what() << "\n";
        return Exit::sim_fault;
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return Exit::input_error;
    } catch (const StructuralError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return Exit::input_error;
    } catch (const problems::expr::ArithmeticError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return Exit::input_error;
    } catch (const std::invalid_argument& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return Exit::input_error;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return Exit::sim_fault;
    }
    return Exit::ok;
}
