#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tc/ampc/sim.hpp"
#include "tc/decomposition.hpp"
#include "tc/engine/component.hpp"
#include "tc/engine/log.hpp"
#include "tc/tree.hpp"

namespace tc::engine {

// Connected + sibling contractor pair with per-vertex resolution.
template <class P>
concept ContractionProblem = requires(const P& p, const typename P::Data& d, const Component<typename P::Data>& c,
                                      std::span<const typename P::Data* const> leaves,
                                      std::span<const typename P::Value> vals, std::vector<std::uint64_t>& out,
                                      const std::uint64_t*& in) {
    p.encode(d, out);
    { p.decode(in) } -> std::convertible_to<typename P::Data>;
    { p.contract(c) } -> std::convertible_to<typename P::Data>;
    { p.fold(leaves) } -> std::convertible_to<typename P::Data>;
    { p.resolve(c, vals) } -> std::convertible_to<std::vector<typename P::Value>>;
};

template <class P>
struct Outcome {
    typename P::Value answer{};
    ContractionLog log;
    ampc::Metrics metrics;
    std::size_t phases = 0;
    std::vector<std::size_t> live_after_phase;  // vertex count after each outer phase
    std::size_t max_residual_excess = 0;         // max over contractions of nodes - (2*stubs+1), if reported
};

inline std::uint64_t record_key(Vid v, std::uint64_t slot) { return (static_cast<std::uint64_t>(v) << 24) | slot; }

template <ContractionProblem P>
class Engine {
public:
    using Data = typename P::Data;
    using Value = typename P::Value;

    Engine(const Tree& t, const std::vector<Data>& init, const P& prob, ampc::SimConfig cfg)
        : prob_(prob), cfg_(fix(cfg, t)), sim_(cfg_), lambda_(cfg_.lambda()) {
        t.validate();
        if (init.size() != t.size()) throw std::invalid_argument("one initial payload per vertex required");
        const std::size_t n = t.size();
        root_ = t.root;
        par_ = t.parent;
        kids_ = t.children;
        alive_.assign(n, 1);
        live_ = n;
        plen_.assign(n, 0);
        mark_.assign(n, 0);
        mult_.assign(n, 1);
        log_.n = n;
        log_.root = root_;
        std::vector<std::uint64_t> w;
        for (Vid v = 0; v < n; ++v) {
            w.clear();
            prob_.encode(init[v], w);
            check_budget(v, w.size(), kids_[v].size());
            plen_[v] = w.size();
            sim_.load(record_key(v, 0), w.size());
            for (std::size_t i = 0; i < w.size(); ++i) sim_.load(record_key(v, i + 1), w[i]);
        }
    }

    ampc::Simulator& sim() { return sim_; }
    std::size_t lambda() const { return lambda_; }

    // Algorithm for trees whose degrees are at most lambda.
    Outcome<P> run_bounded() {
        for (Vid v = 0; v < par_.size(); ++v)
            if (kids_[v].size() > lambda_)
                throw std::invalid_argument("vertex " + std::to_string(v) + " has degree " +
                                            std::to_string(kids_[v].size()) + " > n^eps = " + std::to_string(lambda_) +
                                            "; use tree_contract or the bypass transform");
        Outcome<P> out;
        bounded_forest({root_}, out, "bounded");
        out.phases = phase_;
        finish(out);
        return out;
    }

    // Algorithm for arbitrary degrees.
    Outcome<P> run_general() {
        Outcome<P> out;
        const std::size_t cap = static_cast<std::size_t>(std::ceil(static_cast<double>(cfg_.C_p) / cfg_.epsilon - 1e-9));
        std::size_t outer = 0;
        while (live_ > 1) {
            ++outer;
            if (outer > cap) sim_.violation("phase cap " + std::to_string(cap) + " exceeded with " + std::to_string(live_) + " live vertices");
            sim_.begin_phase("general." + std::to_string(outer));
            ++phase_;
            sim_.charge_subroutine("connectivity", cfg_.inv_eps());

            // low components that are leaves of the Big-Small tree: maximal all-low subtrees under a big vertex
            auto order = live_preorder({root_});
            std::vector<char> all_low(par_.size(), 0);
            for (auto it = order.rbegin(); it != order.rend(); ++it) {
                Vid v = *it;
                bool ok = kids_[v].size() <= lambda_;
                for (Vid c : kids_[v]) ok = ok && all_low[c];
                all_low[v] = ok;
            }
            std::vector<Vid> kroots;
            for (Vid v : order)
                if (all_low[v] && !kids_[v].empty() && (par_[v] == kNone || kids_[par_[v]].size() > lambda_))
                    kroots.push_back(v);
            if (!kroots.empty()) bounded_forest(kroots, out, "nested");

            star_rake();
            out.live_after_phase.push_back(live_);
            if (live_ > 1 && fits_one_machine()) {
                std::vector<Job> jobs(1);
                jobs[0] = connected_job(root_, [](Vid) { return true; });
                execute(jobs, "whole-tree");
            }
        }
        out.phases = outer;
        finish(out);
        return out;
    }

private:
    struct Job {
        ContractionKind kind = ContractionKind::connected;
        Component<Data> comp;  // ids/parent/kids filled by the driver; data decoded on the machine
        std::vector<Vid> external;
        std::vector<std::vector<std::uint64_t>> pre;
        std::vector<std::uint64_t> out;
        std::size_t residual_excess = 0;
    };

    static ampc::SimConfig fix(ampc::SimConfig c, const Tree& t) {
        c.n = t.size();
        return c;
    }

    void check_budget(Vid v, std::size_t words, std::size_t deg) {
        if (words > cfg_.C_w * (deg + 1))
            sim_.violation("payload of vertex " + std::to_string(v) + " has " + std::to_string(words) +
                           " words > C_w*(deg+1) = " + std::to_string(cfg_.C_w * (deg + 1)));
    }

    std::vector<Vid> live_preorder(const std::vector<Vid>& roots) const {
        std::vector<Vid> out, st;
        for (auto it = roots.rbegin(); it != roots.rend(); ++it) st.push_back(*it);
        while (!st.empty()) {
            Vid v = st.back();
            st.pop_back();
            out.push_back(v);
            for (auto it = kids_[v].rbegin(); it != kids_[v].rend(); ++it) st.push_back(*it);
        }
        return out;
    }

    template <class InComp>
    Job connected_job(Vid r, InComp in) {
        Job j;
        j.kind = ContractionKind::connected;
        auto& c = j.comp;
        // iterative DFS assigning preorder indices
        std::vector<std::pair<std::int32_t, std::size_t>> st;
        c.ids.push_back(r);
        c.parent.push_back(-1);
        c.kids.emplace_back();
        st.push_back({0, 0});
        while (!st.empty()) {
            auto& [x, ci] = st.back();
            Vid v = c.ids[static_cast<std::size_t>(x)];
            if (ci == kids_[v].size()) {
                st.pop_back();
                continue;
            }
            Vid ch = kids_[v][ci++];
            if (in(ch)) {
                auto idx = static_cast<std::int32_t>(c.ids.size());
                c.ids.push_back(ch);
                c.parent.push_back(x);
                c.kids.emplace_back();
                c.kids[static_cast<std::size_t>(x)].push_back(Entry::internal(idx, mult_[ch]));
                st.push_back({idx, 0});
            } else {
                if (mult_[ch] != 1) throw std::logic_error("folded leaf left outside a contraction");
                push_entry(c.kids[static_cast<std::size_t>(x)], Entry::stubs(1));
                j.external.push_back(ch);
            }
        }
        return j;
    }

    Job sibling_job(std::vector<Vid> leaves) {
        Job j;
        j.kind = ContractionKind::sibling;
        j.comp.ids = std::move(leaves);
        j.comp.parent.assign(j.comp.ids.size(), -1);
        j.comp.kids.assign(j.comp.ids.size(), {});
        return j;
    }

    std::size_t record_words(Vid v) const { return 1 + plen_[v]; }

    std::size_t estimate(const Job& j) const {
        std::size_t in = 0;
        for (Vid v : j.comp.ids) in += record_words(v);
        std::size_t deg_after = j.kind == ContractionKind::connected ? j.external.size() : 0;
        // merged payloads can outgrow their inputs by a few header and carry words each
        std::size_t out = std::min(in + 4 * j.comp.ids.size() + 4, cfg_.C_w * (deg_after + 1) + 1);
        return in + j.comp.shape_words() + j.external.size() + out;
    }

    // One AMPC round: contraction machines plus copy machines for untouched records.
    void execute(std::vector<Job>& jobs, const std::string& label) {
        if (jobs.empty()) return;
        const std::size_t S = sim_.space();
        ++stage_;
        // first-fit decreasing packing of jobs
        std::vector<std::size_t> idx(jobs.size()), est(jobs.size());
        for (std::size_t i = 0; i < jobs.size(); ++i) idx[i] = i, est[i] = estimate(jobs[i]);
        std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return est[a] > est[b]; });
        std::vector<std::vector<std::size_t>> bins;
        std::vector<std::size_t> load;
        for (auto i : idx) {
            bool placed = false;
            for (std::size_t b = 0; b < bins.size() && !placed; ++b)
                if (load[b] + est[i] <= S) {
                    bins[b].push_back(i);
                    load[b] += est[i];
                    placed = true;
                }
            if (!placed) {
                bins.push_back({i});
                load.push_back(est[i]);
            }
        }
        // untouched live records are copied forward
        ++stamp_;
        for (auto& j : jobs)
            for (Vid v : j.comp.ids) mark_[v] = stamp_;
        std::vector<std::vector<Vid>> copies(1);
        std::size_t cl = 0;
        for (Vid v = 0; v < par_.size(); ++v) {
            if (!alive_[v] || mark_[v] == stamp_) continue;
            std::size_t w = 2 * record_words(v);
            if (cl + w > S && !copies.back().empty()) copies.emplace_back(), cl = 0;
            copies.back().push_back(v);
            cl += w;
        }
        if (copies.back().empty()) copies.pop_back();

        std::vector<ampc::Program> progs;
        for (auto& bin : bins)
            progs.push_back([this, &jobs, bin](ampc::MachineCtx& m) {
                for (auto i : bin) run_job(jobs[i], m);
            });
        for (auto& cp : copies)
            progs.push_back([cp](ampc::MachineCtx& m) {
                for (Vid v : cp) {
                    std::uint64_t len = m.read(record_key(v, 0));
                    m.write(record_key(v, 0), len);
                    for (std::uint64_t s = 1; s <= len; ++s) m.write(record_key(v, s), m.read(record_key(v, s)));
                }
            });
        sim_.run_round(progs, label);
        for (auto& j : jobs) apply(j);
    }

    void run_job(Job& j, ampc::MachineCtx& m) const {
        auto& c = j.comp;
        m.hold(c.shape_words() + j.external.size());
        c.data.clear();
        j.pre.clear();
        for (Vid v : c.ids) {
            std::uint64_t len = m.read(record_key(v, 0));
            std::vector<std::uint64_t> w(len);
            for (std::uint64_t s = 0; s < len; ++s) w[s] = m.read(record_key(v, s + 1));
            const std::uint64_t* p = w.data();
            c.data.push_back(prob_.decode(p));
            j.pre.push_back(std::move(w));
        }
        Data res;
        if (j.kind == ContractionKind::connected) {
            res = prob_.contract(c);
        } else {
            std::vector<const Data*> ptrs;
            for (const auto& d : c.data) ptrs.push_back(&d);
            res = prob_.fold(std::span<const Data* const>(ptrs));
        }
        j.out.clear();
        prob_.encode(res, j.out);
        Vid s = c.ids[0];
        m.write(record_key(s, 0), j.out.size());
        for (std::size_t i = 0; i < j.out.size(); ++i) m.write(record_key(s, i + 1), j.out[i]);
        if constexpr (requires { prob_.residual_excess(res); }) j.residual_excess = prob_.residual_excess(res);
        c.data.clear();
    }

    void apply(Job& j) {
        LogRecord rec;
        rec.phase = static_cast<std::uint32_t>(phase_);
        rec.stage = static_cast<std::uint32_t>(stage_);
        rec.kind = j.kind;
        rec.survivor = j.comp.ids[0];
        rec.ids = j.comp.ids;
        rec.parent = j.comp.parent;
        rec.kids = j.comp.kids;
        rec.payloads = std::move(j.pre);
        rec.external = j.external;
        Vid s = rec.survivor;
        if (j.kind == ContractionKind::connected) {
            for (std::size_t i = 1; i < rec.ids.size(); ++i) {
                alive_[rec.ids[i]] = 0;
                kids_[rec.ids[i]].clear();
                --live_;
            }
            kids_[s] = j.external;
            for (Vid x : j.external) par_[x] = s;
        } else {
            Vid p = par_[s];
            ++stamp_;
            for (std::size_t i = 1; i < rec.ids.size(); ++i) {
                mult_[s] += mult_[rec.ids[i]];
                alive_[rec.ids[i]] = 0;
                mark_[rec.ids[i]] = stamp_;
                --live_;
            }
            auto& ks = kids_[p];
            ks.erase(std::remove_if(ks.begin(), ks.end(), [&](Vid x) { return mark_[x] == stamp_; }), ks.end());
        }
        plen_[s] = j.out.size();
        check_budget(s, j.out.size(), kids_[s].size());
        max_excess_ = std::max(max_excess_, j.residual_excess);
        sim_.add_archive_words(rec.words());
        log_.records.push_back(std::move(rec));
    }

    // Preorder decomposition / compress / rake phases on the forest under `roots`
    // until every tree is a single vertex.
    void bounded_forest(const std::vector<Vid>& roots, Outcome<P>& out, const std::string& tag) {
        std::size_t local = 0;
        const std::size_t safety = 8 * (ceil_log2(par_.size() + 1) + 2);
        auto busy = [&] {
            for (Vid r : roots)
                if (!kids_[r].empty()) return true;
            return false;
        };
        while (busy()) {
            ++local;
            if (local > safety) sim_.violation("bounded contraction made no progress after " + std::to_string(safety) + " phases");
            if (tag == "bounded") {
                ++phase_;
                sim_.begin_phase("bounded." + std::to_string(local));
            }
            if (local == 1) sim_.charge_subroutine("preorder", cfg_.inv_eps());
            else sim_.charge_subroutine("relabel", 1);

            auto order = live_preorder(roots);
            std::vector<std::size_t> w(order.size());
            for (std::size_t i = 0; i < order.size(); ++i) w[i] = kids_[order[i]].size();
            auto dec = decompose_weights(w, lambda_);
            ++stamp_;
            const auto grp_stamp = stamp_;
            std::vector<std::size_t>& group = group_scratch_;
            group.resize(par_.size());
            for (std::size_t g = 0; g + 1 < dec.boundaries.size(); ++g)
                for (std::size_t p = dec.boundaries[g]; p < dec.boundaries[g + 1]; ++p) {
                    group[order[p]] = g;
                    mark_[order[p]] = grp_stamp;
                }
            std::vector<Job> jobs;
            for (Vid v : order) {
                Vid p = par_[v];
                bool comp_root = p == kNone || mark_[p] != grp_stamp || group[p] != group[v];
                if (!comp_root) continue;
                bool has_inner = false;
                for (Vid c : kids_[v])
                    if (group[c] == group[v]) has_inner = true;
                if (!has_inner) continue;
                const std::size_t g = group[v];
                jobs.push_back(connected_job(v, [&](Vid c) { return group[c] == g; }));
            }
            execute(jobs, "compress");

            jobs.clear();
            order = live_preorder(roots);
            for (Vid v : order) {
                if (kids_[v].empty()) continue;
                bool any = false;
                for (Vid c : kids_[v])
                    if (kids_[c].empty()) any = true;
                if (!any) continue;
                jobs.push_back(connected_job(v, [&](Vid c) { return kids_[c].empty(); }));
            }
            execute(jobs, "rake");
            if (tag == "bounded") out.live_after_phase.push_back(live_);
        }
    }

    // Sibling batches of at most lambda leaves per level, then one connected
    // contraction folds the last leaf into its parent.
    void star_rake() {
        auto order = live_preorder({root_});
        std::vector<std::pair<Vid, std::vector<Vid>>> stars;
        for (Vid v : order) {
            std::vector<Vid> leaves;
            for (Vid c : kids_[v])
                if (kids_[c].empty()) leaves.push_back(c);
            if (!leaves.empty()) stars.push_back({v, std::move(leaves)});
        }
        if (stars.empty()) return;
        for (;;) {
            std::vector<Job> jobs;
            for (auto& [p, ls] : stars) {
                if (ls.size() <= 1) continue;
                std::vector<Vid> next;
                for (std::size_t i = 0; i < ls.size(); i += lambda_) {
                    std::size_t e = std::min(ls.size(), i + lambda_);
                    next.push_back(ls[i]);
                    if (e - i >= 2) jobs.push_back(sibling_job(std::vector<Vid>(ls.begin() + i, ls.begin() + e)));
                }
                ls = std::move(next);
            }
            if (jobs.empty()) break;
            execute(jobs, "sibling");
        }
        std::vector<Job> jobs;
        for (auto& [p, ls] : stars) {
            Vid leaf = ls[0];
            jobs.push_back(connected_job(p, [leaf](Vid c) { return c == leaf; }));
        }
        execute(jobs, "fold");
    }

    bool fits_one_machine() const {
        std::size_t w = 0;
        for (Vid v = 0; v < par_.size(); ++v)
            if (alive_[v]) w += 2 * record_words(v) + 3;
        return w <= sim_.space();
    }

    void finish(Outcome<P>& out) {
        sim_.begin_phase("final");
        std::vector<Job> jobs(1);
        jobs[0] = connected_job(root_, [](Vid) { return true; });
        execute(jobs, "final");
        const auto& rec = log_.records.back();
        Component<Data> c;
        c.ids = rec.ids;
        c.parent = rec.parent;
        c.kids = rec.kids;
        for (const auto& w : rec.payloads) {
            const std::uint64_t* p = w.data();
            c.data.push_back(prob_.decode(p));
        }
        out.answer = prob_.resolve(c, std::span<const Value>{})[0];
        out.log = log_;
        out.metrics = sim_.metrics();
        out.max_residual_excess = max_excess_;
    }

    const P& prob_;
    ampc::SimConfig cfg_;
    ampc::Simulator sim_;
    std::size_t lambda_;
    Vid root_ = kNone;
    std::vector<Vid> par_;
    std::vector<std::vector<Vid>> kids_;
    std::vector<char> alive_;
    std::size_t live_ = 0;
    std::vector<std::size_t> plen_;
    std::vector<std::uint32_t> mark_;
    std::vector<std::uint32_t> mult_;  // original child slots a folded leaf stands for
    std::uint32_t stamp_ = 0;
    std::vector<std::size_t> group_scratch_;
    std::size_t phase_ = 0;
    std::size_t stage_ = 0;
    std::size_t max_excess_ = 0;
    ContractionLog log_;
};

template <ContractionProblem P>
Outcome<P> bounded_tree_contract(const Tree& t, const std::vector<typename P::Data>& init, const P& prob,
                                 ampc::SimConfig cfg) {
    Engine<P> e(t, init, prob, cfg);
    return e.run_bounded();
}

template <ContractionProblem P>
Outcome<P> tree_contract(const Tree& t, const std::vector<typename P::Data>& init, const P& prob, ampc::SimConfig cfg) {
    Engine<P> e(t, init, prob, cfg);
    return e.run_general();
}

template <class P>
struct Reconstruction {
    std::vector<typename P::Value> value;
    std::vector<std::uint32_t> final_assignments;  // per vertex, how many records fixed its value
    std::vector<char> provisional;                 // sibling survivors: value first set from a folded payload
    std::size_t stages = 0;

    bool total() const {
        for (auto k : final_assignments)
            if (k != 1) return false;
        return true;
    }
};

// Replays the log in reverse. A vertex's value is fixed by the earliest record
// that contains it; sibling survivors first receive a provisional value from
// their folded payload which the sibling record later overwrites.
template <ContractionProblem P>
Reconstruction<P> reconstruct(const ContractionLog& log, const P& prob, ampc::Simulator* sim = nullptr) {
    using Value = typename P::Value;
    using Data = typename P::Data;
    Reconstruction<P> out;
    const std::size_t n = log.n;
    out.value.assign(n, Value{});
    std::vector<char> has(n, 0);
    std::vector<std::size_t> first(n, static_cast<std::size_t>(-1));
    for (std::size_t r = 0; r < log.records.size(); ++r)
        for (Vid v : log.records[r].ids)
            if (first[v] == static_cast<std::size_t>(-1)) first[v] = r;
    out.final_assignments.assign(n, 0);
    out.provisional.assign(n, 0);
    std::uint32_t last_stage = static_cast<std::uint32_t>(-1);
    for (std::size_t r = log.records.size(); r-- > 0;) {
        const auto& rec = log.records[r];
        if (rec.stage != last_stage) ++out.stages, last_stage = rec.stage;
        Component<Data> c;
        c.ids = rec.ids;
        c.parent = rec.parent;
        c.kids = rec.kids;
        for (const auto& w : rec.payloads) {
            const std::uint64_t* p = w.data();
            c.data.push_back(prob.decode(p));
        }
        std::vector<Value> vals;
        if (rec.kind == ContractionKind::connected) {
            std::vector<Value> stub;
            for (Vid x : rec.external) {
                if (!has[x])
                    throw std::runtime_error("log integrity: external child " + std::to_string(x) + " of record " +
                                             std::to_string(r) + " has no value yet");
                stub.push_back(out.value[x]);
            }
            vals = prob.resolve(c, stub);
        } else {
            for (std::size_t i = 0; i < c.size(); ++i) {
                Component<Data> one;
                one.ids = {c.ids[i]};
                one.parent = {-1};
                one.kids = {{}};
                one.data = {c.data[i]};
                vals.push_back(prob.resolve(one, std::span<const Value>{})[0]);
            }
        }
        for (std::size_t i = 0; i < c.size(); ++i) {
            Vid v = c.ids[i];
            if (has[v] && first[v] != r && rec.kind == ContractionKind::sibling && i == 0) out.provisional[v] = 1;
            out.value[v] = vals[i];
            has[v] = 1;
            if (first[v] == r) ++out.final_assignments[v];
        }
    }
    if (sim && out.stages) sim->charge_subroutine("reconstruct", out.stages);
    return out;
}

}  // namespace tc::engine
