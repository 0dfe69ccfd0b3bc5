#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

namespace tc::ampc {

struct SimFault : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SimConfig {
    double epsilon = 0.5;
    std::size_t n = 1;
    double C_s = 64;
    double total_budget_factor = 64;
    std::size_t C_q = 4;
    std::size_t C_w = 32;
    std::size_t C_p = 4;
    std::uint64_t seed = 1;
    bool strict = true;
    unsigned threads = 0;  // 0: read TC_THREADS, default 1

    void validate() const {
        if (!(epsilon > 0 && epsilon < 1)) throw std::invalid_argument("epsilon must lie in (0,1)");
        if (n == 0) throw std::invalid_argument("n must be positive");
        if (space() < 4) throw std::invalid_argument("local space S must be at least 4 words");
    }
    // local space S in words
    std::size_t space() const {
        return static_cast<std::size_t>(std::ceil(C_s * std::pow(static_cast<double>(n), epsilon) - 1e-9));
    }
    // floor(n^eps), at least 2
    std::size_t lambda() const {
        auto l = static_cast<std::size_t>(std::floor(std::pow(static_cast<double>(n), epsilon) + 1e-9));
        return std::max<std::size_t>(l, 2);
    }
    std::size_t inv_eps() const { return static_cast<std::size_t>(std::ceil(1.0 / epsilon - 1e-9)); }
    std::size_t machine_cap() const {
        double m = total_budget_factor * static_cast<double>(n) / static_cast<double>(space());
        return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(m - 1e-9)));
    }
    std::size_t total_cap() const { return static_cast<std::size_t>(total_budget_factor * static_cast<double>(n)); }
    unsigned thread_count() const {
        if (threads) return threads;
        if (const char* e = std::getenv("TC_THREADS")) {
            long v = std::strtol(e, nullptr, 10);
            if (v > 0) return static_cast<unsigned>(v);
        }
        return 1;
    }
};

// One generation H_i of the distributed hash table.
class HashTableGen {
public:
    explicit HashTableGen(std::size_t index = 0) : index_(index) {}

    std::size_t index() const { return index_; }
    bool frozen() const { return frozen_; }
    void freeze() { frozen_ = true; }
    std::size_t size() const { return map_.size(); }

    void put(std::uint64_t k, std::uint64_t v) {
        if (frozen_) throw SimFault("write to frozen generation H" + std::to_string(index_));
        map_[k] = v;
    }
    const std::uint64_t* find(std::uint64_t k) const {
        auto it = map_.find(k);
        return it == map_.end() ? nullptr : &it->second;
    }
    const std::unordered_map<std::uint64_t, std::uint64_t>& entries() const { return map_; }
    bool operator==(const HashTableGen& o) const { return map_ == o.map_; }

private:
    friend class Simulator;
    std::size_t index_;
    bool frozen_ = false;
    std::unordered_map<std::uint64_t, std::uint64_t> map_;
};

// Handle given to one machine-program for one round. Reads go to the frozen
// previous generation; writes are buffered and merged at round end.
class MachineCtx {
public:
    MachineCtx(const HashTableGen& prev, std::size_t id) : prev_(&prev), id_(id) {}

    std::size_t id() const { return id_; }

    std::uint64_t read(std::uint64_t key) {
        ++reads_;
        const std::uint64_t* v = prev_->find(key);
        if (!v) throw SimFault("machine " + std::to_string(id_) + " read missing key " + std::to_string(key));
        return *v;
    }
    bool try_read(std::uint64_t key, std::uint64_t& out) {
        ++reads_;
        const std::uint64_t* v = prev_->find(key);
        if (!v) return false;
        out = *v;
        return true;
    }
    void write(std::uint64_t key, std::uint64_t value) {
        writes_.emplace_back(key, value);
    }
    // words held locally besides what was read or written (shape data, scratch)
    void hold(std::size_t words) {
        scratch_ += words;
        peak_scratch_ = std::max(peak_scratch_, scratch_);
    }
    void release(std::size_t words) { scratch_ -= std::min(words, scratch_); }

    std::size_t reads() const { return reads_; }
    std::size_t write_count() const { return writes_.size(); }
    std::size_t local_words() const { return reads_ + writes_.size() + peak_scratch(); }

private:
    friend class Simulator;
    std::size_t peak_scratch() const { return peak_scratch_; }
    const HashTableGen* prev_;
    std::size_t id_;
    std::size_t reads_ = 0;
    std::size_t scratch_ = 0;
    std::size_t peak_scratch_ = 0;
    std::vector<std::pair<std::uint64_t, std::uint64_t>> writes_;
};

using Program = std::function<void(MachineCtx&)>;

struct PhaseStat {
    std::string label;
    std::size_t rounds = 0;
};

struct RoundStat {
    std::size_t machines = 0;
    std::size_t reads = 0, writes = 0, peak_words = 0;
    std::size_t max_reads = 0, max_writes = 0;
    std::string label;
};

struct Metrics {
    std::size_t rounds = 0;
    std::vector<PhaseStat> phases;
    std::size_t peak_machine_words = 0;
    std::size_t total_words = 0;
    std::size_t dht_reads = 0;
    std::size_t dht_writes = 0;
    std::vector<std::string> violations;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["rounds"] = rounds;
        j["phases"] = nlohmann::json::array();
        for (const auto& p : phases) j["phases"].push_back({{"label", p.label}, {"rounds", p.rounds}});
        j["peak_machine_words"] = peak_machine_words;
        j["total_words"] = total_words;
        j["dht_reads"] = dht_reads;
        j["dht_writes"] = dht_writes;
        j["violations"] = violations;
        return j;
    }
};

// Checks the metrics JSON schema; returns an empty string when valid.
inline std::string validate_metrics_json(const nlohmann::json& j) {
    if (!j.is_object()) return "not an object";
    for (const char* k : {"rounds", "peak_machine_words", "total_words", "dht_reads", "dht_writes"})
        if (!j.contains(k) || !j[k].is_number_integer()) return std::string("missing integer field ") + k;
    if (!j.contains("phases") || !j["phases"].is_array()) return "missing phases array";
    for (const auto& p : j["phases"])
        if (!p.is_object() || !p.contains("label") || !p["label"].is_string() || !p.contains("rounds") ||
            !p["rounds"].is_number_integer())
            return "bad phase entry";
    if (!j.contains("violations") || !j["violations"].is_array()) return "missing violations array";
    for (const auto& v : j["violations"])
        if (!v.is_string()) return "violation entry is not a string";
    return "";
}

class Simulator {
public:
    explicit Simulator(SimConfig cfg) : cfg_(cfg), cur_(0) {
        cfg_.validate();
        S_ = cfg_.space();
    }

    const SimConfig& config() const { return cfg_; }
    std::size_t space() const { return S_; }
    std::size_t round() const { return metrics_.rounds; }
    const HashTableGen& current() const { return cur_; }
    const Metrics& metrics() const { return metrics_; }
    const std::vector<RoundStat>& round_log() const { return round_log_; }

    // Input placement before round 1.
    void load(std::uint64_t key, std::uint64_t value) {
        if (metrics_.rounds != 0) throw SimFault("load after the first round");
        cur_.put(key, value);
    }

    // Words kept outside the live generation (persistent log archive).
    void add_archive_words(std::size_t w) {
        archive_ += w;
        note_total();
    }

    void begin_phase(std::string label) { metrics_.phases.push_back({std::move(label), 0}); }

    void charge_subroutine(const std::string& name, std::size_t rounds) {
        if (rounds < 1) throw std::invalid_argument("charge_subroutine needs at least one round");
        metrics_.rounds += rounds;
        bump_phase(rounds);
        for (std::size_t i = 0; i < rounds; ++i) round_log_.push_back({0, 0, 0, 0, 0, 0, "charged:" + name});
    }

    void violation(const std::string& what) {
        metrics_.violations.push_back(what);
        if (cfg_.strict) throw SimFault(what);
    }

    // Executes all programs against the frozen current generation and
    // materializes their writes as the next generation.
    RoundStat run_round(const std::vector<Program>& tasks, const std::string& label = "") {
        const std::size_t r = metrics_.rounds + 1;
        cur_.freeze();
        HashTableGen next(cur_.index() + 1);
        if (tasks.size() > cfg_.machine_cap())
            violation("round " + std::to_string(r) + " (" + label + "): " + std::to_string(tasks.size()) +
                      " machines exceed cap " + std::to_string(cfg_.machine_cap()));
        std::vector<MachineCtx> ctx;
        ctx.reserve(tasks.size());
        for (std::size_t i = 0; i < tasks.size(); ++i) ctx.emplace_back(cur_, i);
        execute(tasks, ctx);

        RoundStat st;
        st.machines = tasks.size();
        st.label = label;
        const std::size_t cap = cfg_.C_q * S_;
        for (auto& m : ctx) {
            st.reads += m.reads_;
            st.writes += m.writes_.size();
            st.max_reads = std::max(st.max_reads, m.reads_);
            st.max_writes = std::max(st.max_writes, m.writes_.size());
            st.peak_words = std::max(st.peak_words, m.local_words());
            std::string who = "round " + std::to_string(r) + " (" + label + ") machine " + std::to_string(m.id_);
            if (m.reads_ > cap) violation(who + ": " + std::to_string(m.reads_) + " reads exceed " + std::to_string(cap));
            if (m.writes_.size() > cap)
                violation(who + ": " + std::to_string(m.writes_.size()) + " writes exceed " + std::to_string(cap));
            if (m.local_words() > S_)
                violation(who + ": " + std::to_string(m.local_words()) + " local words exceed S=" + std::to_string(S_));
            for (auto& [k, v] : m.writes_) {
                auto [it, fresh] = next.map_.emplace(k, v);
                if (!fresh && it->second != v)
                    violation("round " + std::to_string(r) + " (" + label + "): conflicting writes to key " + std::to_string(k));
            }
        }
        cur_ = std::move(next);
        metrics_.rounds += 1;
        bump_phase(1);
        metrics_.dht_reads += st.reads;
        metrics_.dht_writes += st.writes;
        metrics_.peak_machine_words = std::max(metrics_.peak_machine_words, st.peak_words);
        note_total();
        round_log_.push_back(st);
        return st;
    }

private:
    void execute(const std::vector<Program>& tasks, std::vector<MachineCtx>& ctx) {
        unsigned th = std::min<unsigned>(cfg_.thread_count(), static_cast<unsigned>(tasks.size()));
        if (th <= 1) {
            for (std::size_t i = 0; i < tasks.size(); ++i) tasks[i](ctx[i]);
            return;
        }
        std::vector<std::exception_ptr> errs(th);
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < th; ++t)
            pool.emplace_back([&, t] {
                try {
                    for (std::size_t i = t; i < tasks.size(); i += th) tasks[i](ctx[i]);
                } catch (...) {
                    errs[t] = std::current_exception();
                }
            });
        for (auto& p : pool) p.join();
        for (auto& e : errs)
            if (e) std::rethrow_exception(e);
    }
    void bump_phase(std::size_t k) {
        if (!metrics_.phases.empty()) metrics_.phases.back().rounds += k;
    }
    void note_total() {
        std::size_t tot = cur_.size() + archive_;
        metrics_.total_words = std::max(metrics_.total_words, tot);
        if (tot > cfg_.total_cap() && !total_flagged_) {
            total_flagged_ = true;
            violation("total words " + std::to_string(tot) + " exceed " + std::to_string(cfg_.total_cap()));
        }
    }

    SimConfig cfg_;
    std::size_t S_;
    HashTableGen cur_;
    Metrics metrics_;
    std::vector<RoundStat> round_log_;
    std::size_t archive_ = 0;
    bool total_flagged_ = false;
};

}  // namespace tc::ampc
