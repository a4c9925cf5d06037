/*
 * Copyright 2026 the pimsim authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "pimsim/litmus.hpp"

#include <algorithm>
#include <deque>
#include <sstream>

namespace pimsim {

namespace {

constexpr uint64_t kOnes = ~0ull;
constexpr PhysAddr kDramSymBase = 0x1000;

PhysAddr dram_symbol(uint32_t i) { return kDramSymBase + static_cast<PhysAddr>(i) * 64; }

std::string canon_valuation(const std::map<std::string, uint64_t>& vals) {
    std::string out;
    for (const auto& [k, v] : vals) {
        if (!out.empty()) out += ";";
        out += k + "=" + std::to_string(v);
    }
    return out;
}

std::map<std::string, uint64_t> parse_valuation(const std::string& s) {
    std::map<std::string, uint64_t> out;
    std::istringstream is(s);
    std::string item;
    while (std::getline(is, item, ';')) {
        auto eq = item.find('=');
        if (eq == std::string::npos) continue;
        out[item.substr(0, eq)] = std::stoull(item.substr(eq + 1));
    }
    return out;
}

std::string term_key(const LitmusCondition::Term& t) {
    switch (t.kind) {
        case LitmusCondition::Term::Kind::Reg:
            return std::to_string(t.thread) + ":r" + std::to_string(t.reg);
        case LitmusCondition::Term::Kind::Mem: {
            char buf[24];
            std::snprintf(buf, sizeof buf, "mem[0x%llx]", static_cast<unsigned long long>(t.addr));
            return buf;
        }
        case LitmusCondition::Term::Kind::Ghost:
            return "_bypass";
    }
    return "?";
}

}  // namespace

SimConfig litmus_config(const LitmusTest& test, Model model) {
    SimConfig cfg;
    cfg.model = model;
    cfg.n_scopes = std::max(test.n_scopes, 1u);
    cfg.records_per_scope = test.records;
    cfg.cores = 1;  // machine raises it to thread count (+agent)
    cfg.watchdog_events = 5000000;
    cfg.invariant_check_interval = 1000;
    cfg.validate();
    return cfg;
}

namespace {

struct RunOutput {
    std::string valuation;
    bool truncated = false;
    std::vector<uint32_t> fanouts;
};

RunOutput run_once(const LitmusTest& test, Model model, Chooser& chooser,
                   const ExploreParams& p, uint64_t seed) {
    SimConfig cfg = litmus_config(test, model);
    cfg.seed = seed;
    Machine mach(cfg, &chooser);
    for (const auto& fi : test.init_fields) {
        ScopeImage& img = mach.memory().scope_image(fi.scope);
        for (uint32_t r = 0; r < cfg.records_per_scope; ++r) img.set_field(fi.field, r, fi.value);
    }
    for (const auto& [a, v] : test.init_mem) mach.memory().write_u64(a, v);
    if (test.interloper) mach.set_interloper(*test.interloper);
    mach.load_programs(test.threads);
    RunResult res = mach.run(p.run_limit);
    if (res.hit_limit)
        throw SimLimit("litmus run did not quiesce within the cycle limit: " + test.name);
    mach.flatten_caches();

    std::map<std::string, uint64_t> vals;
    for (const auto& cond : test.conditions) {
        for (const auto& t : cond.terms) {
            switch (t.kind) {
                case LitmusCondition::Term::Kind::Reg:
                    vals[term_key(t)] = res.registers.at(t.thread).at(t.reg);
                    break;
                case LitmusCondition::Term::Kind::Mem:
                    vals[term_key(t)] = mach.read_flat_u64(t.addr);
                    break;
                case LitmusCondition::Term::Kind::Ghost:
                    vals[term_key(t)] = res.bypass_observed ? 1 : 0;
                    break;
            }
        }
    }
    if (test.observe_bypass) vals["_bypass"] = res.bypass_observed ? 1 : 0;
    RunOutput out;
    out.valuation = canon_valuation(vals);
    return out;
}

}  // namespace

OutcomeSet explore(const LitmusTest& test, Model model, const ExploreParams& p) {
    OutcomeSet set;
    set.mode = p.mode;
    if (p.mode == OutcomeSet::Mode::Random) {
        for (uint64_t trial = 0; trial < p.trials; ++trial) {
            uint64_t seed = detail::splitmix64(p.seed ^ (0x51ED0BADull + trial));
            RandomChooser chooser(seed, "litmus");
            RunOutput out = run_once(test, model, chooser, p, seed);
            auto& o = set.outcomes[out.valuation];
            o.count++;
            if (o.repro.empty()) o.repro = "seed=" + std::to_string(seed);
            set.runs++;
        }
        return set;
    }
    // depth-first enumeration of the choice tree
    std::deque<std::vector<uint32_t>> stack;
    stack.push_back({});
    while (!stack.empty()) {
        if (set.runs >= p.max_paths) {
            set.partial = true;
            break;
        }
        std::vector<uint32_t> path = std::move(stack.back());
        stack.pop_back();
        TreeChooser chooser(path, p.depth);
        RunOutput out = run_once(test, model, chooser, p, p.seed);
        set.runs++;
        if (chooser.truncated()) set.partial = true;
        auto& o = set.outcomes[out.valuation];
        o.count++;
        if (o.repro.empty()) {
            std::string ps = "path=";
            for (size_t i = 0; i < path.size(); ++i)
                ps += (i ? "," : "") + std::to_string(path[i]);
            o.repro = ps;
        }
        const auto& fanouts = chooser.fanouts();
        size_t limit = std::min(fanouts.size(), p.depth);
        for (size_t i = path.size(); i < limit; ++i) {
            for (uint32_t alt = 1; alt < fanouts[i]; ++alt) {
                std::vector<uint32_t> np(fanouts.begin(), fanouts.begin() + static_cast<long>(i));
                // positions between path.size() and i took alternative 0
                for (size_t k = 0; k < np.size(); ++k)
                    np[k] = k < path.size() ? path[k] : 0;
                np.push_back(alt);
                stack.push_back(std::move(np));
            }
        }
    }
    return set;
}

std::string replay(const LitmusTest& test, Model model, const std::vector<uint32_t>& path,
                   const ExploreParams& p) {
    TreeChooser chooser(path, p.depth);
    return run_once(test, model, chooser, p, p.seed).valuation;
}

bool valuation_matches(const LitmusCondition& cond, const std::string& valuation,
                       const AddressMap& map) {
    (void)map;
    auto vals = parse_valuation(valuation);
    for (const auto& t : cond.terms) {
        auto it = vals.find(term_key(t));
        if (it == vals.end() || it->second != t.value) return false;
    }
    return true;
}

std::vector<VerdictRow> judge(const LitmusTest& test, Model model, const OutcomeSet& outcomes) {
    std::vector<VerdictRow> rows;
    AddressMap map;  // only needed for term keys
    for (const auto& cond : test.conditions) {
        if (!cond.models.empty() && !cond.models.count(model)) continue;
        VerdictRow row;
        row.test = test.name;
        row.model = model_name(model);
        row.condition = cond.text;
        bool observed = false;
        std::string repro;
        for (const auto& [val, o] : outcomes.outcomes) {
            if (valuation_matches(cond, val, map)) {
                observed = true;
                repro = o.repro;
                break;
            }
        }
        switch (cond.expect) {
            case LitmusCondition::Expect::Forbidden:
                if (observed) {
                    row.result = VerdictRow::Result::Fail;
                    row.note = "forbidden outcome observed (" + repro + ")";
                } else {
                    row.result = VerdictRow::Result::Pass;
                    row.note = outcomes.partial ? "not observed (partial exploration)"
                                                : "not observed";
                }
                break;
            case LitmusCondition::Expect::Required:
                if (outcomes.mode == OutcomeSet::Mode::Random) {
                    row.result = VerdictRow::Result::Warn;
                    row.note = observed ? "observed, but random mode cannot certify requirements"
                                        : "absent under random exploration (not a verdict)";
                } else if (outcomes.partial && !observed) {
                    row.result = VerdictRow::Result::Warn;
                    row.note = "absent, but exploration was partial";
                } else if (observed) {
                    row.result = VerdictRow::Result::Pass;
                    row.note = "observed (" + repro + ")";
                } else {
                    row.result = VerdictRow::Result::Fail;
                    row.note = "required outcome never observed";
                }
                break;
            case LitmusCondition::Expect::Allowed:
                row.result = VerdictRow::Result::Info;
                row.note = observed ? "observed (" + repro + ")" : "not observed";
                break;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

bool all_pass(const std::vector<VerdictRow>& rows) {
    for (const auto& r : rows)
        if (r.result == VerdictRow::Result::Fail) return false;
    return true;
}

// ---------------------------------------------------------------------------
// built-in suite
// ---------------------------------------------------------------------------

namespace {

LitmusCondition cond(LitmusCondition::Expect e, std::vector<LitmusCondition::Term> terms,
                     std::string text, std::set<Model> models = {}) {
    LitmusCondition c;
    c.expect = e;
    c.terms = std::move(terms);
    c.text = std::move(text);
    c.models = std::move(models);
    return c;
}
LitmusCondition::Term reg_term(int thread, int reg, uint64_t v) {
    LitmusCondition::Term t;
    t.kind = LitmusCondition::Term::Kind::Reg;
    t.thread = thread;
    t.reg = reg;
    t.value = v;
    return t;
}
LitmusCondition::Term ghost_term(uint64_t v) {
    LitmusCondition::Term t;
    t.kind = LitmusCondition::Term::Kind::Ghost;
    t.value = v;
    return t;
}

AddressMap default_map(uint32_t scopes, uint32_t records) {
    AddressMapConfig c;
    c.n_scopes = scopes;
    c.records_per_scope = records;
    return AddressMap(c);
}

PimOpDescriptor filter_all(uint32_t scope, int dst) {
    PimOpDescriptor d;
    d.scope_index = scope;
    d.opcode = PimOpcode::FilterEq;
    d.field_id = 0;
    d.immediate = 7;
    d.dst_mask = dst;
    return d;
}

LitmusTest make_sb() {
    LitmusTest t;
    t.name = "sb";
    PhysAddr X = dram_symbol(0), Y = dram_symbol(1);
    ThreadProgram p0, p1;
    p0.push(Stmt::store(X, 1));
    p0.push(Stmt::load(Y, 0));
    p1.push(Stmt::store(Y, 1));
    p1.push(Stmt::load(X, 0));
    t.threads = {p0, p1};
    t.conditions.push_back(cond(LitmusCondition::Expect::Required,
                                {reg_term(0, 0, 0), reg_term(1, 0, 0)},
                                "required 0:r0=0 && 1:r0=0"));
    return t;
}

LitmusTest make_mp() {
    LitmusTest t;
    t.name = "mp";
    PhysAddr D = dram_symbol(2), F = dram_symbol(3);
    ThreadProgram p0, p1;
    p0.push(Stmt::store(D, 1));
    p0.push(Stmt::store(F, 1));
    p1.push(Stmt::delay(40));
    p1.push(Stmt::load(F, 0));
    p1.push(Stmt::load(D, 1));
    t.threads = {p0, p1};
    t.conditions.push_back(cond(LitmusCondition::Expect::Forbidden,
                                {reg_term(1, 0, 1), reg_term(1, 1, 0)},
                                "forbidden 1:r0=1 && 1:r1=0"));
    return t;
}

LitmusTest make_fig1() {
    LitmusTest t;
    t.name = "fig1-cycle";
    t.n_scopes = 1;
    t.records = 1024;
    t.init_fields.push_back({0, 0, 7});
    AddressMap map = default_map(1, 1024);
    PhysAddr A = map.mask_line_addr(0, 0, 0);
    PhysAddr B = map.mask_line_addr(0, 0, 1);
    ThreadProgram p0;
    p0.push(Stmt::store(A, 5));
    p0.push(Stmt::mem_fence());
    p0.push(Stmt::store(B, 5));
    p0.push(Stmt::mem_fence());
    p0.push(Stmt::flush(A));
    p0.push(Stmt::flush(B));
    p0.push(Stmt::mem_fence());
    p0.push(Stmt::pim_op(filter_all(0, 0)));
    ThreadProgram p1;
    p1.push(Stmt::delay(20000));
    p1.push(Stmt::load(B, 0));
    p1.push(Stmt::load(A, 1));
    t.threads = {p0, p1};
    InterloperSpec agent;
    agent.addr = A;
    agent.watch_thread = 0;
    for (int stmt : {3, 4, 5, 6, 7})
        for (uint64_t d : {0ull, 64ull, 256ull, 1024ull}) agent.slots.push_back({stmt, d});
    t.interloper = agent;
    t.conditions.push_back(cond(LitmusCondition::Expect::Forbidden,
                                {reg_term(1, 0, kOnes), reg_term(1, 1, 5)},
                                "forbidden 1:r0=ones && 1:r1=5"));
    return t;
}

LitmusTest make_pim_same_scope_ld() {
    LitmusTest t;
    t.name = "pim-same-scope-ld";
    t.n_scopes = 1;
    t.records = 1024;
    t.init_fields.push_back({0, 0, 7});
    AddressMap map = default_map(1, 1024);
    PhysAddr A = map.mask_line_addr(0, 0, 0);
    ThreadProgram p0;
    p0.push(Stmt::pim_op(filter_all(0, 0)));
    p0.push(Stmt::load(A, 0));
    t.threads = {p0};
    t.conditions.push_back(cond(LitmusCondition::Expect::Forbidden, {reg_term(0, 0, 0)},
                                "forbidden [atomic,store,scope] 0:r0=0",
                                {Model::Atomic, Model::Store, Model::Scope}));
    t.conditions.push_back(cond(LitmusCondition::Expect::Required, {reg_term(0, 0, 0)},
                                "required [scope_relaxed] 0:r0=0", {Model::ScopeRelaxed}));
    t.conditions.push_back(cond(LitmusCondition::Expect::Required, {reg_term(0, 0, kOnes)},
                                "required 0:r0=ones"));
    return t;
}

LitmusTest make_pim_same_scope_ld_fenced() {
    LitmusTest t = make_pim_same_scope_ld();
    t.name = "pim-same-scope-ld-fenced";
    ThreadProgram p0;
    AddressMap map = default_map(1, 1024);
    PhysAddr A = map.mask_line_addr(0, 0, 0);
    p0.push(Stmt::pim_op(filter_all(0, 0)));
    p0.push(Stmt::scope_fence(0));
    p0.push(Stmt::load(A, 0));
    t.threads = {p0};
    t.conditions.clear();
    t.conditions.push_back(cond(LitmusCondition::Expect::Forbidden, {reg_term(0, 0, 0)},
                                "forbidden 0:r0=0"));
    t.conditions.push_back(cond(LitmusCondition::Expect::Required, {reg_term(0, 0, kOnes)},
                                "required 0:r0=ones"));
    return t;
}

LitmusTest make_pim_other_scope_ld() {
    LitmusTest t;
    t.name = "pim-other-scope-ld";
    t.n_scopes = 2;
    t.records = 1024;
    t.init_fields.push_back({0, 0, 7});
    AddressMap map = default_map(2, 1024);
    PhysAddr B = map.field_addr(1, 0, 0);
    ThreadProgram p0;
    p0.push(Stmt::pim_op(filter_all(0, 0)));
    p0.push(Stmt::load(B, 0));
    t.threads = {p0};
    t.observe_bypass = true;
    t.conditions.push_back(cond(LitmusCondition::Expect::Required, {ghost_term(1)},
                                "required [store,scope,scope_relaxed] bypass=1",
                                {Model::Store, Model::Scope, Model::ScopeRelaxed}));
    t.conditions.push_back(cond(LitmusCondition::Expect::Forbidden, {ghost_term(1)},
                                "forbidden [atomic] bypass=1", {Model::Atomic}));
    return t;
}

LitmusTest make_pim_other_scope_st() {
    LitmusTest t;
    t.name = "pim-other-scope-st";
    t.n_scopes = 2;
    t.records = 1024;
    t.init_fields.push_back({0, 0, 7});
    AddressMap map = default_map(2, 1024);
    PhysAddr B = map.field_addr(1, 0, 0);
    ThreadProgram p0;
    p0.push(Stmt::pim_op(filter_all(0, 0)));
    p0.push(Stmt::store(B, 77));
    t.threads = {p0};
    t.observe_bypass = true;
    t.conditions.push_back(cond(LitmusCondition::Expect::Required, {ghost_term(1)},
                                "required [scope,scope_relaxed] bypass=1",
                                {Model::Scope, Model::ScopeRelaxed}));
    t.conditions.push_back(cond(LitmusCondition::Expect::Forbidden, {ghost_term(1)},
                                "forbidden [atomic,store] bypass=1",
                                {Model::Atomic, Model::Store}));
    return t;
}

LitmusTest make_two_pim(bool fenced) {
    LitmusTest t;
    t.name = fenced ? "two-pim-pimfence" : "two-pim-cross-scope";
    t.n_scopes = 2;
    t.records = 1024;
    t.init_fields.push_back({0, 0, 7});
    AddressMap map = default_map(2, 1024);
    PhysAddr S0m = map.mask_line_addr(0, 0, 0);
    PhysAddr S1m = map.mask_line_addr(1, 1, 0);
    ThreadProgram p0;
    p0.push(Stmt::pim_op(filter_all(0, 0)));  // long filter in scope 0
    if (fenced) p0.push(Stmt::pim_fence());
    PimOpDescriptor inv;
    inv.scope_index = 1;
    inv.opcode = PimOpcode::MaskNot;
    inv.src_masks[0] = 0;
    inv.dst_mask = 1;
    p0.push(Stmt::pim_op(inv));  // short mask op in scope 1
    ThreadProgram p1;
    p1.push(Stmt::delay(1500));
    p1.push(Stmt::load(S1m, 0));
    p1.push(Stmt::load(S0m, 1));
    t.threads = {p0, p1};
    t.conditions.push_back(cond(LitmusCondition::Expect::Forbidden,
                                {reg_term(1, 0, kOnes), reg_term(1, 1, 0)},
                                "forbidden 1:r0=ones && 1:r1=0"));
    return t;
}

LitmusTest make_pimfence_sr() {
    LitmusTest t;
    t.name = "pimfence-sr-orders";
    t.n_scopes = 1;
    t.records = 1024;
    t.init_fields.push_back({0, 0, 7});
    AddressMap map = default_map(1, 1024);
    PhysAddr A = map.mask_line_addr(0, 0, 0);
    ThreadProgram p0;
    p0.push(Stmt::pim_op(filter_all(0, 0)));
    p0.push(Stmt::pim_fence());
    p0.push(Stmt::load(A, 0));
    t.threads = {p0};
    t.conditions.push_back(cond(LitmusCondition::Expect::Forbidden, {reg_term(0, 0, 0)},
                                "forbidden [scope_relaxed] 0:r0=0", {Model::ScopeRelaxed}));
    t.conditions.push_back(cond(LitmusCondition::Expect::Required, {reg_term(0, 0, kOnes)},
                                "required 0:r0=ones"));
    return t;
}

}  // namespace

std::vector<std::string> builtin_names() {
    return {"sb",
            "mp",
            "fig1-cycle",
            "pim-same-scope-ld",
            "pim-same-scope-ld-fenced",
            "pim-other-scope-ld",
            "pim-other-scope-st",
            "two-pim-cross-scope",
            "two-pim-pimfence",
            "pimfence-sr-orders"};
}

LitmusTest builtin(const std::string& name) {
    if (name == "sb") return make_sb();
    if (name == "mp") return make_mp();
    if (name == "fig1-cycle") return make_fig1();
    if (name == "pim-same-scope-ld") return make_pim_same_scope_ld();
    if (name == "pim-same-scope-ld-fenced") return make_pim_same_scope_ld_fenced();
    if (name == "pim-other-scope-ld") return make_pim_other_scope_ld();
    if (name == "pim-other-scope-st") return make_pim_other_scope_st();
    if (name == "two-pim-cross-scope") return make_two_pim(false);
    if (name == "two-pim-pimfence") return make_two_pim(true);
    if (name == "pimfence-sr-orders") return make_pimfence_sr();
    throw ConfigError("unknown litmus test: " + name);
}

// ---------------------------------------------------------------------------
// text format
// ---------------------------------------------------------------------------

namespace {

std::string addr_text(PhysAddr a, const AddressMap& map) {
    char buf[32];
    if (!map.in_pim(a) && a >= kDramSymBase && (a - kDramSymBase) % 64 == 0) {
        std::snprintf(buf, sizeof buf, "dram%llu",
                      static_cast<unsigned long long>((a - kDramSymBase) / 64));
        return buf;
    }
    std::snprintf(buf, sizeof buf, "0x%llx", static_cast<unsigned long long>(a));
    return buf;
}

uint64_t parse_value(const std::string& s) {
    if (s == "ones") return kOnes;
    return std::stoull(s, nullptr, 0);
}

PhysAddr parse_addr(const std::string& tok, const AddressMap& map) {
    if (tok.rfind("dram", 0) == 0) return dram_symbol(static_cast<uint32_t>(std::stoul(tok.substr(4))));
    if (tok[0] == 'S') {
        // S<k>.mask<m>.line<j> | S<k>.field<f>.rec<r> | S<k>.agg | S<k>+<off>
        size_t dot = tok.find_first_of(".+");
        uint32_t scope = static_cast<uint32_t>(std::stoul(tok.substr(1, dot - 1)));
        if (tok[dot] == '+') return map.scope(scope).base + std::stoull(tok.substr(dot + 1), nullptr, 0);
        std::string rest = tok.substr(dot + 1);
        if (rest == "agg") return map.agg_addr(scope);
        if (rest.rfind("mask", 0) == 0) {
            size_t d2 = rest.find('.');
            uint32_t m = static_cast<uint32_t>(std::stoul(rest.substr(4, d2 - 4)));
            uint32_t j = static_cast<uint32_t>(std::stoul(rest.substr(d2 + 5)));
            return map.mask_line_addr(scope, m, j);
        }
        if (rest.rfind("field", 0) == 0) {
            size_t d2 = rest.find('.');
            uint32_t f = static_cast<uint32_t>(std::stoul(rest.substr(5, d2 - 5)));
            uint32_t r = static_cast<uint32_t>(std::stoul(rest.substr(d2 + 4)));
            return map.field_addr(scope, f, r);
        }
    }
    return std::stoull(tok, nullptr, 0);
}

std::set<Model> parse_model_set(std::string s) {
    std::set<Model> out;
    std::replace(s.begin(), s.end(), ',', ' ');
    std::istringstream is(s);
    std::string m;
    while (is >> m) {
        auto mm = model_from(m);
        if (!mm) throw ConfigError("litmus: unknown model in condition scope: " + m);
        out.insert(*mm);
    }
    return out;
}

LitmusCondition parse_condition(const std::string& line, const AddressMap& map) {
    std::istringstream is(line);
    std::string kw;
    is >> kw;
    LitmusCondition c;
    if (kw == "forbidden")
        c.expect = LitmusCondition::Expect::Forbidden;
    else if (kw == "required")
        c.expect = LitmusCondition::Expect::Required;
    else if (kw == "allowed")
        c.expect = LitmusCondition::Expect::Allowed;
    else
        throw ConfigError("litmus: bad condition: " + line);
    std::string rest;
    std::getline(is, rest);
    size_t lb = rest.find('[');
    if (lb != std::string::npos) {
        size_t rb = rest.find(']');
        if (rb == std::string::npos) throw ConfigError("litmus: unterminated model set: " + line);
        c.models = parse_model_set(rest.substr(lb + 1, rb - lb - 1));
        rest = rest.substr(rb + 1);
    }
    c.text = line;
    // split on &&
    size_t pos = 0;
    while (pos < rest.size()) {
        size_t amp = rest.find("&&", pos);
        std::string term = rest.substr(pos, amp == std::string::npos ? std::string::npos : amp - pos);
        pos = amp == std::string::npos ? rest.size() : amp + 2;
        // trim
        size_t b = term.find_first_not_of(" \t");
        if (b == std::string::npos) continue;
        size_t e = term.find_last_not_of(" \t");
        term = term.substr(b, e - b + 1);
        size_t eq = term.find('=');
        if (eq == std::string::npos) throw ConfigError("litmus: bad term: " + term);
        std::string lhs = term.substr(0, eq);
        uint64_t val = parse_value(term.substr(eq + 1));
        LitmusCondition::Term t;
        t.value = val;
        if (lhs == "bypass" || lhs == "_bypass") {
            t.kind = LitmusCondition::Term::Kind::Ghost;
        } else if (lhs.rfind("mem[", 0) == 0) {
            t.kind = LitmusCondition::Term::Kind::Mem;
            t.addr = parse_addr(lhs.substr(4, lhs.size() - 5), map);
        } else {
            size_t colon = lhs.find(':');
            if (colon == std::string::npos || lhs[colon + 1] != 'r')
                throw ConfigError("litmus: bad term lhs: " + lhs);
            t.kind = LitmusCondition::Term::Kind::Reg;
            t.thread = std::stoi(lhs.substr(0, colon));
            t.reg = std::stoi(lhs.substr(colon + 2));
        }
        c.terms.push_back(t);
    }
    if (c.terms.empty()) throw ConfigError("litmus: condition without terms: " + line);
    return c;
}

}  // namespace

LitmusTest parse_litmus(const std::string& text) {
    LitmusTest t;
    uint32_t scopes = 1, records = 1024;
    std::vector<std::string> lines;
    {
        std::istringstream is(text);
        std::string line;
        while (std::getline(is, line)) {
            size_t hash = line.find('#');
            if (hash != std::string::npos) line = line.substr(0, hash);
            lines.push_back(line);
        }
    }
    // first pass: config (the address map depends on it)
    for (const auto& line : lines) {
        std::istringstream is(line);
        std::string kw;
        is >> kw;
        if (kw != "config") continue;
        std::string kv;
        while (is >> kv) {
            size_t eq = kv.find('=');
            if (eq == std::string::npos) throw ConfigError("litmus: bad config entry: " + kv);
            std::string k = kv.substr(0, eq);
            uint64_t v = std::stoull(kv.substr(eq + 1));
            if (k == "scopes")
                scopes = static_cast<uint32_t>(v);
            else if (k == "records")
                records = static_cast<uint32_t>(v);
            else
                throw ConfigError("litmus: unknown config key: " + k);
        }
    }
    t.n_scopes = scopes;
    t.records = records;
    AddressMapConfig mc;
    mc.n_scopes = scopes;
    mc.records_per_scope = records;
    AddressMap map(mc);

    std::map<std::string, std::string> aliases;
    auto subst = [&](const std::string& tok) -> std::string {
        auto it = aliases.find(tok);
        return it == aliases.end() ? tok : it->second;
    };
    int cur_thread = -1;
    for (const auto& raw : lines) {
        std::string line = raw;
        size_t b = line.find_first_not_of(" \t");
        if (b == std::string::npos) continue;
        bool indented = b > 0;
        line = line.substr(b);
        std::istringstream is(line);
        std::string kw;
        is >> kw;
        if (indented && cur_thread >= 0 &&
            (kw == "st" || kw == "ld" || kw == "flush" || kw == "pim" || kw == "memfence" ||
             kw == "pimfence" || kw == "scopefence" || kw == "delay")) {
            // substitute aliases in address positions
            std::vector<std::string> toks;
            toks.push_back(kw);
            std::string tk;
            while (is >> tk) toks.push_back(subst(tk));
            if (toks[0] == "st" || toks[0] == "ld" || toks[0] == "flush") {
                char buf[24];
                std::snprintf(buf, sizeof buf, "0x%llx",
                              static_cast<unsigned long long>(parse_addr(toks[1], map)));
                toks[1] = buf;
            }
            std::string stmt_line;
            for (size_t i = 0; i < toks.size(); ++i) stmt_line += (i ? " " : "") + toks[i];
            t.threads[static_cast<size_t>(cur_thread)].push(parse_stmt(stmt_line));
            continue;
        }
        cur_thread = -1;
        if (kw == "name") {
            is >> t.name;
        } else if (kw == "config") {
            // handled in the first pass
        } else if (kw == "alias") {
            std::string n, eq, target;
            is >> n >> eq >> target;
            if (eq != "=") throw ConfigError("litmus: bad alias line: " + line);
            aliases[n] = target;
        } else if (kw == "init") {
            std::string what;
            is >> what;
            if (what == "field") {
                std::string sc, f, eq;
                uint64_t v;
                is >> sc >> f >> eq >> v;
                LitmusTest::FieldInit fi;
                fi.scope = static_cast<uint32_t>(std::stoul(sc.substr(1)));
                fi.field = static_cast<uint32_t>(std::stoul(f.substr(1)));
                fi.value = v;
                t.init_fields.push_back(fi);
            } else if (what == "mem") {
                std::string a, eq, v;
                is >> a >> eq >> v;
                t.init_mem.emplace_back(parse_addr(subst(a), map), parse_value(v));
            } else {
                throw ConfigError("litmus: bad init line: " + line);
            }
        } else if (kw == "thread") {
            std::string idx;
            is >> idx;
            if (!idx.empty() && idx.back() == ':') idx.pop_back();
            cur_thread = std::stoi(idx);
            while (static_cast<int>(t.threads.size()) <= cur_thread) t.threads.emplace_back();
        } else if (kw == "interloper") {
            InterloperSpec spec;
            std::string a;
            is >> a;
            spec.addr = parse_addr(subst(a), map);
            std::string kv;
            std::vector<int> stmts;
            std::vector<uint64_t> delays{0};
            while (is >> kv) {
                size_t eq = kv.find('=');
                std::string k = kv.substr(0, eq);
                std::string v = kv.substr(eq + 1);
                std::replace(v.begin(), v.end(), ',', ' ');
                std::istringstream vs(v);
                if (k == "watch") {
                    vs >> spec.watch_thread;
                } else if (k == "stmts") {
                    int x;
                    stmts.clear();
                    while (vs >> x) stmts.push_back(x);
                } else if (k == "delays") {
                    uint64_t x;
                    delays.clear();
                    while (vs >> x) delays.push_back(x);
                } else {
                    throw ConfigError("litmus: unknown interloper key: " + k);
                }
            }
            for (int si : stmts)
                for (uint64_t d : delays) spec.slots.push_back({si, d});
            t.interloper = spec;
        } else if (kw == "observe") {
            std::string what;
            is >> what;
            if (what != "bypass") throw ConfigError("litmus: unknown observable: " + what);
            t.observe_bypass = true;
        } else if (kw == "forbidden" || kw == "required" || kw == "allowed") {
            // substitute aliases inside mem[] terms
            std::string cl = line;
            for (const auto& [n, target] : aliases) {
                std::string pat = "mem[" + n + "]";
                size_t pos;
                while ((pos = cl.find(pat)) != std::string::npos) {
                    char buf[32];
                    std::snprintf(buf, sizeof buf, "mem[0x%llx]",
                                  static_cast<unsigned long long>(parse_addr(target, map)));
                    cl = cl.substr(0, pos) + buf + cl.substr(pos + pat.size());
                }
            }
            t.conditions.push_back(parse_condition(cl, map));
        } else if (kw.empty()) {
            continue;
        } else {
            throw ConfigError("litmus: unknown directive: " + kw);
        }
    }
    if (t.name.empty()) throw ConfigError("litmus: missing name");
    if (t.threads.empty()) throw ConfigError("litmus: no threads");
    if (t.conditions.empty()) throw ConfigError("litmus: no conditions");
    return t;
}

std::string LitmusTest::text(const AddressMap& map) const {
    std::ostringstream os;
    os << "name " << name << "\n";
    os << "config scopes=" << n_scopes << " records=" << records << "\n";
    for (const auto& fi : init_fields)
        os << "init field S" << fi.scope << " f" << fi.field << " = " << fi.value << "\n";
    for (const auto& [a, v] : init_mem)
        os << "init mem " << addr_text(a, map) << " = " << v << "\n";
    for (size_t th = 0; th < threads.size(); ++th) {
        os << "thread " << th << ":\n";
        for (const auto& s : threads[th].stmts) os << "  " << stmt_text(s) << "\n";
    }
    if (interloper) {
        os << "interloper " << addr_text(interloper->addr, map)
           << " watch=" << interloper->watch_thread;
        std::set<int> stmts;
        std::set<uint64_t> delays;
        for (auto& [si, d] : interloper->slots) {
            stmts.insert(si);
            delays.insert(d);
        }
        os << " stmts=";
        bool first = true;
        for (int si : stmts) {
            os << (first ? "" : ",") << si;
            first = false;
        }
        os << " delays=";
        first = true;
        for (uint64_t d : delays) {
            os << (first ? "" : ",") << d;
            first = false;
        }
        os << "\n";
    }
    if (observe_bypass) os << "observe bypass\n";
    for (const auto& c : conditions) os << c.text << "\n";
    return os.str();
}

}  // namespace pimsim
