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

#include "pimsim/workload.hpp"

#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

namespace pimsim {

using nlohmann::json;

namespace {

constexpr uint64_t kUnusedKeySentinel = 1ull << 62;

uint64_t fnv_str(const std::string& s) {
    uint64_t h = 0xCBF29CE484222325ull;
    for (char ch : s) {
        h ^= static_cast<uint8_t>(ch);
        h *= 0x100000001B3ull;
    }
    return h;
}

/// Zipfian over [0, n) with YCSB-style constants.
class Zipf {
  public:
    Zipf(uint64_t n, double theta) : n_(n), theta_(theta) {
        for (uint64_t i = 1; i <= n_; ++i) zetan_ += 1.0 / std::pow(static_cast<double>(i), theta_);
        zeta2_ = 1.0 + 1.0 / std::pow(2.0, theta_);
        alpha_ = 1.0 / (1.0 - theta_);
        eta_ = (1.0 - std::pow(2.0 / static_cast<double>(n_), 1.0 - theta_)) /
               (1.0 - zeta2_ / zetan_);
    }
    uint64_t draw(RngStream& rng) const {
        double u = rng.uniform01();
        double uz = u * zetan_;
        if (uz < 1.0) return 0;
        if (uz < zeta2_) return 1;
        auto v = static_cast<uint64_t>(static_cast<double>(n_) *
                                       std::pow(eta_ * u - eta_ + 1.0, alpha_));
        return v >= n_ ? n_ - 1 : v;
    }
    double probability(uint64_t rank) const {
        return (1.0 / std::pow(static_cast<double>(rank + 1), theta_)) / zetan_;
    }

  private:
    uint64_t n_;
    double theta_;
    double zetan_ = 0.0;
    double zeta2_ = 0.0;
    double alpha_ = 0.0;
    double eta_ = 0.0;
};

std::vector<uint32_t> shuffled_slots(uint64_t capacity, RngStream& rng) {
    std::vector<uint32_t> perm(capacity);
    for (uint64_t i = 0; i < capacity; ++i) perm[i] = static_cast<uint32_t>(i);
    for (uint64_t i = capacity - 1; i > 0; --i) {
        uint64_t j = static_cast<uint64_t>(rng.uniform(0, static_cast<int64_t>(i)));
        std::swap(perm[i], perm[j]);
    }
    return perm;
}

}  // namespace

std::string YcsbConfig::to_json() const {
    json j;
    j["type"] = "ycsb";
    j["n_ops"] = n_ops;
    j["scan_pct"] = scan_pct;
    j["fields_per_record"] = fields_per_record;
    j["field_len_bytes"] = field_len_bytes;
    j["scan_len"] = {scan_len_min, scan_len_max};
    j["zipf_theta"] = zipf_theta;
    j["n_threads"] = n_threads;
    j["n_scopes"] = n_scopes;
    j["records_per_scope"] = records_per_scope;
    j["n_records"] = n_records;
    j["seed"] = seed;
    return j.dump(2);
}

YcsbConfig YcsbConfig::from_json(const std::string& text) {
    json j = json::parse(text);
    YcsbConfig c;
    if (j.contains("n_ops")) c.n_ops = j["n_ops"].get<uint32_t>();
    if (j.contains("scan_pct")) c.scan_pct = j["scan_pct"].get<double>();
    if (j.contains("fields_per_record")) c.fields_per_record = j["fields_per_record"].get<uint32_t>();
    if (j.contains("field_len_bytes")) c.field_len_bytes = j["field_len_bytes"].get<uint32_t>();
    if (j.contains("scan_len")) {
        c.scan_len_min = j["scan_len"][0].get<uint32_t>();
        c.scan_len_max = j["scan_len"][1].get<uint32_t>();
    }
    if (j.contains("zipf_theta")) c.zipf_theta = j["zipf_theta"].get<double>();
    if (j.contains("n_threads")) c.n_threads = j["n_threads"].get<uint32_t>();
    if (j.contains("n_scopes")) c.n_scopes = j["n_scopes"].get<uint32_t>();
    if (j.contains("records_per_scope")) c.records_per_scope = j["records_per_scope"].get<uint32_t>();
    if (j.contains("n_records")) c.n_records = j["n_records"].get<uint64_t>();
    if (j.contains("seed")) c.seed = j["seed"].get<uint64_t>();
    return c;
}

uint64_t YcsbConfig::hash() const { return fnv_str(to_json()); }

std::string QueryTemplate::to_json() const {
    json j;
    j["type"] = "query";
    j["kind"] = kind == Kind::FilterOnly ? "filter_only" : "full_query";
    j["n_scopes"] = n_scopes;
    j["pim_ops_per_scope"] = pim_ops_per_scope;
    j["selectivity"] = selectivity;
    j["repetitions"] = repetitions;
    j["n_threads"] = n_threads;
    j["records_per_scope"] = records_per_scope;
    j["seed"] = seed;
    return j.dump(2);
}

QueryTemplate QueryTemplate::from_json(const std::string& text) {
    json j = json::parse(text);
    QueryTemplate t;
    if (j.contains("kind")) {
        std::string k = j["kind"].get<std::string>();
        if (k == "filter_only")
            t.kind = Kind::FilterOnly;
        else if (k == "full_query")
            t.kind = Kind::FullQuery;
        else
            throw ConfigError("workload.kind: unknown query kind " + k);
    }
    if (j.contains("n_scopes")) t.n_scopes = j["n_scopes"].get<uint32_t>();
    if (j.contains("pim_ops_per_scope")) t.pim_ops_per_scope = j["pim_ops_per_scope"].get<uint32_t>();
    if (j.contains("selectivity")) t.selectivity = j["selectivity"].get<double>();
    if (j.contains("repetitions")) t.repetitions = j["repetitions"].get<uint32_t>();
    if (j.contains("n_threads")) t.n_threads = j["n_threads"].get<uint32_t>();
    if (j.contains("records_per_scope")) t.records_per_scope = j["records_per_scope"].get<uint32_t>();
    if (j.contains("seed")) t.seed = j["seed"].get<uint64_t>();
    return t;
}

uint64_t QueryTemplate::hash() const { return fnv_str(to_json()); }

WorkloadSpec WorkloadSpec::from_json(const std::string& text) {
    json j = json::parse(text);
    WorkloadSpec s;
    std::string ty = j.value("type", "ycsb");
    if (ty == "ycsb") {
        s.type = Type::Ycsb;
        s.ycsb = YcsbConfig::from_json(text);
    } else if (ty == "query") {
        s.type = Type::Query;
        s.query = QueryTemplate::from_json(text);
    } else {
        throw ConfigError("workload.type: unknown type " + ty);
    }
    return s;
}

std::string WorkloadSpec::to_json() const {
    return type == Type::Ycsb ? ycsb.to_json() : query.to_json();
}

uint64_t WorkloadSpec::hash() const {
    return type == Type::Ycsb ? ycsb.hash() : query.hash();
}

void GeneratedWorkload::apply_initial(MainMemory& mem) const {
    for (const auto& [scope, field, slot, value] : initial_fields)
        mem.scope_image(scope).set_field(field, slot, value);
}

std::string GeneratedWorkload::program_text() const {
    std::string out;
    for (size_t t = 0; t < programs.size(); ++t) {
        out += "thread " + std::to_string(t) + ":\n";
        out += programs[t].text();
    }
    return out;
}

namespace {

struct Emitter {
    Model model;
    AddressMap map;
    std::vector<ThreadProgram>* progs;
    std::vector<std::set<PhysAddr>> touched;  // per scope, software-flush baseline

    void touch(uint32_t scope, PhysAddr a) {
        if (model == Model::SwFlushBaseline) touched[scope].insert(map.line_base(a));
    }

    /// Coherency prologue before a scope's compute ops.
    void pre_pims(int thread, uint32_t scope) {
        ThreadProgram& p = (*progs)[thread];
        if (model == Model::SwFlushBaseline) {
            if (touched[scope].empty()) return;
            for (PhysAddr lb : touched[scope]) p.push(Stmt::flush(lb));
            touched[scope].clear();
            p.push(Stmt::mem_fence());
        } else if (model == Model::ScopeRelaxed) {
            p.push(Stmt::scope_fence(scope));
        }
    }

    /// Ordering between a scope's compute ops and its result reads.
    void pre_reads(int thread, uint32_t scope) {
        if (model == Model::ScopeRelaxed) (*progs)[thread].push(Stmt::scope_fence(scope));
    }
};

}  // namespace

GeneratedWorkload generate_ycsb(const YcsbConfig& cfg, Model model) {
    if (cfg.scan_pct < 0.0 || cfg.scan_pct > 1.0)
        throw ConfigError("ycsb.scan_pct: must be within [0,1]");
    if (cfg.n_threads == 0) throw ConfigError("ycsb.n_threads: must be > 0");
    if (cfg.n_scopes == 0) throw ConfigError("ycsb.n_scopes: must be > 0");
    if (cfg.scan_len_min == 0 || cfg.scan_len_min > cfg.scan_len_max)
        throw ConfigError("ycsb.scan_len: bad range");
    if (cfg.records_per_scope > 32768)
        throw ConfigError("ycsb.records_per_scope: exceeds the 32K per-scope limit");
    uint64_t capacity = static_cast<uint64_t>(cfg.n_scopes) * cfg.records_per_scope;
    uint64_t n_initial = cfg.n_records == 0 ? capacity / 2 : cfg.n_records;
    if (n_initial + cfg.n_ops > capacity)
        throw ConfigError("ycsb.n_records: initial records plus potential inserts exceed capacity");

    AddressMapConfig mc;
    mc.n_scopes = cfg.n_scopes;
    mc.records_per_scope = cfg.records_per_scope;
    mc.fields_per_record = cfg.fields_per_record;
    mc.field_len_bytes = cfg.field_len_bytes;
    AddressMap map(mc);

    RngStream op_rng(cfg.seed, "ycsb.op");
    RngStream len_rng(cfg.seed, "ycsb.len");
    RngStream field_rng(cfg.seed, "ycsb.field");
    RngStream base_rng(cfg.seed, "ycsb.base");
    RngStream val_rng(cfg.seed, "ycsb.val");
    RngStream shuffle_rng(cfg.seed, "ycsb.shuffle");
    Zipf zipf(n_initial, cfg.zipf_theta);

    std::vector<uint32_t> perm = shuffled_slots(capacity, shuffle_rng);

    GeneratedWorkload w;
    w.programs.assign(cfg.n_threads, {});
    Emitter em{model, map, &w.programs, {}};
    em.touched.assign(cfg.n_scopes, {});

    // initial database: key k lives at a shuffled global slot
    std::vector<std::pair<uint32_t, uint32_t>> key_home(capacity);  // key -> (scope, slot)
    for (uint64_t k = 0; k < capacity; ++k) {
        uint32_t gs = perm[k];
        key_home[k] = {gs / cfg.records_per_scope, gs % cfg.records_per_scope};
    }
    std::vector<std::vector<bool>> used(cfg.n_scopes,
                                        std::vector<bool>(cfg.records_per_scope, false));
    for (uint64_t k = 0; k < n_initial; ++k) {
        auto [sc, slot] = key_home[k];
        w.initial_fields.emplace_back(sc, 0, slot, k);
        for (uint32_t f = 1; f < cfg.fields_per_record; ++f)
            w.initial_fields.emplace_back(sc, f, slot, val_rng.next());
        used[sc][slot] = true;
    }
    for (uint32_t sc = 0; sc < cfg.n_scopes; ++sc)
        for (uint32_t slot = 0; slot < cfg.records_per_scope; ++slot)
            if (!used[sc][slot]) w.initial_fields.emplace_back(sc, 0, slot, kUnusedKeySentinel);

    uint32_t chunks = map.mask_chunks();
    uint64_t count = n_initial;
    auto owner_of_scope = [&](uint32_t s) { return static_cast<int>(s % cfg.n_threads); };

    for (uint32_t op = 0; op < cfg.n_ops; ++op) {
        bool is_scan = op_rng.uniform01() < cfg.scan_pct;
        if (is_scan) {
            w.logical_scans++;
            uint64_t base = zipf.draw(base_rng);
            uint64_t len = static_cast<uint64_t>(
                len_rng.uniform(cfg.scan_len_min, cfg.scan_len_max));
            uint64_t hi = std::min(base + len, count);
            uint32_t field = static_cast<uint32_t>(
                field_rng.uniform(0, static_cast<int64_t>(cfg.fields_per_record) - 1));
            for (uint32_t s = 0; s < cfg.n_scopes; ++s) {
                int t = owner_of_scope(s);
                ThreadProgram& p = w.programs[t];
                em.pre_pims(t, s);
                PimOpDescriptor d;
                d.scope_index = s;
                d.field_id = 0;
                d.opcode = PimOpcode::FilterLt;
                d.immediate = hi;
                d.dst_mask = 0;
                p.push(Stmt::pim_op(d));
                d.immediate = base;
                d.dst_mask = 1;
                p.push(Stmt::pim_op(d));
                PimOpDescriptor n;
                n.scope_index = s;
                n.opcode = PimOpcode::MaskNot;
                n.src_masks[0] = 1;
                n.dst_mask = 2;
                p.push(Stmt::pim_op(n));
                PimOpDescriptor a;
                a.scope_index = s;
                a.opcode = PimOpcode::MaskAnd;
                a.src_masks[0] = 0;
                a.src_masks[1] = 2;
                a.dst_mask = 3;
                p.push(Stmt::pim_op(a));
                em.pre_reads(t, s);
                int reg = 0;
                for (uint32_t j = 0; j < chunks; ++j) {
                    PhysAddr ma = map.mask_line_addr(s, 3, j);
                    p.push(Stmt::load(ma, reg));
                    reg = (reg + 1) % 8;
                    em.touch(s, ma);
                }
                for (uint64_t k = base; k < hi; ++k) {
                    if (key_home[k].first != s) continue;
                    PhysAddr fa = map.field_addr(s, field, key_home[k].second);
                    p.push(Stmt::load(fa, reg));
                    reg = (reg + 1) % 8;
                    em.touch(s, fa);
                }
            }
        } else {
            w.logical_inserts++;
            uint64_t k = count++;
            auto [sc, slot] = key_home[k];
            int t = owner_of_scope(sc);
            ThreadProgram& p = w.programs[t];
            p.push(Stmt::store(map.field_addr(sc, 0, slot), k));
            em.touch(sc, map.field_addr(sc, 0, slot));
            for (uint32_t f = 1; f < cfg.fields_per_record; ++f) {
                PhysAddr fa = map.field_addr(sc, f, slot);
                p.push(Stmt::store(fa, val_rng.next()));
                em.touch(sc, fa);
            }
        }
    }
    w.workload_hash = cfg.hash();
    return w;
}

GeneratedWorkload generate_query(const QueryTemplate& tpl, Model model) {
    if (tpl.n_scopes == 0) throw ConfigError("query.n_scopes: must be > 0");
    if (tpl.pim_ops_per_scope == 0) throw ConfigError("query.pim_ops_per_scope: must be > 0");
    AddressMapConfig mc;
    mc.n_scopes = tpl.n_scopes;
    mc.records_per_scope = tpl.records_per_scope;
    AddressMap map(mc);

    GeneratedWorkload w;
    w.programs.assign(tpl.n_threads, {});
    Emitter em{model, map, &w.programs, {}};
    em.touched.assign(tpl.n_scopes, {});

    for (uint32_t s = 0; s < tpl.n_scopes; ++s)
        for (uint32_t r = 0; r < tpl.records_per_scope; ++r)
            w.initial_fields.emplace_back(s, 0, r, r);

    uint64_t sel_imm = static_cast<uint64_t>(tpl.selectivity *
                                             static_cast<double>(tpl.records_per_scope));
    uint32_t chunks = map.mask_chunks();
    bool full = tpl.kind == QueryTemplate::Kind::FullQuery;

    for (uint32_t rep = 0; rep < tpl.repetitions; ++rep) {
        for (uint32_t s = 0; s < tpl.n_scopes; ++s) {
            int t = static_cast<int>(s % tpl.n_threads);
            ThreadProgram& p = w.programs[t];
            em.pre_pims(t, s);
            for (uint32_t i = 0; i < tpl.pim_ops_per_scope; ++i) {
                PimOpDescriptor d;
                d.scope_index = s;
                d.field_id = 0;
                d.opcode = PimOpcode::FilterLt;
                d.immediate = sel_imm + i;  // slight variation per op
                d.dst_mask = static_cast<int>(i % 2);
                p.push(Stmt::pim_op(d));
            }
            if (full) {
                PimOpDescriptor a;
                a.scope_index = s;
                a.opcode = PimOpcode::MaskAnd;
                a.src_masks[0] = 0;
                a.src_masks[1] = tpl.pim_ops_per_scope > 1 ? 1 : 0;
                a.dst_mask = 2;
                p.push(Stmt::pim_op(a));
                PimOpDescriptor g;
                g.scope_index = s;
                g.opcode = PimOpcode::Aggregate;
                g.field_id = 0;
                g.src_masks[0] = 2;
                p.push(Stmt::pim_op(g));
            }
            em.pre_reads(t, s);
            if (full) {
                PhysAddr aa = map.agg_addr(s);
                p.push(Stmt::load(aa, 0));
                em.touch(s, aa);
            } else {
                int last_mask = static_cast<int>((tpl.pim_ops_per_scope - 1) % 2);
                int reg = 0;
                for (uint32_t j = 0; j < chunks; ++j) {
                    PhysAddr ma = map.mask_line_addr(s, static_cast<uint32_t>(last_mask), j);
                    p.push(Stmt::load(ma, reg));
                    reg = (reg + 1) % 8;
                    em.touch(s, ma);
                }
            }
        }
    }
    w.workload_hash = tpl.hash();
    return w;
}

GeneratedWorkload generate_workload(const WorkloadSpec& spec, Model model) {
    return spec.type == WorkloadSpec::Type::Ycsb ? generate_ycsb(spec.ycsb, model)
                                                 : generate_query(spec.query, model);
}

// ---------------------------------------------------------------------------
// oracle
// ---------------------------------------------------------------------------

OracleDb::OracleDb(const AddressMap& map) : map_(map) {
    scopes_.resize(map.cfg().n_scopes);
    for (auto& s : scopes_) {
        s.fields.assign(map.cfg().fields_per_record,
                        std::vector<uint64_t>(map.cfg().records_per_scope, 0));
        s.masks.assign(AddressMap::kNumMaskRegs,
                       std::vector<bool>(map.cfg().records_per_scope, false));
    }
}

uint64_t OracleDb::read_u64(PhysAddr a) const {
    auto d = map_.decode(a);
    const ScopeState& s = scopes_[d.scope_idx];
    using R = AddressMap::Decoded::Region;
    switch (d.region) {
        case R::MaskStripe: {
            uint64_t out = 0;
            for (uint32_t i = 0; i < 64; ++i)
                if (s.masks[d.mask_reg][d.bit_offset + i]) out |= 1ull << i;
            return out;
        }
        case R::AggSlot:
            return s.agg;
        case R::Field:
            if (d.byte_in_slot == 0) return s.fields[d.field][d.slot];
            return 0;
        case R::Spare: {
            auto it = s.spare.find(d.offset);
            return it == s.spare.end() ? 0 : it->second;
        }
    }
    return 0;
}

void OracleDb::write_u64(PhysAddr a, uint64_t v) {
    auto d = map_.decode(a);
    ScopeState& s = scopes_[d.scope_idx];
    using R = AddressMap::Decoded::Region;
    switch (d.region) {
        case R::MaskStripe:
            for (uint32_t i = 0; i < 64; ++i)
                s.masks[d.mask_reg][d.bit_offset + i] = (v >> i) & 1;
            return;
        case R::AggSlot:
            s.agg = v;
            return;
        case R::Field:
            if (d.byte_in_slot == 0) s.fields[d.field][d.slot] = v;
            return;
        case R::Spare:
            s.spare[d.offset] = v;
            return;
    }
}

void OracleDb::apply_pim(const PimOpDescriptor& op) {
    ScopeState& s = scopes_[op.scope_index];
    uint32_t n = map_.cfg().records_per_scope;
    switch (op.opcode) {
        case PimOpcode::FilterEq:
            for (uint32_t r = 0; r < n; ++r)
                s.masks[op.dst_mask][r] = s.fields[op.field_id][r] == op.immediate;
            return;
        case PimOpcode::FilterLt:
            for (uint32_t r = 0; r < n; ++r)
                s.masks[op.dst_mask][r] = s.fields[op.field_id][r] < op.immediate;
            return;
        case PimOpcode::MaskAnd:
            for (uint32_t r = 0; r < n; ++r)
                s.masks[op.dst_mask][r] =
                    s.masks[op.src_masks[0]][r] && s.masks[op.src_masks[1]][r];
            return;
        case PimOpcode::MaskOr:
            for (uint32_t r = 0; r < n; ++r)
                s.masks[op.dst_mask][r] =
                    s.masks[op.src_masks[0]][r] || s.masks[op.src_masks[1]][r];
            return;
        case PimOpcode::MaskNot:
            for (uint32_t r = 0; r < n; ++r) s.masks[op.dst_mask][r] = !s.masks[op.src_masks[0]][r];
            return;
        case PimOpcode::Aggregate: {
            uint64_t sum = 0;
            for (uint32_t r = 0; r < n; ++r)
                if (s.masks[op.src_masks[0]][r]) sum += s.fields[op.field_id][r];
            s.agg = sum;
            return;
        }
    }
}

std::vector<std::string> OracleDb::compare(const MainMemory& mem, bool fields_only) const {
    std::vector<std::string> issues;
    auto note = [&](const std::string& s) {
        if (issues.size() < 16) issues.push_back(s);
    };
    for (uint32_t sc = 0; sc < scopes_.size(); ++sc) {
        const ScopeState& o = scopes_[sc];
        const ScopeImage& img = mem.scope_image(sc);
        for (uint32_t f = 0; f < o.fields.size(); ++f)
            for (uint32_t r = 0; r < o.fields[f].size(); ++r)
                if (o.fields[f][r] != img.field_value(f, r))
                    note("scope " + std::to_string(sc) + " field " + std::to_string(f) + " slot " +
                         std::to_string(r) + ": oracle " + std::to_string(o.fields[f][r]) +
                         " vs sim " + std::to_string(img.field_value(f, r)));
        if (fields_only) continue;
        for (uint32_t m = 0; m < AddressMap::kNumMaskRegs; ++m)
            for (uint32_t r = 0; r < o.masks[m].size(); ++r)
                if (o.masks[m][r] != img.mask_bit(m, r))
                    note("scope " + std::to_string(sc) + " mask m" + std::to_string(m) + " bit " +
                         std::to_string(r) + " differs");
        if (o.agg != img.aggregate_result())
            note("scope " + std::to_string(sc) + " aggregate differs: oracle " +
                 std::to_string(o.agg) + " vs sim " + std::to_string(img.aggregate_result()));
    }
    return issues;
}

OracleResult reference_execute(const GeneratedWorkload& w, const AddressMap& map) {
    OracleResult res;
    res.db = std::make_shared<OracleDb>(map);
    for (const auto& [scope, field, slot, value] : w.initial_fields)
        res.db->write_u64(map.field_addr(scope, field, slot), value);
    for (size_t t = 0; t < w.programs.size(); ++t) {
        const ThreadProgram& p = w.programs[t];
        for (size_t i = 0; i < p.stmts.size(); ++i) {
            const Stmt& s = p.stmts[i];
            switch (s.kind) {
                case Stmt::Kind::Load:
                    res.load_values[{static_cast<int>(t), i}] = res.db->read_u64(s.addr);
                    break;
                case Stmt::Kind::Store:
                    res.db->write_u64(s.addr, s.value);
                    break;
                case Stmt::Kind::PimOp:
                    res.db->apply_pim(s.pim);
                    break;
                default:
                    break;  // fences, flushes, delays have no functional effect
            }
        }
    }
    return res;
}

}  // namespace pimsim
