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

#pragma once

#include "pimsim/config.hpp"
#include "pimsim/pim.hpp"
#include "pimsim/program.hpp"

namespace pimsim {

/// Key-value scan/insert workload shape: mostly range scans over a keyed
/// relation spread across all scopes, plus occasional record inserts.
struct YcsbConfig {
    uint32_t n_ops = 1000;
    double scan_pct = 0.95;  // insert_pct = 1 - scan_pct
    uint32_t fields_per_record = 5;
    uint32_t field_len_bytes = 10;
    uint32_t scan_len_min = 1;
    uint32_t scan_len_max = 100;
    double zipf_theta = 0.99;
    uint32_t n_threads = 4;
    uint32_t n_scopes = 16;
    uint32_t records_per_scope = 4096;  // capacity per scope
    uint64_t n_records = 0;             // initial records; 0 -> half capacity
    uint64_t seed = 7;

    std::string to_json() const;
    static YcsbConfig from_json(const std::string& text);
    uint64_t hash() const;
};

struct QueryTemplate {
    enum class Kind : uint8_t { FilterOnly, FullQuery } kind = Kind::FilterOnly;
    uint32_t n_scopes = 4;
    uint32_t pim_ops_per_scope = 3;
    double selectivity = 0.1;
    uint32_t repetitions = 10;
    uint32_t n_threads = 4;
    uint32_t records_per_scope = 4096;
    uint64_t seed = 7;

    std::string to_json() const;
    static QueryTemplate from_json(const std::string& text);
    uint64_t hash() const;
};

/// Parses either workload form (distinguished by "type").
struct WorkloadSpec {
    enum class Type : uint8_t { Ycsb, Query } type = Type::Ycsb;
    YcsbConfig ycsb;
    QueryTemplate query;
    static WorkloadSpec from_json(const std::string& text);
    std::string to_json() const;
    uint64_t hash() const;
    uint32_t n_scopes() const {
        return type == Type::Ycsb ? ycsb.n_scopes : query.n_scopes;
    }
    uint32_t n_threads() const {
        return type == Type::Ycsb ? ycsb.n_threads : query.n_threads;
    }
    uint32_t records_per_scope() const {
        return type == Type::Ycsb ? ycsb.records_per_scope : query.records_per_scope;
    }
};

struct GeneratedWorkload {
    std::vector<ThreadProgram> programs;
    std::vector<std::tuple<uint32_t, uint32_t, uint32_t, uint64_t>> initial_fields;
    uint64_t workload_hash = 0;
    uint64_t logical_scans = 0;
    uint64_t logical_inserts = 0;

    void apply_initial(MainMemory& mem) const;
    std::string program_text() const;
};

/// Emits per-thread programs for the scan/insert workload. The model decides
/// coherency plumbing: explicit line flushes for the software-flush baseline,
/// scope fences for the relaxed model.
GeneratedWorkload generate_ycsb(const YcsbConfig& cfg, Model model);

GeneratedWorkload generate_query(const QueryTemplate& tpl, Model model);

GeneratedWorkload generate_workload(const WorkloadSpec& spec, Model model);

// ---------------------------------------------------------------------------
// Reference oracle: naive per-record implementation of the compute ops over
// its own state, executed per thread in program order. Independent of the
// simulator's bit-parallel functional model.
// ---------------------------------------------------------------------------

class OracleDb {
  public:
    OracleDb(const AddressMap& map);

    uint64_t read_u64(PhysAddr a) const;
    void write_u64(PhysAddr a, uint64_t v);
    void apply_pim(const PimOpDescriptor& op);

    /// Mismatch descriptions comparing the oracle against flattened simulator
    /// memory; empty means equal. `fields_only` restricts the comparison to
    /// the field regions (used for the no-coherency baseline).
    std::vector<std::string> compare(const MainMemory& mem, bool fields_only) const;

  private:
    struct ScopeState {
        std::vector<std::vector<uint64_t>> fields;
        std::vector<std::vector<bool>> masks;
        uint64_t agg = 0;
        std::map<uint64_t, uint64_t> spare;
    };
    const AddressMap& map_;
    std::vector<ScopeState> scopes_;
};

struct OracleResult {
    std::map<std::pair<int, uint64_t>, uint64_t> load_values;  // (thread, seq) -> value
    std::shared_ptr<OracleDb> db;
};

/// Executes the programs sequentially (thread 0 fully, then thread 1, ...).
/// Generators keep cross-thread state disjoint per scope, so any model's
/// execution must agree with this order.
OracleResult reference_execute(const GeneratedWorkload& w, const AddressMap& map);

}  // namespace pimsim
