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

#include <cstdint>
#include <string>

#include "pimsim/mem.hpp"

namespace pimsim {

enum class Model : uint8_t {
    Atomic,
    Store,
    Scope,
    ScopeRelaxed,
    NaiveBaseline,
    SwFlushBaseline,
    UncacheableBaseline,
};

const char* model_name(Model m);
std::optional<Model> model_from(const std::string& s);
inline bool model_is_baseline(Model m) {
    return m == Model::NaiveBaseline || m == Model::SwFlushBaseline ||
           m == Model::UncacheableBaseline;
}
/// Models whose PimOps are acknowledged by the memory controller.
inline bool model_uses_acks(Model m) {
    return m == Model::Atomic || m == Model::Store || m == Model::Scope;
}

struct CacheGeom {
    uint64_t size_bytes = 0;
    uint32_t ways = 0;
    uint32_t line = 64;
    uint32_t latency = 1;
    uint32_t sets() const { return static_cast<uint32_t>(size_bytes / ways / line); }
};

struct ScopeBufferGeom {
    uint32_t sets = 0;
    uint32_t ways = 0;
};

struct PimLatencyTable {
    uint64_t filter_eq = 1024;
    uint64_t filter_lt = 1024;
    uint64_t mask_and = 64;
    uint64_t mask_or = 64;
    uint64_t mask_not = 64;
    uint64_t aggregate = 2048;

    uint64_t of(PimOpcode op) const {
        switch (op) {
            case PimOpcode::FilterEq: return filter_eq;
            case PimOpcode::FilterLt: return filter_lt;
            case PimOpcode::MaskAnd: return mask_and;
            case PimOpcode::MaskOr: return mask_or;
            case PimOpcode::MaskNot: return mask_not;
            case PimOpcode::Aggregate: return aggregate;
        }
        return 0;
    }
};

/// Whole-simulator configuration. Defaults model the reference system: six
/// x86-like cores, 16KB 4-way private L1s, a shared inclusive 2MB 16-way LLC,
/// 2MB scopes, and a 64x4 LLC / 16x1 L1 scope buffer.
struct SimConfig {
    uint32_t cores = 6;
    CacheGeom l1{16 * 1024, 4, 64, 2};
    CacheGeom llc{2 * 1024 * 1024, 16, 64, 8};
    ScopeBufferGeom sb_llc{64, 4};
    ScopeBufferGeom sb_l1{16, 1};

    // scan cost model
    uint32_t scan_c_set = 1;
    uint32_t scan_c_line = 4;
    uint32_t scan_c_fixed = 4;

    uint32_t net_base_latency = 8;
    uint32_t net_jitter_max = 8;

    uint32_t memctrl_queue_depth = 32;
    uint32_t dram_latency = 60;

    uint32_t pim_buffer_capacity = 16;
    bool pim_buffer_unbounded = false;
    bool pim_zero_latency = false;
    PimLatencyTable pim_latency;
    uint64_t scope_size = 2ull << 20;
    uint32_t n_scopes = 16;
    uint32_t records_per_scope = 4096;
    uint32_t fields_per_record = 5;
    uint32_t field_len_bytes = 10;

    uint32_t write_buffer_depth = 8;
    Model model = Model::Scope;
    bool pimfence_orders_all = true;

    uint64_t invariant_check_interval = 10000;
    uint64_t watchdog_events = 400000000ull;
    uint64_t seed = 1;

    uint64_t pim_op_latency(PimOpcode op) const {
        return pim_zero_latency ? 0 : pim_latency.of(op);
    }
    AddressMapConfig address_map_config() const {
        AddressMapConfig a;
        a.scope_size = scope_size;
        a.n_scopes = n_scopes;
        a.line_size = l1.line;
        a.records_per_scope = records_per_scope;
        a.fields_per_record = fields_per_record;
        a.field_len_bytes = field_len_bytes;
        return a;
    }

    void validate() const;
    std::string to_json() const;
    static SimConfig from_json(const std::string& text);
    /// Stable hash of the canonical JSON form.
    uint64_t hash() const;
};

}  // namespace pimsim
