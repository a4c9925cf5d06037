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

#include <deque>
#include <functional>
#include <unordered_map>
#include <unordered_set>

#include "pimsim/config.hpp"
#include "pimsim/engine.hpp"
#include "pimsim/mem.hpp"
#include "pimsim/net.hpp"

namespace pimsim {

/// Functional state of one scope: per-field value arrays (bit-sliced layout is
/// abstracted to one value per record), eight mask registers with one bit per
/// record, and an aggregate result slot. Byte-addressable through the scope's
/// address layout so loads, stores and compute ops see the same state.
class ScopeImage {
  public:
    ScopeImage() = default;
    ScopeImage(const AddressMap* map, uint32_t scope_idx);

    uint64_t read_u64(PhysAddr a) const;
    void write_u64(PhysAddr a, uint64_t v);
    void read_bytes(PhysAddr a, uint8_t* out, uint32_t n) const;
    void write_bytes(PhysAddr a, const uint8_t* in, uint32_t n);

    void apply(const PimOpDescriptor& op);

    uint64_t field_value(uint32_t f, uint32_t slot) const { return fields_[f][slot]; }
    void set_field(uint32_t f, uint32_t slot, uint64_t v) { fields_[f][slot] = v; }
    bool mask_bit(uint32_t m, uint32_t rec) const {
        return (masks_[m][rec / 64] >> (rec % 64)) & 1;
    }
    uint64_t mask_word(uint32_t m, uint32_t word) const { return masks_[m][word]; }
    uint64_t aggregate_result() const { return agg_; }

    bool operator==(const ScopeImage& o) const {
        return fields_ == o.fields_ && masks_ == o.masks_ && agg_ == o.agg_ && spare_ == o.spare_;
    }

  private:
    const AddressMap* map_ = nullptr;
    uint32_t scope_idx_ = 0;
    uint32_t cap_ = 0;
    std::vector<std::vector<uint64_t>> fields_;  // [field][slot] -> value
    std::vector<std::vector<uint64_t>> masks_;   // [reg][word]
    uint64_t agg_ = 0;
    std::unordered_map<uint64_t, uint64_t> spare_;  // 8-byte-aligned offset -> word
};

/// Byte-addressable system memory: scope images for the PIM region, a sparse
/// word store for everything else.
class MainMemory {
  public:
    explicit MainMemory(const AddressMap& map);

    const AddressMap& map() const { return map_; }
    ScopeImage& scope_image(uint32_t idx) { return scopes_[idx]; }
    const ScopeImage& scope_image(uint32_t idx) const { return scopes_[idx]; }

    uint64_t read_u64(PhysAddr a) const;
    void write_u64(PhysAddr a, uint64_t v);
    std::vector<uint8_t> read_line(PhysAddr line_base, uint32_t line_size) const;
    void write_line(PhysAddr line_base, const std::vector<uint8_t>& data);
    void apply_pim(const PimOpDescriptor& op) { scopes_[op.scope_index].apply(op); }

  private:
    AddressMap map_;
    std::vector<ScopeImage> scopes_;
    std::unordered_map<uint64_t, uint64_t> dram_;  // aligned addr -> word
};

/// Timing model of the in-memory compute module: a bounded op buffer feeding
/// per-scope FIFOs. A scope executes one op at a time and blocks loads/stores
/// to itself while busy; distinct scopes proceed in parallel.
class PimModule {
  public:
    struct Stats {
        uint64_t ops_executed = 0;
        uint64_t occupancy_sum = 0;       // queued ops sampled at op arrival
        uint64_t unique_scopes_sum = 0;   // distinct queued scopes at op arrival
        uint64_t arrival_samples = 0;
        uint64_t max_occupancy = 0;
    };

    PimModule(Engine& eng, int comp_id, const SimConfig& cfg, MainMemory& mem);

    /// Controller-side check before forwarding an op (back-pressure point).
    bool can_accept_op() const {
        return unbounded_ || queued_ops_ < capacity_;
    }
    void op_arrive(Msg&& m);
    void access_arrive(Msg&& m);  // MemRead / MemWrite to PIM addresses

    void set_respond(std::function<void(Msg&&)> f) { respond_ = std::move(f); }
    /// Fired whenever buffer space frees up (controller retries stalled ops).
    void set_space_freed(std::function<void()> f) { space_freed_ = std::move(f); }
    /// Fired at the instant an op's effects are applied (invariant hook);
    /// the message carries the op and its LLC ordering stamp.
    void set_on_apply(std::function<void(const Msg&)> f) { on_apply_ = std::move(f); }

    const Stats& stats() const { return stats_; }
    bool idle() const;

  private:
    struct Entry {
        Msg msg;
        bool is_op;
    };
    struct ScopeQueue {
        std::deque<Entry> q;
        SimTime busy_until = 0;
        bool executing = false;
    };

    void kick(uint32_t scope);
    void start_head(uint32_t scope);

    Engine& eng_;
    int comp_id_;
    const SimConfig& cfg_;
    MainMemory& mem_;
    std::vector<ScopeQueue> scopes_;
    uint64_t queued_ops_ = 0;
    uint32_t capacity_;
    bool unbounded_;
    Stats stats_;
    std::function<void(Msg&&)> respond_;
    std::function<void()> space_freed_;
    std::function<void(const Msg&)> on_apply_;
};

}  // namespace pimsim
