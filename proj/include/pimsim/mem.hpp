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
#include <optional>
#include <string>
#include <vector>

#include "pimsim/engine.hpp"

namespace pimsim {

using PhysAddr = uint64_t;

/// A fixed, non-overlapping physical address range that bounds the effects of
/// one in-memory compute op. Scopes partition the PIM region.
struct ScopeId {
    uint32_t index = 0;
    PhysAddr base = 0;
    uint64_t size_bytes = 0;

    bool operator==(const ScopeId& o) const { return index == o.index; }
};

/// Six-opcode bulk-bitwise ISA: per-record filters write a mask register,
/// mask ops combine registers, aggregate reduces selected field values.
enum class PimOpcode : uint8_t { FilterEq, FilterLt, MaskAnd, MaskOr, MaskNot, Aggregate };

const char* pim_opcode_name(PimOpcode op);
std::optional<PimOpcode> pim_opcode_from(const std::string& s);

struct PimOpDescriptor {
    uint32_t scope_index = 0;
    PimOpcode opcode = PimOpcode::FilterEq;
    int field_id = -1;            // filters / aggregate
    uint64_t immediate = 0;       // filters
    int dst_mask = -1;            // filters / mask ops (aggregate writes the result slot)
    int src_masks[2] = {-1, -1};  // mask ops / aggregate
    uint64_t latency_cycles = 0;  // resolved from the opcode table at issue
};

enum class ReqKind : uint8_t {
    Load,
    Store,
    LineFlush,
    PimOp,
    PimAck,
    PimFence,
    ScopeFence,
    InvalidateProbe,
    WritebackData,
};

const char* req_kind_name(ReqKind k);
std::optional<ReqKind> req_kind_from(const std::string& s);

/// Program-level memory request as it appears in trace files. PimOp and
/// ScopeFence carry a scope, never a raw address.
struct MemRequest {
    ReqKind kind = ReqKind::Load;
    PhysAddr addr = 0;        // Load/Store/LineFlush/InvalidateProbe/WritebackData
    uint32_t scope_index = 0; // PimOp/ScopeFence/PimAck/PimFence
    int thread_id = -1;
    int core_id = -1;
    uint64_t program_seq = 0;
    bool pim_enabled = false;
    uint64_t data = 0;                      // Store payload (8-byte value)
    std::optional<PimOpDescriptor> pim_op;  // PimOp payload

    std::string to_trace_json(SimTime t) const;
    static MemRequest from_trace_json(const std::string& line, SimTime* t_out = nullptr);
};

// ---------------------------------------------------------------------------
// Address map: scope partition plus the in-scope layout (mask stripe,
// aggregate slot, padded field slots).
// ---------------------------------------------------------------------------

struct AddressMapConfig {
    PhysAddr pim_base = 0x40000000;  // non-PIM memory sits below
    uint64_t scope_size = 2ull << 20;
    uint32_t n_scopes = 16;
    uint32_t line_size = 64;
    uint32_t records_per_scope = 4096;  // capacity; power of two multiple of 512
    uint32_t fields_per_record = 5;
    uint32_t field_len_bytes = 10;  // value bytes; slots are padded to 16
};

class AddressMap {
  public:
    static constexpr uint32_t kNumMaskRegs = 8;
    static constexpr uint32_t kFieldStride = 16;
    static constexpr uint64_t kAggOffset = 48 * 1024;
    static constexpr uint64_t kFieldsOffset = 64 * 1024;

    AddressMap() : AddressMap(AddressMapConfig{}) {}
    explicit AddressMap(const AddressMapConfig& cfg);

    const AddressMapConfig& cfg() const { return cfg_; }
    PhysAddr pim_base() const { return cfg_.pim_base; }
    PhysAddr pim_end() const { return cfg_.pim_base + cfg_.scope_size * cfg_.n_scopes; }
    uint64_t line_size() const { return cfg_.line_size; }
    uint64_t line_of(PhysAddr a) const { return a / cfg_.line_size; }
    PhysAddr line_base(PhysAddr a) const { return a - a % cfg_.line_size; }

    bool in_pim(PhysAddr a) const { return a >= pim_base() && a < pim_end(); }

    /// Unique scope containing addr, or nullopt outside PIM memory.
    std::optional<ScopeId> scope_of(PhysAddr a) const {
        if (!in_pim(a)) return std::nullopt;
        uint32_t idx = static_cast<uint32_t>((a - pim_base()) / cfg_.scope_size);
        return scope(idx);
    }
    ScopeId scope(uint32_t idx) const {
        return ScopeId{idx, cfg_.pim_base + static_cast<uint64_t>(idx) * cfg_.scope_size,
                       cfg_.scope_size};
    }

    uint32_t mask_chunks() const { return cfg_.records_per_scope / 512; }

    /// Mask register m, 512-record chunk j: a regular non-contiguous stripe
    /// (stride 8 lines between chunks) so result lines cluster in a subset of
    /// cache sets.
    PhysAddr mask_line_addr(uint32_t scope_idx, uint32_t m, uint32_t chunk) const {
        return scope(scope_idx).base + static_cast<uint64_t>(m) * cfg_.line_size +
               static_cast<uint64_t>(chunk) * (cfg_.line_size * 8);
    }
    PhysAddr agg_addr(uint32_t scope_idx) const { return scope(scope_idx).base + kAggOffset; }
    PhysAddr field_addr(uint32_t scope_idx, uint32_t field, uint32_t slot) const {
        return scope(scope_idx).base + kFieldsOffset +
               (static_cast<uint64_t>(field) * cfg_.records_per_scope + slot) * kFieldStride;
    }

    /// Inverse of the in-scope layout; used by the functional memory model.
    struct Decoded {
        enum class Region { MaskStripe, AggSlot, Field, Spare } region;
        uint32_t scope_idx = 0;
        uint32_t mask_reg = 0;   // MaskStripe
        uint64_t bit_offset = 0; // MaskStripe: first record bit covered by byte
        uint32_t field = 0;      // Field
        uint32_t slot = 0;       // Field
        uint32_t byte_in_slot = 0;
        uint64_t offset = 0;     // Spare / AggSlot byte offset in scope
    };
    Decoded decode(PhysAddr a) const;

  private:
    AddressMapConfig cfg_;
};

bool same_scope(const MemRequest& a, const MemRequest& b, const AddressMap& map);

}  // namespace pimsim
