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

#include "pimsim/pim.hpp"

#include <bit>
#include <cstring>

namespace pimsim {

ScopeImage::ScopeImage(const AddressMap* map, uint32_t scope_idx)
    : map_(map), scope_idx_(scope_idx), cap_(map->cfg().records_per_scope) {
    fields_.assign(map->cfg().fields_per_record, std::vector<uint64_t>(cap_, 0));
    masks_.assign(AddressMap::kNumMaskRegs, std::vector<uint64_t>(cap_ / 64, 0));
}

uint64_t ScopeImage::read_u64(PhysAddr a) const {
    if (a % 8 != 0) throw SimBug("ScopeImage::read_u64: unaligned address");
    auto d = map_->decode(a);
    using R = AddressMap::Decoded::Region;
    switch (d.region) {
        case R::MaskStripe:
            return masks_[d.mask_reg][d.bit_offset / 64];
        case R::AggSlot:
            return agg_;
        case R::Field: {
            if (d.byte_in_slot == 0) return fields_[d.field][d.slot];
            auto it = spare_.find(a - map_->scope(scope_idx_).base);
            return it == spare_.end() ? 0 : it->second;
        }
        case R::Spare: {
            auto it = spare_.find(d.offset);
            return it == spare_.end() ? 0 : it->second;
        }
    }
    return 0;
}

void ScopeImage::write_u64(PhysAddr a, uint64_t v) {
    if (a % 8 != 0) throw SimBug("ScopeImage::write_u64: unaligned address");
    auto d = map_->decode(a);
    using R = AddressMap::Decoded::Region;
    switch (d.region) {
        case R::MaskStripe:
            masks_[d.mask_reg][d.bit_offset / 64] = v;
            return;
        case R::AggSlot:
            agg_ = v;
            return;
        case R::Field:
            if (d.byte_in_slot == 0) {
                fields_[d.field][d.slot] = v;
            } else if (v != 0) {
                spare_[a - map_->scope(scope_idx_).base] = v;
            } else {
                spare_.erase(a - map_->scope(scope_idx_).base);
            }
            return;
        case R::Spare:
            if (v != 0)
                spare_[d.offset] = v;
            else
                spare_.erase(d.offset);
            return;
    }
}

void ScopeImage::read_bytes(PhysAddr a, uint8_t* out, uint32_t n) const {
    PhysAddr w = a & ~7ull;
    uint32_t done = 0;
    while (done < n) {
        uint64_t word = read_u64(w);
        uint8_t bytes[8];
        std::memcpy(bytes, &word, 8);
        for (uint32_t i = (done == 0 ? static_cast<uint32_t>(a - w) : 0); i < 8 && done < n; ++i)
            out[done++] = bytes[i];
        w += 8;
    }
}

void ScopeImage::write_bytes(PhysAddr a, const uint8_t* in, uint32_t n) {
    PhysAddr w = a & ~7ull;
    uint32_t done = 0;
    while (done < n) {
        uint64_t word = read_u64(w);
        uint8_t bytes[8];
        std::memcpy(bytes, &word, 8);
        for (uint32_t i = (done == 0 ? static_cast<uint32_t>(a - w) : 0); i < 8 && done < n; ++i)
            bytes[i] = in[done++];
        std::memcpy(&word, bytes, 8);
        write_u64(w, word);
        w += 8;
    }
}

void ScopeImage::apply(const PimOpDescriptor& op) {
    uint32_t words = cap_ / 64;
    auto check_mask = [&](int m) {
        if (m < 0 || m >= static_cast<int>(AddressMap::kNumMaskRegs))
            throw ConfigError("pim op: mask register out of range");
    };
    auto check_field = [&](int f) {
        if (f < 0 || f >= static_cast<int>(fields_.size()))
            throw ConfigError("pim op: field index out of range");
    };
    switch (op.opcode) {
        case PimOpcode::FilterEq:
        case PimOpcode::FilterLt: {
            check_field(op.field_id);
            check_mask(op.dst_mask);
            const auto& col = fields_[op.field_id];
            auto& dst = masks_[op.dst_mask];
            bool lt = op.opcode == PimOpcode::FilterLt;
            for (uint32_t w = 0; w < words; ++w) {
                uint64_t bits = 0;
                uint32_t base = w * 64;
                for (uint32_t i = 0; i < 64; ++i) {
                    bool hit = lt ? (col[base + i] < op.immediate) : (col[base + i] == op.immediate);
                    bits |= (static_cast<uint64_t>(hit) << i);
                }
                dst[w] = bits;
            }
            break;
        }
        case PimOpcode::MaskAnd:
        case PimOpcode::MaskOr: {
            check_mask(op.src_masks[0]);
            check_mask(op.src_masks[1]);
            check_mask(op.dst_mask);
            const auto& a = masks_[op.src_masks[0]];
            const auto& b = masks_[op.src_masks[1]];
            auto& dst = masks_[op.dst_mask];
            for (uint32_t w = 0; w < words; ++w)
                dst[w] = op.opcode == PimOpcode::MaskAnd ? (a[w] & b[w]) : (a[w] | b[w]);
            break;
        }
        case PimOpcode::MaskNot: {
            check_mask(op.src_masks[0]);
            check_mask(op.dst_mask);
            const auto& a = masks_[op.src_masks[0]];
            auto& dst = masks_[op.dst_mask];
            for (uint32_t w = 0; w < words; ++w) dst[w] = ~a[w];
            break;
        }
        case PimOpcode::Aggregate: {
            check_field(op.field_id);
            check_mask(op.src_masks[0]);
            const auto& col = fields_[op.field_id];
            const auto& m = masks_[op.src_masks[0]];
            uint64_t sum = 0;
            for (uint32_t w = 0; w < words; ++w) {
                uint64_t bits = m[w];
                while (bits) {
                    uint32_t i = static_cast<uint32_t>(std::countr_zero(bits));
                    sum += col[w * 64 + i];
                    bits &= bits - 1;
                }
            }
            agg_ = sum;
            break;
        }
    }
}

MainMemory::MainMemory(const AddressMap& map) : map_(map) {
    scopes_.reserve(map_.cfg().n_scopes);
    for (uint32_t i = 0; i < map_.cfg().n_scopes; ++i) scopes_.emplace_back(&map_, i);
}

uint64_t MainMemory::read_u64(PhysAddr a) const {
    auto s = map_.scope_of(a);
    if (s) return scopes_[s->index].read_u64(a);
    auto it = dram_.find(a & ~7ull);
    return it == dram_.end() ? 0 : it->second;
}

void MainMemory::write_u64(PhysAddr a, uint64_t v) {
    auto s = map_.scope_of(a);
    if (s) {
        scopes_[s->index].write_u64(a, v);
        return;
    }
    if (v != 0)
        dram_[a & ~7ull] = v;
    else
        dram_.erase(a & ~7ull);
}

std::vector<uint8_t> MainMemory::read_line(PhysAddr line_base, uint32_t line_size) const {
    std::vector<uint8_t> out(line_size);
    for (uint32_t off = 0; off < line_size; off += 8) {
        uint64_t w = read_u64(line_base + off);
        std::memcpy(out.data() + off, &w, 8);
    }
    return out;
}

void MainMemory::write_line(PhysAddr line_base, const std::vector<uint8_t>& data) {
    for (uint32_t off = 0; off < data.size(); off += 8) {
        uint64_t w;
        std::memcpy(&w, data.data() + off, 8);
        write_u64(line_base + off, w);
    }
}

PimModule::PimModule(Engine& eng, int comp_id, const SimConfig& cfg, MainMemory& mem)
    : eng_(eng),
      comp_id_(comp_id),
      cfg_(cfg),
      mem_(mem),
      scopes_(cfg.n_scopes),
      capacity_(cfg.pim_buffer_capacity),
      unbounded_(cfg.pim_buffer_unbounded) {}

bool PimModule::idle() const {
    for (const auto& s : scopes_) {
        if (!s.q.empty() || s.executing) return false;
    }
    return true;
}

void PimModule::op_arrive(Msg&& m) {
    uint32_t scope = m.pim.scope_index;
    if (scope >= scopes_.size()) throw SimBug("pim: op to unknown scope");
    // sample occupancy/unique-scopes before inserting the arriving op
    stats_.arrival_samples++;
    stats_.occupancy_sum += queued_ops_;
    std::unordered_set<uint32_t> uniq;
    for (uint32_t s = 0; s < scopes_.size(); ++s) {
        for (const Entry& e : scopes_[s].q)
            if (e.is_op) {
                uniq.insert(s);
                break;
            }
    }
    stats_.unique_scopes_sum += uniq.size();
    if (!unbounded_ && queued_ops_ >= capacity_) throw SimBug("pim: buffer overflow past capacity");
    ++queued_ops_;
    stats_.max_occupancy = std::max(stats_.max_occupancy, queued_ops_);
    scopes_[scope].q.push_back(Entry{std::move(m), true});
    kick(scope);
}

void PimModule::access_arrive(Msg&& m) {
    auto s = mem_.map().scope_of(m.addr);
    if (!s) throw SimBug("pim: access outside PIM memory");
    scopes_[s->index].q.push_back(Entry{std::move(m), false});
    kick(s->index);
}

void PimModule::kick(uint32_t scope) {
    ScopeQueue& sq = scopes_[scope];
    if (sq.executing || sq.q.empty()) return;
    if (eng_.now() < sq.busy_until) {
        // array occupied; service resumes at busy_until
        sq.executing = true;
        eng_.schedule_at(sq.busy_until, comp_id_, [this, scope] {
            scopes_[scope].executing = false;
            kick(scope);
        });
        return;
    }
    start_head(scope);
}

void PimModule::start_head(uint32_t scope) {
    ScopeQueue& sq = scopes_[scope];
    Entry e = std::move(sq.q.front());
    sq.q.pop_front();
    sq.executing = true;
    if (e.is_op) {
        --queued_ops_;  // the op leaves the buffer for the array
        if (space_freed_) space_freed_();
        uint64_t lat = e.msg.pim.latency_cycles;
        sq.busy_until = eng_.now() + lat;
        eng_.schedule_at(sq.busy_until, comp_id_, [this, scope, m = std::move(e.msg)] {
            if (on_apply_) on_apply_(m);
            mem_.apply_pim(m.pim);
            stats_.ops_executed++;
            ScopeQueue& s2 = scopes_[scope];
            s2.executing = false;
            kick(scope);
        });
    } else {
        // load/store service occupies the array for one memory access
        sq.busy_until = eng_.now() + cfg_.dram_latency;
        eng_.schedule_at(sq.busy_until, comp_id_, [this, scope, msg = std::move(e.msg)]() mutable {
            ScopeQueue& s2 = scopes_[scope];
            Msg resp;
            bool respond = true;
            switch (msg.type) {
                case MsgType::MemWrite:
                    mem_.write_line(msg.addr, msg.data);
                    respond = false;
                    break;
                case MsgType::MemRead:
                    resp.type = MsgType::MemReadResp;
                    resp.data = mem_.read_line(msg.addr, cfg_.l1.line);
                    break;
                case MsgType::UcLoad:
                    resp.type = MsgType::UcLoadResp;
                    resp.value = mem_.read_u64(msg.addr);
                    break;
                case MsgType::UcStore:
                    mem_.write_u64(msg.addr, msg.value);
                    resp.type = MsgType::UcStoreAck;
                    break;
                default:
                    throw SimBug("pim: unexpected access type");
            }
            if (respond) {
                resp.addr = msg.addr;
                resp.scope = msg.scope;
                resp.pim_page = true;
                resp.src_core = msg.src_core;
                resp.req_id = msg.req_id;
                resp.seq = msg.seq;
                respond_(std::move(resp));
            }
            s2.executing = false;
            kick(scope);
        });
    }
}

}  // namespace pimsim
