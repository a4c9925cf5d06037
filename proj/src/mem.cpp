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

#include "pimsim/mem.hpp"

#include <nlohmann/json.hpp>

namespace pimsim {

using nlohmann::json;

const char* pim_opcode_name(PimOpcode op) {
    switch (op) {
        case PimOpcode::FilterEq: return "filter_eq";
        case PimOpcode::FilterLt: return "filter_lt";
        case PimOpcode::MaskAnd: return "mask_and";
        case PimOpcode::MaskOr: return "mask_or";
        case PimOpcode::MaskNot: return "mask_not";
        case PimOpcode::Aggregate: return "aggregate";
    }
    return "?";
}

std::optional<PimOpcode> pim_opcode_from(const std::string& s) {
    if (s == "filter_eq") return PimOpcode::FilterEq;
    if (s == "filter_lt") return PimOpcode::FilterLt;
    if (s == "mask_and") return PimOpcode::MaskAnd;
    if (s == "mask_or") return PimOpcode::MaskOr;
    if (s == "mask_not") return PimOpcode::MaskNot;
    if (s == "aggregate") return PimOpcode::Aggregate;
    return std::nullopt;
}

const char* req_kind_name(ReqKind k) {
    switch (k) {
        case ReqKind::Load: return "load";
        case ReqKind::Store: return "store";
        case ReqKind::LineFlush: return "flush";
        case ReqKind::PimOp: return "pim_op";
        case ReqKind::PimAck: return "pim_ack";
        case ReqKind::PimFence: return "pim_fence";
        case ReqKind::ScopeFence: return "scope_fence";
        case ReqKind::InvalidateProbe: return "inv_probe";
        case ReqKind::WritebackData: return "writeback";
    }
    return "?";
}

std::optional<ReqKind> req_kind_from(const std::string& s) {
    if (s == "load") return ReqKind::Load;
    if (s == "store") return ReqKind::Store;
    if (s == "flush") return ReqKind::LineFlush;
    if (s == "pim_op") return ReqKind::PimOp;
    if (s == "pim_ack") return ReqKind::PimAck;
    if (s == "pim_fence") return ReqKind::PimFence;
    if (s == "scope_fence") return ReqKind::ScopeFence;
    if (s == "inv_probe") return ReqKind::InvalidateProbe;
    if (s == "writeback") return ReqKind::WritebackData;
    return std::nullopt;
}

static bool kind_carries_scope(ReqKind k) {
    return k == ReqKind::PimOp || k == ReqKind::ScopeFence || k == ReqKind::PimAck ||
           k == ReqKind::PimFence;
}

std::string MemRequest::to_trace_json(SimTime t) const {
    json j;
    j["t"] = t;
    j["kind"] = req_kind_name(kind);
    j["thread"] = thread_id;
    j["core"] = core_id;
    j["seq"] = program_seq;
    if (kind_carries_scope(kind)) {
        j["scope"] = scope_index;
    } else {
        j["addr"] = addr;
    }
    j["pim_page"] = pim_enabled;
    if (kind == ReqKind::Store || kind == ReqKind::WritebackData) {
        j["payload"] = data;
    } else if (kind == ReqKind::PimOp && pim_op) {
        json p;
        p["op"] = pim_opcode_name(pim_op->opcode);
        p["field"] = pim_op->field_id;
        p["imm"] = pim_op->immediate;
        p["dst"] = pim_op->dst_mask;
        p["src"] = {pim_op->src_masks[0], pim_op->src_masks[1]};
        p["lat"] = pim_op->latency_cycles;
        j["payload"] = p;
    }
    return j.dump();
}

MemRequest MemRequest::from_trace_json(const std::string& line, SimTime* t_out) {
    json j = json::parse(line);
    MemRequest r;
    auto k = req_kind_from(j.at("kind").get<std::string>());
    if (!k) throw ConfigError("trace: unknown request kind: " + j.at("kind").dump());
    r.kind = *k;
    r.thread_id = j.at("thread").get<int>();
    r.core_id = j.at("core").get<int>();
    r.program_seq = j.at("seq").get<uint64_t>();
    r.pim_enabled = j.at("pim_page").get<bool>();
    if (kind_carries_scope(r.kind)) {
        r.scope_index = j.at("scope").get<uint32_t>();
    } else {
        r.addr = j.at("addr").get<PhysAddr>();
    }
    if (j.contains("payload")) {
        if (r.kind == ReqKind::PimOp) {
            const json& p = j["payload"];
            PimOpDescriptor d;
            d.scope_index = r.scope_index;
            auto op = pim_opcode_from(p.at("op").get<std::string>());
            if (!op) throw ConfigError("trace: unknown pim opcode");
            d.opcode = *op;
            d.field_id = p.at("field").get<int>();
            d.immediate = p.at("imm").get<uint64_t>();
            d.dst_mask = p.at("dst").get<int>();
            d.src_masks[0] = p.at("src")[0].get<int>();
            d.src_masks[1] = p.at("src")[1].get<int>();
            d.latency_cycles = p.at("lat").get<uint64_t>();
            r.pim_op = d;
        } else {
            r.data = j["payload"].get<uint64_t>();
        }
    }
    if (t_out) *t_out = j.at("t").get<SimTime>();
    return r;
}

AddressMap::AddressMap(const AddressMapConfig& cfg) : cfg_(cfg) {
    auto fail = [](const std::string& m) { throw ConfigError("address map: " + m); };
    if (cfg_.scope_size == 0 || (cfg_.scope_size & (cfg_.scope_size - 1)) != 0)
        fail("scope size must be a power of two");
    if (cfg_.pim_base % cfg_.scope_size != 0) fail("pim base must be scope-size aligned");
    if (cfg_.line_size == 0 || (cfg_.line_size & (cfg_.line_size - 1)) != 0)
        fail("line size must be a power of two");
    if (cfg_.scope_size % cfg_.line_size != 0) fail("scope size must be a multiple of line size");
    if (cfg_.records_per_scope == 0 || cfg_.records_per_scope % 512 != 0)
        fail("records_per_scope must be a positive multiple of 512");
    if (cfg_.fields_per_record == 0 || cfg_.fields_per_record > 8)
        fail("fields_per_record must be in [1,8]");
    if (cfg_.field_len_bytes == 0 || cfg_.field_len_bytes > kFieldStride)
        fail("field_len_bytes must be in [1,16]");
    uint64_t mask_stripe_end = static_cast<uint64_t>(kNumMaskRegs - 1) * cfg_.line_size +
                               static_cast<uint64_t>(mask_chunks() - 1) * (cfg_.line_size * 8) +
                               cfg_.line_size;
    if (mask_stripe_end > kAggOffset) fail("records_per_scope too large for the mask stripe");
    uint64_t fields_end =
        kFieldsOffset + static_cast<uint64_t>(cfg_.fields_per_record) * cfg_.records_per_scope *
                            kFieldStride;
    if (fields_end > cfg_.scope_size)
        fail("records_per_scope * fields_per_record does not fit in a scope");
}

AddressMap::Decoded AddressMap::decode(PhysAddr a) const {
    Decoded d;
    auto s = scope_of(a);
    if (!s) throw SimBug("AddressMap::decode: address outside PIM memory");
    d.scope_idx = s->index;
    uint64_t off = a - s->base;
    if (off >= kFieldsOffset) {
        uint64_t fo = off - kFieldsOffset;
        uint64_t slot_global = fo / kFieldStride;
        uint32_t field = static_cast<uint32_t>(slot_global / cfg_.records_per_scope);
        if (field < cfg_.fields_per_record) {
            d.region = Decoded::Region::Field;
            d.field = field;
            d.slot = static_cast<uint32_t>(slot_global % cfg_.records_per_scope);
            d.byte_in_slot = static_cast<uint32_t>(fo % kFieldStride);
            return d;
        }
        d.region = Decoded::Region::Spare;
        d.offset = off;
        return d;
    }
    if (off >= kAggOffset) {
        if (off < kAggOffset + 8) {
            d.region = Decoded::Region::AggSlot;
            d.offset = off - kAggOffset;
            return d;
        }
        d.region = Decoded::Region::Spare;
        d.offset = off;
        return d;
    }
    // Mask stripe: chunk j occupies lines m + 8j for m in [0,8).
    uint64_t line_idx = off / cfg_.line_size;
    uint64_t in_line = off % cfg_.line_size;
    uint32_t m = static_cast<uint32_t>(line_idx % 8);
    uint64_t chunk = line_idx / 8;
    if (chunk < mask_chunks()) {
        d.region = Decoded::Region::MaskStripe;
        d.mask_reg = m;
        d.bit_offset = chunk * 512 + in_line * 8;
        return d;
    }
    d.region = Decoded::Region::Spare;
    d.offset = off;
    return d;
}

bool same_scope(const MemRequest& a, const MemRequest& b, const AddressMap& map) {
    auto resolve = [&](const MemRequest& r) -> std::optional<uint32_t> {
        switch (r.kind) {
            case ReqKind::PimOp:
            case ReqKind::ScopeFence:
            case ReqKind::PimAck:
            case ReqKind::PimFence:
                return r.scope_index;
            default: {
                auto s = map.scope_of(r.addr);
                if (s) return s->index;
                return std::nullopt;
            }
        }
    };
    auto sa = resolve(a);
    auto sb = resolve(b);
    return sa && sb && *sa == *sb;
}

}  // namespace pimsim
