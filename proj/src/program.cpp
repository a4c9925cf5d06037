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

#include "pimsim/program.hpp"

#include <cstdio>
#include <sstream>

namespace pimsim {

Stmt Stmt::load(PhysAddr a, int reg) {
    Stmt s;
    s.kind = Kind::Load;
    s.addr = a;
    s.reg = reg;
    return s;
}
Stmt Stmt::store(PhysAddr a, uint64_t v) {
    Stmt s;
    s.kind = Kind::Store;
    s.addr = a;
    s.value = v;
    return s;
}
Stmt Stmt::pim_op(const PimOpDescriptor& d) {
    Stmt s;
    s.kind = Kind::PimOp;
    s.pim = d;
    s.scope_index = d.scope_index;
    return s;
}
Stmt Stmt::pim_fence() {
    Stmt s;
    s.kind = Kind::PimFence;
    return s;
}
Stmt Stmt::scope_fence(uint32_t scope) {
    Stmt s;
    s.kind = Kind::ScopeFence;
    s.scope_index = scope;
    return s;
}
Stmt Stmt::mem_fence() {
    Stmt s;
    s.kind = Kind::MemFence;
    return s;
}
Stmt Stmt::flush(PhysAddr a) {
    Stmt s;
    s.kind = Kind::LineFlush;
    s.addr = a;
    return s;
}
Stmt Stmt::delay(uint64_t cycles) {
    Stmt s;
    s.kind = Kind::Delay;
    s.value = cycles;
    return s;
}

void ThreadProgram::push(const Stmt& s) {
    stmts.push_back(s);
    if (s.kind == Stmt::Kind::Load && s.reg >= 0)
        n_regs = std::max(n_regs, static_cast<uint32_t>(s.reg) + 1);
}

static std::string hex_addr(PhysAddr a) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "0x%llx", static_cast<unsigned long long>(a));
    return buf;
}

std::string stmt_text(const Stmt& s) {
    std::ostringstream os;
    switch (s.kind) {
        case Stmt::Kind::Load: os << "ld " << hex_addr(s.addr) << " r" << s.reg; break;
        case Stmt::Kind::Store: os << "st " << hex_addr(s.addr) << " " << s.value; break;
        case Stmt::Kind::LineFlush: os << "flush " << hex_addr(s.addr); break;
        case Stmt::Kind::MemFence: os << "memfence"; break;
        case Stmt::Kind::PimFence: os << "pimfence"; break;
        case Stmt::Kind::ScopeFence: os << "scopefence S" << s.scope_index; break;
        case Stmt::Kind::Delay: os << "delay " << s.value; break;
        case Stmt::Kind::PimOp: {
            const PimOpDescriptor& d = s.pim;
            os << "pim S" << d.scope_index << " " << pim_opcode_name(d.opcode);
            switch (d.opcode) {
                case PimOpcode::FilterEq:
                case PimOpcode::FilterLt:
                    os << " f" << d.field_id << " " << d.immediate << " m" << d.dst_mask;
                    break;
                case PimOpcode::MaskAnd:
                case PimOpcode::MaskOr:
                    os << " m" << d.src_masks[0] << " m" << d.src_masks[1] << " m" << d.dst_mask;
                    break;
                case PimOpcode::MaskNot:
                    os << " m" << d.src_masks[0] << " m" << d.dst_mask;
                    break;
                case PimOpcode::Aggregate:
                    os << " f" << d.field_id << " m" << d.src_masks[0];
                    break;
            }
            break;
        }
    }
    return os.str();
}

std::string ThreadProgram::text() const {
    std::string out;
    for (const Stmt& s : stmts) {
        out += stmt_text(s);
        out += '\n';
    }
    return out;
}

namespace {

std::vector<std::string> tokens_of(const std::string& line) {
    std::vector<std::string> toks;
    std::istringstream is(line);
    std::string t;
    while (is >> t) toks.push_back(t);
    return toks;
}

uint64_t parse_u64(const std::string& t, const std::string& line) {
    try {
        size_t pos = 0;
        uint64_t v = std::stoull(t, &pos, 0);
        if (pos != t.size()) throw std::invalid_argument(t);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("bad number '" + t + "' in: " + line);
    }
}

int parse_prefixed(const std::string& t, char prefix, const std::string& line) {
    if (t.size() < 2 || t[0] != prefix)
        throw ConfigError(std::string("expected ") + prefix + "<n>, got '" + t + "' in: " + line);
    return static_cast<int>(parse_u64(t.substr(1), line));
}

}  // namespace

Stmt parse_stmt(const std::string& line) {
    auto toks = tokens_of(line);
    if (toks.empty()) throw ConfigError("empty statement");
    const std::string& op = toks[0];
    auto need = [&](size_t n) {
        if (toks.size() != n) throw ConfigError("bad statement arity: " + line);
    };
    if (op == "ld") {
        need(3);
        return Stmt::load(parse_u64(toks[1], line), parse_prefixed(toks[2], 'r', line));
    }
    if (op == "st") {
        need(3);
        return Stmt::store(parse_u64(toks[1], line), parse_u64(toks[2], line));
    }
    if (op == "flush") {
        need(2);
        return Stmt::flush(parse_u64(toks[1], line));
    }
    if (op == "memfence") {
        need(1);
        return Stmt::mem_fence();
    }
    if (op == "pimfence") {
        need(1);
        return Stmt::pim_fence();
    }
    if (op == "scopefence") {
        need(2);
        return Stmt::scope_fence(static_cast<uint32_t>(parse_prefixed(toks[1], 'S', line)));
    }
    if (op == "delay") {
        need(2);
        return Stmt::delay(parse_u64(toks[1], line));
    }
    if (op == "pim") {
        if (toks.size() < 3) throw ConfigError("bad pim statement: " + line);
        PimOpDescriptor d;
        d.scope_index = static_cast<uint32_t>(parse_prefixed(toks[1], 'S', line));
        auto opc = pim_opcode_from(toks[2]);
        if (!opc) throw ConfigError("unknown pim opcode in: " + line);
        d.opcode = *opc;
        switch (d.opcode) {
            case PimOpcode::FilterEq:
            case PimOpcode::FilterLt:
                need(6);
                d.field_id = parse_prefixed(toks[3], 'f', line);
                d.immediate = parse_u64(toks[4], line);
                d.dst_mask = parse_prefixed(toks[5], 'm', line);
                break;
            case PimOpcode::MaskAnd:
            case PimOpcode::MaskOr:
                need(6);
                d.src_masks[0] = parse_prefixed(toks[3], 'm', line);
                d.src_masks[1] = parse_prefixed(toks[4], 'm', line);
                d.dst_mask = parse_prefixed(toks[5], 'm', line);
                break;
            case PimOpcode::MaskNot:
                need(5);
                d.src_masks[0] = parse_prefixed(toks[3], 'm', line);
                d.dst_mask = parse_prefixed(toks[4], 'm', line);
                break;
            case PimOpcode::Aggregate:
                need(5);
                d.field_id = parse_prefixed(toks[3], 'f', line);
                d.src_masks[0] = parse_prefixed(toks[4], 'm', line);
                break;
        }
        return Stmt::pim_op(d);
    }
    throw ConfigError("unknown statement '" + op + "' in: " + line);
}

}  // namespace pimsim
