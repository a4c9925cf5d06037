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
#include <vector>

#include "pimsim/mem.hpp"

namespace pimsim {

/// One program statement. Requests emitted for a statement carry its index as
/// program_seq. Loads are 8-byte aligned reads into a register slot.
struct Stmt {
    enum class Kind : uint8_t { Load, Store, PimOp, PimFence, ScopeFence, MemFence, LineFlush, Delay };
    Kind kind = Kind::Delay;
    PhysAddr addr = 0;       // Load/Store/LineFlush
    uint64_t value = 0;      // Store value / Delay cycles
    int reg = -1;            // Load destination
    uint32_t scope_index = 0;  // ScopeFence
    PimOpDescriptor pim;     // PimOp (latency resolved at issue time)

    static Stmt load(PhysAddr a, int reg);
    static Stmt store(PhysAddr a, uint64_t v);
    static Stmt pim_op(const PimOpDescriptor& d);
    static Stmt pim_fence();
    static Stmt scope_fence(uint32_t scope);
    static Stmt mem_fence();
    static Stmt flush(PhysAddr a);
    static Stmt delay(uint64_t cycles);
};

struct ThreadProgram {
    std::vector<Stmt> stmts;
    uint32_t n_regs = 0;  // highest register index + 1

    void push(const Stmt& s);
    /// Plain-text form, one statement per line (`st A 1`, `ld A r0`,
    /// `pim S0 filter_eq f1 42 m0`, ...). Addresses as hex.
    std::string text() const;
};

std::string stmt_text(const Stmt& s);

/// Parse one DSL line. Symbolic names are not resolved here; the litmus
/// front-end substitutes aliases before calling this. Throws ConfigError.
Stmt parse_stmt(const std::string& line);

}  // namespace pimsim
