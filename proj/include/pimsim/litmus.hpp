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

#include <set>

#include "pimsim/machine.hpp"

namespace pimsim {

struct LitmusCondition {
    enum class Expect : uint8_t { Allowed, Forbidden, Required };
    struct Term {
        enum class Kind : uint8_t { Reg, Mem, Ghost } kind;
        int thread = 0;
        int reg = 0;
        PhysAddr addr = 0;
        uint64_t value = 0;
    };
    Expect expect = Expect::Allowed;
    std::set<Model> models;  // empty set: applies to every model
    std::vector<Term> terms; // conjunction
    std::string text;
};

/// A tiny multi-thread program plus initial memory, an optional interfering
/// agent, and expectations over final register/memory valuations.
struct LitmusTest {
    std::string name;
    uint32_t n_scopes = 1;
    uint32_t records = 1024;
    std::vector<std::pair<PhysAddr, uint64_t>> init_mem;
    struct FieldInit {
        uint32_t scope;
        uint32_t field;
        uint64_t value;  // applied to every record slot
    };
    std::vector<FieldInit> init_fields;
    std::vector<ThreadProgram> threads;
    std::optional<InterloperSpec> interloper;
    bool observe_bypass = false;
    std::vector<LitmusCondition> conditions;

    std::string text(const AddressMap& map) const;
};

struct Outcome {
    uint64_t count = 0;
    std::string repro;  // "seed=N" or "path=a,b,c"
};

struct OutcomeSet {
    enum class Mode : uint8_t { Random, Exhaustive } mode = Mode::Random;
    std::map<std::string, Outcome> outcomes;  // canonical valuation -> info
    uint64_t runs = 0;
    bool partial = false;  // exhaustive exploration hit a bound
};

struct ExploreParams {
    OutcomeSet::Mode mode = OutcomeSet::Mode::Exhaustive;
    uint64_t trials = 512;   // random mode
    uint64_t seed = 1;
    size_t depth = 14;       // exhaustive branching depth bound
    uint64_t max_paths = 200000;
    SimTime run_limit = 80000000ull;
};

/// Config used for a litmus run of `test` under `model`.
SimConfig litmus_config(const LitmusTest& test, Model model);

OutcomeSet explore(const LitmusTest& test, Model model, const ExploreParams& p);

/// Replays one execution (path from a repro string) and returns its valuation.
std::string replay(const LitmusTest& test, Model model, const std::vector<uint32_t>& path,
                   const ExploreParams& p);

struct VerdictRow {
    std::string test;
    std::string model;
    std::string condition;
    enum class Result : uint8_t { Pass, Fail, Warn, Info } result;
    std::string note;
};

std::vector<VerdictRow> judge(const LitmusTest& test, Model model, const OutcomeSet& outcomes);
bool all_pass(const std::vector<VerdictRow>& rows);

/// Does `valuation` (canonical "k=v;..." string) satisfy the condition?
bool valuation_matches(const LitmusCondition& cond, const std::string& valuation,
                       const AddressMap& map);

// built-in suite
std::vector<std::string> builtin_names();
LitmusTest builtin(const std::string& name);

// text format
LitmusTest parse_litmus(const std::string& text);

}  // namespace pimsim
