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

#include <memory>

#include "pimsim/core.hpp"
#include "pimsim/memctrl.hpp"
#include "pimsim/pim.hpp"
#include "pimsim/stats.hpp"

namespace pimsim {

/// Insertion spec for the optional interfering agent: a one-shot load to
/// `addr` fired at a nondeterministically chosen (statement commit, extra
/// delay) point of the watched thread; the chooser may also pick "never".
struct InterloperSpec {
    PhysAddr addr = 0;
    int watch_thread = 0;
    std::vector<std::pair<int, uint64_t>> slots;  // (stmt index, delay cycles)
};

struct RunResult {
    SimTime total_cycles = 0;
    std::vector<SimTime> thread_cycles;
    std::vector<std::vector<uint64_t>> registers;  // per thread
    bool interloper_fired = false;
    uint64_t interloper_value = 0;
    bool bypass_observed = false;
    std::map<std::pair<int, uint64_t>, uint64_t> load_values;  // (thread, seq) -> value
    std::vector<std::string> trace;
    uint64_t trace_hash = 0;
    bool hit_limit = false;
};

/// One complete simulated host: cores + private L1s + shared LLC + memory
/// controller + compute-capable memory, wired over jittered links, all on one
/// deterministic engine.
class Machine {
  public:
    Machine(const SimConfig& cfg, Chooser* chooser = nullptr);
    ~Machine();

    MainMemory& memory() { return *mem_; }
    const AddressMap& map() const { return map_; }
    Engine& engine() { return eng_; }

    void load_programs(const std::vector<ThreadProgram>& progs);
    void set_interloper(const InterloperSpec& spec);
    void enable_trace() { collect_trace_ = true; }
    void track_loads() { track_loads_ = true; }

    RunResult run(SimTime limit = UINT64_MAX);

    /// Write all dirty cached lines back into memory (post-run only).
    void flatten_caches();
    uint64_t read_flat_u64(PhysAddr a) const { return mem_->read_u64(a); }

    RunMetrics metrics() const;
    void check_invariants();  // throws SimBug on violation
    uint64_t invariant_checks() const { return invariant_checks_; }

  private:
    void build();
    void on_pim_apply(const Msg& op);

    SimConfig cfg_;
    AddressMap map_;
    std::unique_ptr<DefaultChooser> default_chooser_;
    Chooser* chooser_;
    Engine eng_;
    std::unique_ptr<MainMemory> mem_;
    std::unique_ptr<PimModule> pim_;
    std::unique_ptr<MemCtrl> ctrl_;
    std::unique_ptr<LlcCache> llc_;
    std::vector<std::unique_ptr<L1Cache>> l1s_;
    std::vector<std::unique_ptr<Core>> cores_;
    std::vector<std::unique_ptr<Link>> links_;

    uint32_t n_cores_ = 0;
    int n_threads_ = 0;
    int interloper_core_ = -1;
    std::optional<InterloperSpec> interloper_;
    int interloper_slot_stmt_ = -1;
    uint64_t interloper_slot_delay_ = 0;
    bool interloper_started_ = false;
    bool interloper_fired_ = false;

    bool collect_trace_ = false;
    bool track_loads_ = false;
    std::vector<std::string> trace_;
    std::map<std::pair<int, uint64_t>, uint64_t> load_values_;
    std::vector<std::set<uint64_t>> ack_outstanding_;  // per thread: pim seqs
    bool bypass_observed_ = false;
    uint64_t next_req_id_ = 0;
    uint64_t invariant_checks_ = 0;
};

}  // namespace pimsim
