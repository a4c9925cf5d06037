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

#include "pimsim/cache.hpp"
#include "pimsim/config.hpp"
#include "pimsim/program.hpp"

namespace pimsim {

/// Commit-point core with a TSO write buffer. Loads block commit; stores and
/// flushes retire through the buffer; compute ops follow the configured
/// model's issue protocol (commit-stall, buffered-with-ack, per-scope hold,
/// or issue-at-commit).
class Core {
  public:
    struct Hooks {
        std::function<void(int /*stmt_idx*/)> on_commit;
        std::function<void(uint64_t /*seq*/, uint64_t /*value*/)> on_load_value;
        std::function<void(const MemRequest&)> on_trace;
        std::function<void(bool /*outstanding*/, uint64_t /*seq*/)> on_pim_ack_window;
        std::function<void()> on_done;
        std::function<uint64_t()> fresh_id;
    };

    Core(Engine& eng, int comp_id, const SimConfig& cfg, const AddressMap& map, int core_id,
         int thread_id);

    void set_l1(L1Cache* l1) { l1_ = l1; }
    void set_llc_link(Link* l) { to_llc_ = l; }
    void set_hooks(Hooks h) { hooks_ = std::move(h); }
    void set_program(ThreadProgram p);

    void start(SimTime at);

    // completion callbacks
    void l1_load_done(uint64_t seq, uint64_t value);
    void l1_store_done(uint64_t seq);
    void receive_sideband(Msg&& m);  // FlushAck / PimAck / UcLoadResp / UcStoreAck

    bool done() const { return done_; }
    SimTime finish_time() const { return finish_time_; }
    const std::vector<uint64_t>& registers() const { return regs_; }
    int thread_id() const { return thread_id_; }
    bool quiesced() const { return done_ || (pc_ == 0 && !started_); }

  private:
    struct WbEntry {
        Stmt::Kind kind;
        PhysAddr addr = 0;
        uint64_t value = 0;
        uint64_t seq = 0;
        int scope = -1;  // -1 for non-PIM addresses
        enum class St : uint8_t { Pending, Issued, AwaitAck } st = St::Pending;
        uint64_t req_id = 0;
        PimOpDescriptor pim;
    };

    void schedule_step();
    void step();
    bool try_commit();
    void wb_drain();
    bool wb_entry_issuable(size_t idx) const;
    void issue_entry(WbEntry& e);
    bool load_blocked(PhysAddr addr, int scope) const;
    bool forward_from_wb(PhysAddr addr, uint64_t* out) const;
    int scope_of(PhysAddr a) const;
    void issue_pim_now(const Stmt& s, bool via_l1);
    void emit_trace(const Stmt& s, uint64_t seq);
    void maybe_finish();

    Engine& eng_;
    int comp_id_;
    const SimConfig& cfg_;
    const AddressMap& map_;
    int core_id_;
    int thread_id_;
    L1Cache* l1_ = nullptr;
    Link* to_llc_ = nullptr;
    Hooks hooks_;

    ThreadProgram prog_;
    size_t pc_ = 0;
    std::vector<uint64_t> regs_;
    std::vector<WbEntry> wb_;
    bool started_ = false;
    bool done_ = false;
    bool step_scheduled_ = false;
    SimTime finish_time_ = 0;

    bool load_outstanding_ = false;
    uint64_t load_seq_ = 0;
    int load_reg_ = -1;
    bool atomic_wait_ack_ = false;
    uint64_t atomic_req_id_ = 0;
    bool delay_active_ = false;
};

}  // namespace pimsim
