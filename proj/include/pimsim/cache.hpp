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
#include <map>
#include <set>
#include <unordered_map>

#include "pimsim/config.hpp"
#include "pimsim/net.hpp"

namespace pimsim {

/// Associative tracker of scopes known to hold zero valid lines in the
/// attached cache. Indexed by scope, LRU replacement, silent overwrite.
class ScopeBuffer {
  public:
    ScopeBuffer(uint32_t sets, uint32_t ways) : sets_(sets), ways_(ways), entries_(sets * ways) {}

    bool contains(uint32_t scope) const;
    void insert(uint32_t scope);
    void erase(uint32_t scope);

  private:
    struct Entry {
        bool valid = false;
        uint32_t scope = 0;
        uint64_t lru = 0;
    };
    uint32_t set_of(uint32_t scope) const { return scope % sets_; }
    uint32_t sets_, ways_;
    std::vector<Entry> entries_;
    uint64_t tick_ = 0;
};

struct ScanCostModel {
    uint32_t c_set = 1;
    uint32_t c_line = 4;
    uint32_t c_fixed = 4;
};

struct CacheStats {
    uint64_t sb_hits = 0;
    uint64_t sb_misses = 0;  // scans actually performed for compute ops
    uint64_t scan_cycles_sum = 0;
    double skip_ratio_sum = 0.0;
    uint64_t scan_samples = 0;  // scans performed (skip/latency samples)
    uint64_t lines_flushed = 0;
    uint64_t dirty_writebacks = 0;
    uint64_t fence_scans = 0;
    uint64_t hits = 0;
    uint64_t misses = 0;
};

// ---------------------------------------------------------------------------
// Private L1. Serves its core's loads/stores/flushes, forwards compute ops
// and fences (scope-relaxed routing), answers LLC probes. Blocking per-line
// transactions; optional scope buffer + set bit-vector for fence scans.
// ---------------------------------------------------------------------------

class L1Cache {
  public:
    struct CoreIf {
        std::function<void(uint64_t /*seq*/, uint64_t /*value*/)> load_done;
        std::function<void(uint64_t /*seq*/)> store_done;
    };

    L1Cache(Engine& eng, int comp_id, const SimConfig& cfg, const AddressMap& map, int core_id,
            bool scope_hw);

    void set_links(Link* to_llc) { to_llc_ = to_llc; }
    void set_core_if(CoreIf cif) { core_ = std::move(cif); }

    // core-side entry points (already on the engine's timeline)
    void core_load(PhysAddr addr, uint64_t seq);
    void core_store(PhysAddr addr, uint64_t value, uint64_t seq);
    void core_flush(PhysAddr addr, uint64_t seq);
    void core_forward(Msg&& m);  // PimOp / ScopeFence / PimFence via the cache path

    void receive(Msg&& m);  // from LLC

    const CacheStats& stats() const { return stats_; }

    // introspection for invariant checks / debugging
    struct LineView {
        PhysAddr line_base;
        char state;  // M/E/S
        bool pim_enabled;
        uint64_t fill_stamp;
    };
    std::vector<LineView> valid_lines() const;
    bool sbv_bit(uint32_t set) const { return sbv_[set]; }
    uint32_t sets() const { return sets_; }
    bool sbv_exact() const;
    bool has_scope_hw() const { return scope_hw_; }
    const ScopeBuffer* scope_buffer() const { return scope_hw_ ? &sb_ : nullptr; }
    bool scope_has_valid_line(uint32_t scope) const;
    std::vector<std::pair<PhysAddr, std::vector<uint8_t>>> dirty_lines() const;
    bool quiesced() const { return txns_.empty() && input_.empty() && !scanning_; }

  private:
    enum class St : uint8_t { I, S, E, M };
    struct Line {
        bool valid = false;
        uint64_t tag = 0;
        St st = St::I;
        bool pim_enabled = false;
        bool evicting = false;  // Put in flight; still answers probes
        uint64_t lru = 0;
        uint64_t fill_stamp = 0;
        std::vector<uint8_t> data;
    };
    struct In {
        enum class Kind : uint8_t { Load, Store, Flush, Fwd } kind;
        PhysAddr addr = 0;
        uint64_t value = 0;
        uint64_t seq = 0;
        Msg fwd;
    };
    struct Txn {
        bool is_store = false;
        PhysAddr addr = 0;  // byte address of the core op
        uint64_t value = 0;
        uint64_t seq = 0;
        bool resp_parked = false;
        Msg parked;              // fill waiting for a victim Put to complete
        PhysAddr victim = 0;     // line being evicted for this fill
        bool victim_pending = false;
        std::deque<In> deferred;  // same-line ops arrived during the txn
    };

    uint32_t set_of(PhysAddr line_base) const {
        return static_cast<uint32_t>((line_base / line_size_) & (sets_ - 1));
    }
    PhysAddr line_base(PhysAddr a) const { return a & ~static_cast<PhysAddr>(line_size_ - 1); }
    Line* find(PhysAddr lb);
    Line* find_evictable(PhysAddr lb);  // includes evicting lines (probe targets)

    void enqueue(In&& in);
    void pump();
    void process(In& in);
    void handle_core_op(In& in);
    void handle_fwd(Msg& m);
    void start_miss(const In& in);
    void install(Msg& m);
    void finish_core_op(Txn& t, Line& ln);
    void evict_for(Txn& t, uint32_t set);
    void recompute_sbv(uint32_t set);
    void scan_and_forward(Msg m);  // ScopeFence / global fence path
    uint64_t run_scan(int scope_filter, std::vector<std::pair<PhysAddr, std::vector<uint8_t>>>* wbs);
    void send_llc(Msg&& m);
    bool txn_touching(PhysAddr lb) const;

    Engine& eng_;
    int comp_id_;
    const SimConfig& cfg_;
    const AddressMap& map_;
    int core_id_;
    bool scope_hw_;
    uint32_t sets_, ways_, line_size_;
    std::vector<std::vector<Line>> lines_;
    std::vector<bool> sbv_;
    ScopeBuffer sb_;
    ScanCostModel scan_cost_;
    CacheStats stats_;
    Link* to_llc_ = nullptr;
    CoreIf core_;
    std::deque<In> input_;
    bool pump_scheduled_ = false;
    bool scanning_ = false;  // fence scan drains same-scope txns first
    std::optional<Msg> pending_fence_;
    std::unordered_map<PhysAddr, Txn> txns_;
    uint64_t lru_tick_ = 0;
};

// ---------------------------------------------------------------------------
// Shared inclusive LLC with a full directory (owner + sharers per line).
// Compute ops scan-and-flush their scope here before being forwarded to the
// memory controller; the scan blocks the cache and is pruned by the set
// bit-vector and skipped entirely on a scope-buffer hit.
// ---------------------------------------------------------------------------

class LlcCache {
  public:
    LlcCache(Engine& eng, int comp_id, const SimConfig& cfg, const AddressMap& map);

    void set_links(std::vector<Link*> to_l1, Link* to_ctrl, std::vector<Link*> to_core);
    void set_chooser(Chooser* c) { chooser_ = c; }
    /// Called at message arrival (before queueing); used for the bypass ghost
    /// observable and arrival-order invariants.
    void set_arrival_hook(std::function<void(const Msg&)> h) { arrival_hook_ = std::move(h); }

    void receive(Msg&& m);       // requests from L1s / cores
    void receive_resp(Msg&& m);  // responses from the controller (and credits)

    const CacheStats& stats() const { return stats_; }
    uint64_t order_counter() const { return order_counter_; }

    struct LineView {
        PhysAddr line_base;
        char state;  // M (owned downstream), S, or E per directory
        bool pim_enabled;
        bool dirty;
        int owner;
        uint64_t sharers;
        uint64_t fill_stamp;
    };
    std::vector<LineView> valid_lines() const;
    bool line_valid(PhysAddr lb) const;
    /// True while the line is mid-reclaim (scan flush, victim eviction or an
    /// explicit flush with probes still in flight).
    bool reclaiming(PhysAddr lb) const;
    bool sbv_bit(uint32_t set) const { return sbv_[set]; }
    uint32_t sets() const { return sets_; }
    bool sbv_exact() const;
    const ScopeBuffer& scope_buffer() const { return sb_; }
    bool scope_has_valid_line(uint32_t scope) const;
    std::vector<std::pair<PhysAddr, std::vector<uint8_t>>> dirty_lines() const;
    std::string dump_json() const;
    bool quiesced() const {
        return txns_.empty() && input_.empty() && !scan_active_ && ctrl_wait_.empty() &&
               !pim_pending_;
    }

    /// Direct cache-image manipulation for component-level tests: installs a
    /// line as if filled from memory.
    void debug_install(PhysAddr line_base, bool dirty, const std::vector<uint8_t>& data);

  private:
    struct Line {
        bool valid = false;
        uint64_t tag = 0;
        int owner = -1;      // core holding E/M, -1 if none
        uint64_t sharers = 0;
        bool dirty = false;  // LLC data newer than memory
        bool pim_enabled = false;
        uint64_t lru = 0;
        uint64_t fill_stamp = 0;
        std::vector<uint8_t> data;
    };
    struct Txn {
        uint64_t stamp = 0;
        Msg req;
        bool mem_pending = false;
        std::set<int> pending_probes;
        bool want_owner_data = false;
        // victim eviction sub-state
        PhysAddr victim = 0;
        bool victim_active = false;
        std::set<int> victim_probes;
        std::vector<uint8_t> victim_data;
        bool victim_dirty = false;
        bool refill_parked = false;   // fill data waiting for a way to free
        std::vector<uint8_t> parked_fill;
        std::deque<Msg> deferred;
    };
    struct ScanLine {
        std::vector<uint8_t> data;
        bool dirty = false;
        std::set<int> waiting;  // cores still to ack the back-invalidate
    };
    struct Scan {
        bool is_fence = false;
        bool global = false;  // all PIM-enabled lines
        int scope = -1;
        Msg op;
        SimTime formula_end = 0;
        uint64_t formula_cycles = 0;
        std::map<PhysAddr, ScanLine> lines;
        bool hit_fast_path = false;
    };

    uint32_t set_of(PhysAddr lb) const {
        return static_cast<uint32_t>((lb / line_size_) & (sets_ - 1));
    }
    PhysAddr lb_of(PhysAddr a) const { return a & ~static_cast<PhysAddr>(line_size_ - 1); }
    Line* find(PhysAddr lb);
    const Line* find(PhysAddr lb) const;
    bool line_busy(PhysAddr lb) const;

    void pump();
    void process(Msg& m);
    void handle_gets(Msg& m);
    void handle_getm(Msg& m);
    void handle_put(Msg& m);
    void handle_flush(Msg& m);
    void handle_compute(Msg& m);  // PimOp / ScopeFence / PimFence
    void try_begin_scan();
    void finish_scan_if_done();
    void handle_probe_ack(Msg& m);
    void handle_mem_resp(Msg& m);
    void start_fetch(Txn& t, PhysAddr lb);
    void proceed_fetch(Txn& t, PhysAddr lb);
    void install_fill(Txn& t, PhysAddr lb, Msg& resp);
    void respond_data(Txn& t, PhysAddr lb);
    void close_txn(PhysAddr lb);
    void send_probe(MsgType t, PhysAddr lb, int core);
    void send_l1(int core, Msg&& m);
    void send_core(int core, Msg&& m);
    void forward_ctrl(Msg&& m);
    void drain_ctrl_wait();
    void recompute_sbv(uint32_t set);
    void on_install(Line& ln, PhysAddr lb, uint64_t stamp);
    void invalidate_line(Line& ln, PhysAddr lb);
    bool txn_same_scope_active(int scope) const;

    Engine& eng_;
    int comp_id_;
    const SimConfig& cfg_;
    const AddressMap& map_;
    uint32_t sets_, ways_, line_size_;
    std::vector<std::vector<Line>> lines_;
    std::vector<bool> sbv_;
    ScopeBuffer sb_;
    ScanCostModel scan_cost_;
    CacheStats stats_;
    std::vector<Link*> to_l1_;
    Link* to_ctrl_ = nullptr;
    std::vector<Link*> to_core_;
    Chooser* chooser_ = nullptr;
    std::function<void(const Msg&)> arrival_hook_;

    std::deque<Msg> input_;
    bool pump_scheduled_ = false;
    std::unordered_map<PhysAddr, Txn> txns_;
    std::optional<Msg> pim_pending_;  // compute op draining same-scope txns
    std::optional<Scan> scan_;
    bool scan_active_ = false;
    uint32_t ctrl_credits_;
    std::deque<Msg> ctrl_wait_;
    uint64_t lru_tick_ = 0;
    uint64_t order_counter_ = 0;
};

}  // namespace pimsim
