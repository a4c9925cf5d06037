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

#include "pimsim/machine.hpp"

#include <algorithm>

namespace pimsim {

namespace comp {
// component id bands for engine diagnostics
constexpr int kCore = 100;
constexpr int kL1 = 200;
constexpr int kLlc = 300;
constexpr int kCtrl = 301;
constexpr int kPim = 302;
constexpr int kLink = 400;
}  // namespace comp

Machine::Machine(const SimConfig& cfg, Chooser* chooser)
    : cfg_(cfg), map_(cfg.address_map_config()), chooser_(chooser) {
    cfg_.validate();
    if (!chooser_) {
        default_chooser_ = std::make_unique<DefaultChooser>();
        chooser_ = default_chooser_.get();
    }
    mem_ = std::make_unique<MainMemory>(map_);
}

Machine::~Machine() = default;

void Machine::load_programs(const std::vector<ThreadProgram>& progs) {
    n_threads_ = static_cast<int>(progs.size());
    n_cores_ = std::max<uint32_t>(cfg_.cores, static_cast<uint32_t>(n_threads_));
    if (interloper_) {
        interloper_core_ = static_cast<int>(n_cores_);
        n_cores_ += 1;
    }
    build();
    for (int t = 0; t < n_threads_; ++t) {
        cores_[t]->set_program(progs[t]);
        cores_[t]->start(0);
    }
    if (interloper_) {
        ThreadProgram p;
        p.push(Stmt::load(interloper_->addr, 0));
        cores_[interloper_core_]->set_program(std::move(p));
        // started on trigger
    }
    ack_outstanding_.assign(static_cast<size_t>(n_threads_) + 2, {});
}

void Machine::set_interloper(const InterloperSpec& spec) {
    if (!cores_.empty()) throw SimBug("set_interloper must precede load_programs");
    interloper_ = spec;
}

void Machine::build() {
    pim_ = std::make_unique<PimModule>(eng_, comp::kPim, cfg_, *mem_);
    ctrl_ = std::make_unique<MemCtrl>(eng_, comp::kCtrl, cfg_, *mem_, *pim_);
    llc_ = std::make_unique<LlcCache>(eng_, comp::kLlc, cfg_, map_);
    llc_->set_chooser(chooser_);
    ctrl_->set_chooser(chooser_);

    auto mk_link = [&](const std::string& name, LinkKind kind, int target,
                       std::function<void(Msg&&)> deliver, uint32_t base) -> Link* {
        links_.push_back(std::make_unique<Link>(eng_, target, name, base, cfg_.net_jitter_max,
                                                kind, cfg_.pimfence_orders_all, cfg_.seed));
        links_.back()->set_deliver(std::move(deliver));
        links_.back()->set_chooser(chooser_);
        return links_.back().get();
    };

    std::vector<Link*> llc_to_l1(n_cores_), l1_to_llc(n_cores_), core_to_llc(n_cores_);
    std::vector<Link*> ctrl_to_core(n_cores_), llc_to_core(n_cores_);
    for (uint32_t c = 0; c < n_cores_; ++c) {
        bool scope_hw = cfg_.model == Model::ScopeRelaxed;
        l1s_.push_back(
            std::make_unique<L1Cache>(eng_, comp::kL1 + static_cast<int>(c), cfg_, map_,
                                      static_cast<int>(c), scope_hw));
        int thread = static_cast<int>(c);
        cores_.push_back(std::make_unique<Core>(eng_, comp::kCore + static_cast<int>(c), cfg_,
                                                map_, static_cast<int>(c), thread));
    }
    for (uint32_t c = 0; c < n_cores_; ++c) {
        std::string cs = std::to_string(c);
        L1Cache* l1 = l1s_[c].get();
        Core* core = cores_[c].get();
        l1_to_llc[c] = mk_link("l1_llc." + cs, LinkKind::Upper, comp::kLlc,
                               [this](Msg&& m) { llc_->receive(std::move(m)); },
                               cfg_.net_base_latency);
        llc_to_l1[c] = mk_link("llc_l1." + cs, LinkKind::Upper, comp::kL1 + static_cast<int>(c),
                               [l1](Msg&& m) { l1->receive(std::move(m)); },
                               cfg_.net_base_latency);
        core_to_llc[c] = mk_link("core_llc." + cs, LinkKind::Upper, comp::kLlc,
                                 [this](Msg&& m) { llc_->receive(std::move(m)); },
                                 cfg_.net_base_latency);
        ctrl_to_core[c] = mk_link("ctrl_core." + cs, LinkKind::Sideband,
                                  comp::kCore + static_cast<int>(c),
                                  [core](Msg&& m) { core->receive_sideband(std::move(m)); },
                                  cfg_.net_base_latency);
        llc_to_core[c] = mk_link("llc_core." + cs, LinkKind::Sideband,
                                 comp::kCore + static_cast<int>(c),
                                 [core](Msg&& m) { core->receive_sideband(std::move(m)); },
                                 cfg_.net_base_latency);
        l1->set_links(l1_to_llc[c]);
        core->set_l1(l1);
        core->set_llc_link(core_to_llc[c]);

        L1Cache::CoreIf cif;
        cif.load_done = [core](uint64_t seq, uint64_t v) { core->l1_load_done(seq, v); };
        cif.store_done = [core](uint64_t seq) { core->l1_store_done(seq); };
        l1->set_core_if(std::move(cif));

        Core::Hooks hooks;
        int core_idx = static_cast<int>(c);
        hooks.fresh_id = [this] { return ++next_req_id_; };
        hooks.on_load_value = [this, core_idx](uint64_t seq, uint64_t value) {
            if (interloper_ && core_idx == interloper_core_) {
                interloper_fired_ = true;
            }
            if (track_loads_) load_values_[{core_idx, seq}] = value;
        };
        hooks.on_pim_ack_window = [this, core_idx](bool outstanding, uint64_t seq) {
            if (core_idx >= static_cast<int>(ack_outstanding_.size())) return;
            if (outstanding)
                ack_outstanding_[core_idx].insert(seq);
            else
                ack_outstanding_[core_idx].erase(seq);
        };
        hooks.on_commit = [this, core_idx](int stmt_idx) {
            if (interloper_ && core_idx == interloper_->watch_thread && interloper_slot_stmt_ >= 0 &&
                stmt_idx == interloper_slot_stmt_ && !interloper_started_) {
                interloper_started_ = true;
                SimTime at = eng_.now() + interloper_slot_delay_;
                cores_[interloper_core_]->start(at);
            }
        };
        hooks.on_trace = [this](const MemRequest& r) {
            if (collect_trace_) trace_.push_back(r.to_trace_json(eng_.now()));
        };
        core->set_hooks(std::move(hooks));
    }

    Link* llc_to_ctrl = mk_link("llc_ctrl", LinkKind::LlcCtrl, comp::kCtrl,
                                [this](Msg&& m) { ctrl_->receive(std::move(m)); },
                                cfg_.net_base_latency);
    Link* ctrl_to_llc = mk_link("ctrl_llc", LinkKind::Sideband, comp::kLlc,
                                [this](Msg&& m) { llc_->receive_resp(std::move(m)); },
                                cfg_.net_base_latency);
    llc_->set_links(llc_to_l1, llc_to_ctrl, llc_to_core);
    ctrl_->set_links(ctrl_to_llc, ctrl_to_core);

    pim_->set_respond([this, ctrl_to_llc, ctrl_to_core](Msg&& m) {
        if (m.type == MsgType::MemReadResp) {
            ctrl_to_llc->send(std::move(m));
        } else {
            ctrl_to_core.at(m.src_core)->send(std::move(m));
        }
    });
    pim_->set_on_apply([this](const Msg& op) { on_pim_apply(op); });

    llc_->set_arrival_hook([this](const Msg& m) {
        switch (m.type) {
            case MsgType::GetS:
            case MsgType::GetM:
            case MsgType::FlushReq:
            case MsgType::UcLoad:
            case MsgType::UcStore:
            case MsgType::PimOp:
                break;
            default:
                return;
        }
        int t = m.src_core;
        if (t < 0 || t >= static_cast<int>(ack_outstanding_.size())) return;
        for (uint64_t pim_seq : ack_outstanding_[t]) {
            if (m.seq > pim_seq) {
                bypass_observed_ = true;
                break;
            }
        }
    });

    if (cfg_.invariant_check_interval > 0) {
        eng_.set_event_hook([this](uint64_t n) {
            if (n % cfg_.invariant_check_interval == 0) {
                check_invariants();
                ++invariant_checks_;
            }
        });
    }
    eng_.set_watchdog(cfg_.watchdog_events);
}

void Machine::on_pim_apply(const Msg& op) {
    if (model_is_baseline(cfg_.model)) return;
    uint64_t stamp = op.value;  // LLC order stamp at forward time
    uint32_t scope = op.pim.scope_index;
    auto offending = [&](PhysAddr lb, uint64_t fill_stamp) {
        auto sc = map_.scope_of(lb);
        return sc && sc->index == scope && fill_stamp <= stamp;
    };
    for (const auto& lv : llc_->valid_lines()) {
        if (offending(lv.line_base, lv.fill_stamp))
            throw SimBug("flush atomicity violated: LLC line filled before the compute op "
                         "survived its scan (scope " +
                         std::to_string(scope) + ")");
    }
    for (const auto& l1 : l1s_) {
        for (const auto& lv : l1->valid_lines()) {
            if (offending(lv.line_base, lv.fill_stamp))
                throw SimBug("flush atomicity violated: L1 line filled before the compute op "
                             "survived (scope " +
                             std::to_string(scope) + ")");
        }
    }
}

RunResult Machine::run(SimTime limit) {
    if (cores_.empty()) throw SimBug("run: no programs loaded");
    // interloper slot selection is the first choice point of a run
    if (interloper_) {
        size_t n = interloper_->slots.size() + 1;  // +1: never fires
        size_t pick = chooser_->choose(n, "interloper.slot");
        if (pick < interloper_->slots.size()) {
            interloper_slot_stmt_ = interloper_->slots[pick].first;
            interloper_slot_delay_ = interloper_->slots[pick].second;
        } else {
            interloper_slot_stmt_ = -1;
        }
    }
    eng_.run_until(limit);
    RunResult r;
    r.hit_limit = !eng_.quiescent();
    for (int t = 0; t < n_threads_; ++t) {
        if (!cores_[t]->done()) r.hit_limit = true;
    }
    r.total_cycles = eng_.now();
    for (int t = 0; t < n_threads_; ++t) {
        r.thread_cycles.push_back(cores_[t]->finish_time());
        r.registers.push_back(cores_[t]->registers());
    }
    if (interloper_ && interloper_core_ >= 0) {
        r.interloper_fired = interloper_fired_;
        r.interloper_value = cores_[interloper_core_]->registers().empty()
                                 ? 0
                                 : cores_[interloper_core_]->registers()[0];
    }
    r.bypass_observed = bypass_observed_;
    r.load_values = load_values_;
    r.trace = trace_;
    r.trace_hash = eng_.trace_hash();
    return r;
}

void Machine::flatten_caches() {
    // LLC dirty data first, then L1 modified lines (single-writer makes the
    // per-line order unique)
    for (auto& [lb, data] : llc_->dirty_lines()) mem_->write_line(lb, data);
    for (auto& l1 : l1s_)
        for (auto& [lb, data] : l1->dirty_lines()) mem_->write_line(lb, data);
}

void Machine::check_invariants() {
    // set bit-vector exactness
    if (!llc_->sbv_exact()) throw SimBug("invariant: LLC set bit-vector out of sync");
    for (auto& l1 : l1s_)
        if (!l1->sbv_exact()) throw SimBug("invariant: L1 set bit-vector out of sync");
    // scope buffer implication: tracked scope => zero resident lines
    for (uint32_t s = 0; s < cfg_.n_scopes; ++s) {
        if (llc_->scope_buffer().contains(s) && llc_->scope_has_valid_line(s))
            throw SimBug("invariant: scope buffer lists scope " + std::to_string(s) +
                         " but the LLC holds its lines");
        for (auto& l1 : l1s_) {
            if (l1->scope_buffer() && l1->scope_buffer()->contains(s) &&
                l1->scope_has_valid_line(s))
                throw SimBug("invariant: L1 scope buffer lists scope " + std::to_string(s) +
                             " but lines are resident");
        }
    }
    // inclusivity and single-writer
    std::map<PhysAddr, int> writers;
    std::map<PhysAddr, int> holders;
    for (auto& l1 : l1s_) {
        for (const auto& lv : l1->valid_lines()) {
            holders[lv.line_base]++;
            if (lv.state == 'M' || lv.state == 'E') writers[lv.line_base]++;
            if (!llc_->line_valid(lv.line_base) && !llc_->reclaiming(lv.line_base))
                throw SimBug("invariant: inclusivity breach (line valid in L1, absent in LLC)");
        }
    }
    for (auto& [lb, n] : writers) {
        if (n > 1) throw SimBug("invariant: multiple exclusive copies of a line");
        if (holders[lb] > 1)
            throw SimBug("invariant: exclusive copy coexists with other cached copies");
    }
}

RunMetrics Machine::metrics() const {
    RunMetrics m;
    m.model = model_name(cfg_.model);
    m.seed = cfg_.seed;
    m.config_hash = cfg_.hash();
    m.total_cycles = eng_.now();
    for (int t = 0; t < n_threads_; ++t) m.thread_cycles.push_back(cores_[t]->finish_time());
    const CacheStats& ls = llc_->stats();
    m.llc_sb_hits = ls.sb_hits;
    m.llc_sb_misses = ls.sb_misses;
    m.llc_scan_cycles_sum = ls.scan_cycles_sum;
    m.llc_skip_ratio_sum = ls.skip_ratio_sum;
    m.llc_skip_samples = ls.scan_samples;
    m.llc_lines_flushed = ls.lines_flushed;
    m.llc_dirty_writebacks = ls.dirty_writebacks;
    m.llc_fence_scans = ls.fence_scans;
    m.llc_hits = ls.hits;
    m.llc_misses = ls.misses;
    for (const auto& l1 : l1s_) {
        m.l1_sb_hits += l1->stats().sb_hits;
        m.l1_sb_misses += l1->stats().sb_misses;
        m.l1_fence_scans += l1->stats().fence_scans;
    }
    const PimModule::Stats& ps = pim_->stats();
    m.pim_ops_executed = ps.ops_executed;
    m.pim_arrival_samples = ps.arrival_samples;
    m.pim_occupancy_sum = ps.occupancy_sum;
    m.pim_unique_scopes_sum = ps.unique_scopes_sum;
    m.pim_max_occupancy = ps.max_occupancy;
    const MemCtrl::Stats& cs = ctrl_->stats();
    m.ctrl_accepted = cs.accepted;
    m.ctrl_pim_acks = cs.pim_acks;
    m.ctrl_arrivals = cs.arrivals;
    m.ctrl_queue_occupancy_sum = cs.queue_occupancy_sum;
    m.ctrl_scan_writebacks = cs.scan_writebacks;
    m.invariant_checks = invariant_checks_;
    m.events_dispatched = eng_.dispatched();
    m.trace_hash = eng_.trace_hash();
    return m;
}

}  // namespace pimsim
