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

#include <algorithm>
#include <sstream>

#include <nlohmann/json.hpp>

#include "pimsim/cache.hpp"

namespace pimsim {

LlcCache::LlcCache(Engine& eng, int comp_id, const SimConfig& cfg, const AddressMap& map)
    : eng_(eng),
      comp_id_(comp_id),
      cfg_(cfg),
      map_(map),
      sets_(cfg.llc.sets()),
      ways_(cfg.llc.ways),
      line_size_(cfg.llc.line),
      lines_(sets_, std::vector<Line>(ways_)),
      sbv_(sets_, false),
      sb_(cfg.sb_llc.sets, cfg.sb_llc.ways),
      scan_cost_{cfg.scan_c_set, cfg.scan_c_line, cfg.scan_c_fixed},
      ctrl_credits_(cfg.memctrl_queue_depth) {}

void LlcCache::set_links(std::vector<Link*> to_l1, Link* to_ctrl, std::vector<Link*> to_core) {
    to_l1_ = std::move(to_l1);
    to_ctrl_ = to_ctrl;
    to_core_ = std::move(to_core);
}

LlcCache::Line* LlcCache::find(PhysAddr lb) {
    uint32_t s = set_of(lb);
    uint64_t tag = lb / line_size_;
    for (Line& ln : lines_[s])
        if (ln.valid && ln.tag == tag) return &ln;
    return nullptr;
}
const LlcCache::Line* LlcCache::find(PhysAddr lb) const {
    return const_cast<LlcCache*>(this)->find(lb);
}

bool LlcCache::line_busy(PhysAddr lb) const {
    if (txns_.count(lb)) return true;
    for (const auto& [l, t] : txns_)
        if (t.victim_active && t.victim == lb) return true;
    return false;
}

bool LlcCache::txn_same_scope_active(int scope) const {
    for (const auto& [lb, t] : txns_) {
        auto sc = map_.scope_of(lb);
        if (scope < 0) {  // global fence: any PIM-page transaction
            if (sc) return true;
            if (t.victim_active && map_.in_pim(t.victim)) return true;
        } else {
            if (sc && sc->index == static_cast<uint32_t>(scope)) return true;
            if (t.victim_active) {
                auto vs = map_.scope_of(t.victim);
                if (vs && vs->index == static_cast<uint32_t>(scope)) return true;
            }
        }
    }
    return false;
}

void LlcCache::receive(Msg&& m) {
    if (arrival_hook_) arrival_hook_(m);
    switch (m.type) {
        case MsgType::ProbeAckData:
        case MsgType::ProbeAckClean:
        case MsgType::FillAck:
            handle_probe_ack(m);
            return;
        case MsgType::PutM:
        case MsgType::PutS:
            handle_put(m);
            return;
        default:
            input_.push_back(std::move(m));
            pump();
            return;
    }
}

void LlcCache::receive_resp(Msg&& m) {
    switch (m.type) {
        case MsgType::MemReadResp:
            handle_mem_resp(m);
            return;
        case MsgType::CreditReturn:
            ctrl_credits_++;
            drain_ctrl_wait();
            return;
        default:
            throw SimBug("LLC: unexpected controller response " +
                         std::string(msg_type_name(m.type)));
    }
}

void LlcCache::pump() {
    if (pump_scheduled_ || scan_active_ || pim_pending_ || input_.empty()) return;
    pump_scheduled_ = true;
    eng_.schedule_in(cfg_.llc.latency, comp_id_, [this] {
        pump_scheduled_ = false;
        if (scan_active_ || pim_pending_ || input_.empty()) return;
        Msg m = std::move(input_.front());
        input_.pop_front();
        process(m);
        pump();
    });
}

void LlcCache::process(Msg& m) {
    ++order_counter_;
    switch (m.type) {
        case MsgType::GetS:
        case MsgType::GetM:
        case MsgType::FlushReq: {
            PhysAddr lb = lb_of(m.addr);
            if (line_busy(lb)) {
                auto it = txns_.find(lb);
                if (it != txns_.end()) {
                    it->second.deferred.push_back(std::move(m));
                } else {
                    for (auto& [l, t] : txns_)
                        if (t.victim_active && t.victim == lb) {
                            t.deferred.push_back(std::move(m));
                            break;
                        }
                }
                return;
            }
            if (m.type == MsgType::GetS) handle_gets(m);
            else if (m.type == MsgType::GetM) handle_getm(m);
            else handle_flush(m);
            return;
        }
        case MsgType::PimOp:
        case MsgType::ScopeFence:
        case MsgType::PimFence:
            handle_compute(m);
            return;
        case MsgType::UcLoad:
        case MsgType::UcStore:
            forward_ctrl(std::move(m));
            return;
        default:
            throw SimBug("LLC: unexpected request " + std::string(msg_type_name(m.type)));
    }
}

void LlcCache::handle_gets(Msg& m) {
    PhysAddr lb = lb_of(m.addr);
    Line* ln = find(lb);
    if (!ln) {
        stats_.misses++;
        Txn t;
        t.stamp = order_counter_;
        t.req = m;
        auto [it, ok] = txns_.emplace(lb, std::move(t));
        auto sc = map_.scope_of(lb);
        if (sc) sb_.erase(sc->index);  // scope has an in-flight fill from now on
        start_fetch(it->second, lb);
        return;
    }
    stats_.hits++;
    ln->lru = ++lru_tick_;
    if (ln->owner >= 0) {
        Txn t;
        t.stamp = order_counter_;
        t.req = m;
        t.want_owner_data = true;
        t.pending_probes.insert(ln->owner);
        int owner = ln->owner;
        auto [it, ok] = txns_.emplace(lb, std::move(t));
        (void)it;
        send_probe(MsgType::Downgrade, lb, owner);
        return;
    }
    Txn t;
    t.stamp = order_counter_;
    t.req = m;
    auto [it, ok] = txns_.emplace(lb, std::move(t));
    respond_data(it->second, lb);
}

void LlcCache::handle_getm(Msg& m) {
    PhysAddr lb = lb_of(m.addr);
    Line* ln = find(lb);
    if (!ln) {
        stats_.misses++;
        Txn t;
        t.stamp = order_counter_;
        t.req = m;
        auto [it, ok] = txns_.emplace(lb, std::move(t));
        auto sc = map_.scope_of(lb);
        if (sc) sb_.erase(sc->index);
        start_fetch(it->second, lb);
        return;
    }
    stats_.hits++;
    ln->lru = ++lru_tick_;
    Txn t;
    t.stamp = order_counter_;
    t.req = m;
    if (ln->owner >= 0 && ln->owner != m.src_core) {
        t.want_owner_data = true;
        t.pending_probes.insert(ln->owner);
    } else {
        for (int c = 0; c < 64; ++c)
            if ((ln->sharers >> c) & 1 && c != m.src_core) t.pending_probes.insert(c);
    }
    auto probes = t.pending_probes;
    auto [it, ok] = txns_.emplace(lb, std::move(t));
    if (probes.empty()) {
        respond_data(it->second, lb);
        return;
    }
    for (int c : probes) send_probe(MsgType::BackInval, lb, c);
}

void LlcCache::handle_put(Msg& m) {
    PhysAddr lb = lb_of(m.addr);
    int src = m.src_core;
    bool dirty = m.type == MsgType::PutM;
    // crossing with an active scan's back-invalidates
    if (scan_active_ && scan_) {
        auto it = scan_->lines.find(lb);
        if (it != scan_->lines.end() && it->second.waiting.count(src)) {
            if (dirty) {
                it->second.data = std::move(m.data);
                it->second.dirty = true;
            }
            it->second.waiting.erase(src);
            Msg ack;
            ack.type = MsgType::PutAck;
            ack.addr = lb;
            ack.src_core = src;
            send_l1(src, std::move(ack));
            finish_scan_if_done();
            return;
        }
    }
    // crossing with transaction probes (main line or victim)
    auto it = txns_.find(lb);
    if (it != txns_.end() && it->second.pending_probes.count(src)) {
        Txn& t = it->second;
        Line* ln = find(lb);
        if (dirty && ln) {
            ln->data = std::move(m.data);
            ln->dirty = true;
        }
        if (ln) {
            if (ln->owner == src) ln->owner = -1;
            ln->sharers &= ~(1ull << src);
        }
        t.pending_probes.erase(src);
        Msg ack;
        ack.type = MsgType::PutAck;
        ack.addr = lb;
        ack.src_core = src;
        send_l1(src, std::move(ack));
        if (t.pending_probes.empty()) respond_data(t, lb);
        return;
    }
    for (auto& [l, t] : txns_) {
        if (t.victim_active && t.victim == lb && t.victim_probes.count(src)) {
            if (dirty) {
                t.victim_data = std::move(m.data);
                t.victim_dirty = true;
            }
            t.victim_probes.erase(src);
            Msg ack;
            ack.type = MsgType::PutAck;
            ack.addr = lb;
            ack.src_core = src;
            send_l1(src, std::move(ack));
            if (t.victim_probes.empty()) proceed_fetch(t, l);
            return;
        }
    }
    Line* ln = find(lb);
    if (!ln) {
        // the line was flushed/evicted while this Put crossed it; the probe
        // already collected any dirty data from the still-resident copy
        Msg ack;
        ack.type = MsgType::PutAck;
        ack.addr = lb;
        ack.src_core = src;
        send_l1(src, std::move(ack));
        return;
    }
    if (dirty) {
        if (ln->owner == src) {
            ln->data = std::move(m.data);
            ln->dirty = true;
            ln->owner = -1;
            ln->sharers &= ~(1ull << src);
        }
        // otherwise a probe already collected this data; drop the stale copy
    } else {
        if (ln->owner == src) ln->owner = -1;
        ln->sharers &= ~(1ull << src);
    }
    Msg ack;
    ack.type = MsgType::PutAck;
    ack.addr = lb;
    ack.src_core = src;
    send_l1(src, std::move(ack));
}

void LlcCache::handle_flush(Msg& m) {
    PhysAddr lb = lb_of(m.addr);
    Line* ln = find(lb);
    if (!ln) {
        if (!m.data.empty()) throw SimBug("LLC: flush carries data for absent line");
        Msg ack;
        ack.type = MsgType::FlushAck;
        ack.addr = lb;
        ack.seq = m.seq;
        send_core(m.src_core, std::move(ack));
        return;
    }
    if (!m.data.empty()) {
        ln->data = m.data;
        ln->dirty = true;
    }
    if (ln->owner == m.src_core) ln->owner = -1;
    ln->sharers &= ~(1ull << m.src_core);
    Txn t;
    t.stamp = order_counter_;
    t.req = m;
    if (ln->owner >= 0) t.pending_probes.insert(ln->owner);
    for (int c = 0; c < 64; ++c)
        if ((ln->sharers >> c) & 1) t.pending_probes.insert(c);
    auto probes = t.pending_probes;
    auto [it, ok] = txns_.emplace(lb, std::move(t));
    if (probes.empty()) {
        respond_data(it->second, lb);  // flush completion path
        return;
    }
    for (int c : probes) send_probe(MsgType::BackInval, lb, c);
}

void LlcCache::handle_compute(Msg& m) {
    bool baseline = model_is_baseline(cfg_.model);
    if (m.type == MsgType::PimOp) m.value = order_counter_;  // LLC-order stamp
    if (baseline) {
        if (m.type == MsgType::PimOp) {
            forward_ctrl(std::move(m));
        }
        // fences terminate silently under baselines
        return;
    }
    if (m.type == MsgType::PimFence && !cfg_.pimfence_orders_all) {
        return;  // ordering token only; no flush duty
    }
    pim_pending_ = std::move(m);
    try_begin_scan();
}

void LlcCache::try_begin_scan() {
    if (!pim_pending_ || scan_active_) return;
    Msg& m = *pim_pending_;
    bool global = m.type == MsgType::PimFence;
    int scope = global ? -1 : m.scope;
    if (txn_same_scope_active(scope)) return;  // retried as transactions close
    bool is_pim = m.type == MsgType::PimOp;
    // scope-buffer fast path: scope known to have zero resident lines
    if (!global && scope >= 0 && sb_.contains(static_cast<uint32_t>(scope))) {
        if (is_pim) {
            stats_.sb_hits++;
            Msg op = std::move(m);
            pim_pending_.reset();
            forward_ctrl(std::move(op));
        } else {
            pim_pending_.reset();  // fence terminates here
        }
        pump();
        return;
    }
    // full scan over SBV-marked sets
    Scan sc;
    sc.is_fence = !is_pim;
    sc.global = global;
    sc.scope = scope;
    sc.op = std::move(m);
    pim_pending_.reset();
    uint64_t visited = 0, flushed = 0;
    for (uint32_t s = 0; s < sets_; ++s) {
        if (!sbv_[s]) continue;
        ++visited;
        for (Line& ln : lines_[s]) {
            if (!ln.valid || !ln.pim_enabled) continue;
            PhysAddr lb = ln.tag * line_size_;
            if (!global) {
                auto lsc = map_.scope_of(lb);
                if (!lsc || lsc->index != static_cast<uint32_t>(scope)) continue;
            }
            ScanLine sl;
            sl.data = ln.data;
            sl.dirty = ln.dirty;
            if (ln.owner >= 0) sl.waiting.insert(ln.owner);
            for (int c = 0; c < 64; ++c)
                if ((ln.sharers >> c) & 1) sl.waiting.insert(c);
            for (int c : sl.waiting) send_probe(MsgType::BackInval, lb, c);
            invalidate_line(ln, lb);
            sc.lines.emplace(lb, std::move(sl));
            ++flushed;
        }
        recompute_sbv(s);
    }
    uint64_t cycles = scan_cost_.c_fixed + scan_cost_.c_set * visited + scan_cost_.c_line * flushed;
    sc.formula_cycles = cycles;
    sc.formula_end = eng_.now() + cycles;
    if (is_pim) {
        stats_.sb_misses++;
        stats_.scan_samples++;
        stats_.scan_cycles_sum += cycles;
        stats_.skip_ratio_sum += static_cast<double>(sets_ - visited) / sets_;
    } else {
        stats_.fence_scans++;
    }
    stats_.lines_flushed += flushed;
    scan_ = std::move(sc);
    scan_active_ = true;
    eng_.schedule_at(scan_->formula_end, comp_id_, [this] { finish_scan_if_done(); });
}

void LlcCache::finish_scan_if_done() {
    if (!scan_active_ || !scan_) return;
    if (eng_.now() < scan_->formula_end) return;
    for (auto& [lb, sl] : scan_->lines)
        if (!sl.waiting.empty()) return;
    // writebacks first, then the op itself; FIFO to the controller
    for (auto& [lb, sl] : scan_->lines) {
        if (!sl.dirty) continue;
        stats_.dirty_writebacks++;
        Msg wb;
        wb.type = MsgType::MemWrite;
        wb.addr = lb;
        auto sc2 = map_.scope_of(lb);
        wb.scope = sc2 ? static_cast<int>(sc2->index) : -1;
        wb.pim_page = map_.in_pim(lb);
        wb.data = std::move(sl.data);
        wb.fence_all = false;
        wb.size = 1;  // scan-origin marker for conservation accounting
        forward_ctrl(std::move(wb));
    }
    bool is_pim = scan_->op.type == MsgType::PimOp;
    if (!scan_->global && scan_->scope >= 0)
        sb_.insert(static_cast<uint32_t>(scan_->scope));
    Msg op = std::move(scan_->op);
    scan_.reset();
    scan_active_ = false;
    if (is_pim) forward_ctrl(std::move(op));
    pump();
}

void LlcCache::handle_probe_ack(Msg& m) {
    PhysAddr lb = lb_of(m.addr);
    int src = m.src_core;
    if (m.type == MsgType::FillAck) {
        auto it = txns_.find(lb);
        if (it == txns_.end()) throw SimBug("LLC: fill ack without transaction");
        close_txn(lb);
        return;
    }
    if (scan_active_ && scan_) {
        auto it = scan_->lines.find(lb);
        if (it != scan_->lines.end() && it->second.waiting.count(src)) {
            if (m.type == MsgType::ProbeAckData) {
                it->second.data = std::move(m.data);
                it->second.dirty = true;
            }
            it->second.waiting.erase(src);
            finish_scan_if_done();
            return;
        }
    }
    auto it = txns_.find(lb);
    if (it != txns_.end() && it->second.pending_probes.count(src)) {
        Txn& t = it->second;
        Line* ln = find(lb);
        if (m.type == MsgType::ProbeAckData && ln) {
            ln->data = std::move(m.data);
            ln->dirty = true;
        }
        if (ln) {
            if (t.req.type == MsgType::GetS && ln->owner == src) {
                // downgraded owner stays a sharer
                ln->sharers |= 1ull << src;
                ln->owner = -1;
            } else {
                if (ln->owner == src) ln->owner = -1;
                if (t.req.type != MsgType::GetS) ln->sharers &= ~(1ull << src);
            }
        }
        t.pending_probes.erase(src);
        if (t.pending_probes.empty()) respond_data(t, lb);
        return;
    }
    for (auto& [l, t] : txns_) {
        if (t.victim_active && t.victim == lb && t.victim_probes.count(src)) {
            if (m.type == MsgType::ProbeAckData) {
                t.victim_data = std::move(m.data);
                t.victim_dirty = true;
            }
            t.victim_probes.erase(src);
            if (t.victim_probes.empty()) proceed_fetch(t, l);
            return;
        }
    }
    // stale ack: the holder's Put already satisfied the probe
}

void LlcCache::start_fetch(Txn& t, PhysAddr lb) {
    uint32_t s = set_of(lb);
    Line* free_way = nullptr;
    for (Line& ln : lines_[s])
        if (!ln.valid) {
            free_way = &ln;
            break;
        }
    if (free_way) {
        proceed_fetch(t, lb);
        return;
    }
    // back-invalidate and evict the LRU line (inclusive hierarchy)
    Line* victim = nullptr;
    for (Line& ln : lines_[s]) {
        PhysAddr vlb = ln.tag * line_size_;
        if (line_busy(vlb)) continue;
        if (scan_active_ && scan_ && scan_->lines.count(vlb)) continue;
        if (!victim || ln.lru < victim->lru) victim = &ln;
    }
    if (!victim) throw SimBug("LLC: set exhausted by concurrent transactions");
    PhysAddr vlb = victim->tag * line_size_;
    t.victim = vlb;
    t.victim_active = true;
    t.victim_data = victim->data;
    t.victim_dirty = victim->dirty;
    if (victim->owner >= 0) t.victim_probes.insert(victim->owner);
    for (int c = 0; c < 64; ++c)
        if ((victim->sharers >> c) & 1) t.victim_probes.insert(c);
    auto probes = t.victim_probes;
    invalidate_line(*victim, vlb);
    recompute_sbv(set_of(vlb));
    if (probes.empty()) {
        proceed_fetch(t, lb);
        return;
    }
    for (int c : probes) send_probe(MsgType::BackInval, vlb, c);
}

void LlcCache::proceed_fetch(Txn& t, PhysAddr lb) {
    if (t.victim_active) {
        if (t.victim_dirty) {
            Msg wb;
            wb.type = MsgType::MemWrite;
            wb.addr = t.victim;
            auto sc = map_.scope_of(t.victim);
            wb.scope = sc ? static_cast<int>(sc->index) : -1;
            wb.pim_page = map_.in_pim(t.victim);
            wb.data = std::move(t.victim_data);
            forward_ctrl(std::move(wb));
        }
        t.victim_active = false;
        // requests that piled on the victim line can run again after close
    }
    if (t.refill_parked) {
        t.refill_parked = false;
        Msg resp;
        resp.data = std::move(t.parked_fill);
        install_fill(t, lb, resp);
        return;
    }
    if (t.mem_pending) return;
    t.mem_pending = true;
    Msg rd;
    rd.type = MsgType::MemRead;
    rd.addr = lb;
    auto sc = map_.scope_of(lb);
    rd.scope = sc ? static_cast<int>(sc->index) : -1;
    rd.pim_page = map_.in_pim(lb);
    rd.src_core = t.req.src_core;
    rd.req_id = t.req.req_id;
    forward_ctrl(std::move(rd));
}

void LlcCache::handle_mem_resp(Msg& m) {
    PhysAddr lb = lb_of(m.addr);
    auto it = txns_.find(lb);
    if (it == txns_.end() || !it->second.mem_pending)
        throw SimBug("LLC: memory response without transaction");
    it->second.mem_pending = false;
    install_fill(it->second, lb, m);
}

void LlcCache::install_fill(Txn& t, PhysAddr lb, Msg& resp) {
    uint32_t s = set_of(lb);
    Line* target = nullptr;
    for (Line& ln : lines_[s])
        if (!ln.valid) {
            target = &ln;
            break;
        }
    if (!target) {
        // the freed way was taken by a concurrent fill; evict again and
        // park the data until the new victim drains
        t.parked_fill = std::move(resp.data);
        t.refill_parked = true;
        start_fetch(t, lb);
        if (t.refill_parked) return;  // still waiting on victim probes
        return;
    }
    if (!target) throw SimBug("LLC: no way available after eviction");
    target->valid = true;
    target->tag = lb / line_size_;
    target->owner = -1;
    target->sharers = 0;
    target->dirty = false;
    target->pim_enabled = map_.in_pim(lb);
    target->lru = ++lru_tick_;
    target->data = std::move(resp.data);
    on_install(*target, lb, t.stamp);
    respond_data(t, lb);
}

void LlcCache::on_install(Line& ln, PhysAddr lb, uint64_t stamp) {
    ln.fill_stamp = stamp;
    if (ln.pim_enabled) sbv_[set_of(lb)] = true;
    auto sc = map_.scope_of(lb);
    if (sc) sb_.erase(sc->index);
}

void LlcCache::invalidate_line(Line& ln, PhysAddr lb) {
    (void)lb;
    ln.valid = false;
    ln.owner = -1;
    ln.sharers = 0;
    ln.dirty = false;
}

void LlcCache::respond_data(Txn& t, PhysAddr lb) {
    if (t.req.type == MsgType::FlushReq) {
        Line* ln = find(lb);
        if (ln) {
            if (ln->dirty) {
                Msg wb;
                wb.type = MsgType::MemWrite;
                wb.addr = lb;
                auto sc = map_.scope_of(lb);
                wb.scope = sc ? static_cast<int>(sc->index) : -1;
                wb.pim_page = map_.in_pim(lb);
                wb.data = ln->data;
                forward_ctrl(std::move(wb));
            }
            invalidate_line(*ln, lb);
            recompute_sbv(set_of(lb));
        }
        Msg ack;
        ack.type = MsgType::FlushAck;
        ack.addr = lb;
        ack.seq = t.req.seq;
        send_core(t.req.src_core, std::move(ack));
        close_txn(lb);
        return;
    }
    Line* ln = find(lb);
    if (!ln) throw SimBug("LLC: responding without a valid line");
    int dst = t.req.src_core;
    Msg resp;
    resp.addr = lb;
    auto sc = map_.scope_of(lb);
    resp.scope = sc ? static_cast<int>(sc->index) : -1;
    resp.pim_page = ln->pim_enabled;
    resp.req_id = t.req.req_id;
    resp.value = t.stamp;
    resp.data = ln->data;
    if (t.req.type == MsgType::GetM) {
        ln->owner = dst;
        ln->sharers = 1ull << dst;
        resp.type = MsgType::GrantM;
    } else {
        if (ln->owner == -1 && ln->sharers == 0) {
            ln->owner = dst;
            ln->sharers = 1ull << dst;
            resp.type = MsgType::DataE;
        } else {
            ln->sharers |= 1ull << dst;
            resp.type = MsgType::DataS;
        }
    }
    send_l1(dst, std::move(resp));
    // txn stays open until the L1 confirms the install (FillAck)
}

void LlcCache::close_txn(PhysAddr lb) {
    auto it = txns_.find(lb);
    if (it == txns_.end()) return;
    std::deque<Msg> deferred = std::move(it->second.deferred);
    txns_.erase(it);
    for (auto rit = deferred.rbegin(); rit != deferred.rend(); ++rit)
        input_.push_front(std::move(*rit));
    if (pim_pending_ && !scan_active_) try_begin_scan();
    pump();
}

void LlcCache::send_probe(MsgType ty, PhysAddr lb, int core) {
    Msg p;
    p.type = ty;
    p.addr = lb;
    auto sc = map_.scope_of(lb);
    p.scope = sc ? static_cast<int>(sc->index) : -1;
    p.pim_page = map_.in_pim(lb);
    send_l1(core, std::move(p));
}

void LlcCache::send_l1(int core, Msg&& m) { to_l1_.at(core)->send(std::move(m)); }
void LlcCache::send_core(int core, Msg&& m) { to_core_.at(core)->send(std::move(m)); }

void LlcCache::forward_ctrl(Msg&& m) {
    if (ctrl_credits_ > 0 && ctrl_wait_.empty()) {
        ctrl_credits_--;
        to_ctrl_->send(std::move(m));
        return;
    }
    ctrl_wait_.push_back(std::move(m));
}

void LlcCache::drain_ctrl_wait() {
    while (ctrl_credits_ > 0 && !ctrl_wait_.empty()) {
        ctrl_credits_--;
        to_ctrl_->send(std::move(ctrl_wait_.front()));
        ctrl_wait_.pop_front();
    }
}

void LlcCache::recompute_sbv(uint32_t set) {
    bool any = false;
    for (const Line& ln : lines_[set])
        if (ln.valid && ln.pim_enabled) {
            any = true;
            break;
        }
    sbv_[set] = any;
}

std::vector<LlcCache::LineView> LlcCache::valid_lines() const {
    std::vector<LineView> out;
    for (uint32_t s = 0; s < sets_; ++s)
        for (const Line& ln : lines_[s]) {
            if (!ln.valid) continue;
            char st = ln.owner >= 0 ? 'M' : (ln.sharers ? 'S' : 'E');
            out.push_back(LineView{ln.tag * line_size_, st, ln.pim_enabled, ln.dirty, ln.owner,
                                   ln.sharers, ln.fill_stamp});
        }
    return out;
}

bool LlcCache::line_valid(PhysAddr lb) const { return find(lb) != nullptr; }

bool LlcCache::reclaiming(PhysAddr lb) const {
    if (scan_ && scan_->lines.count(lb)) return true;
    for (const auto& [l, t] : txns_) {
        if (t.victim_active && t.victim == lb) return true;
        if (l == lb && (t.req.type == MsgType::FlushReq || !t.pending_probes.empty())) return true;
    }
    return false;
}

bool LlcCache::sbv_exact() const {
    for (uint32_t s = 0; s < sets_; ++s) {
        bool any = false;
        for (const Line& ln : lines_[s])
            if (ln.valid && ln.pim_enabled) any = true;
        if (any != sbv_[s]) return false;
    }
    return true;
}

bool LlcCache::scope_has_valid_line(uint32_t scope) const {
    for (uint32_t s = 0; s < sets_; ++s)
        for (const Line& ln : lines_[s]) {
            if (!ln.valid) continue;
            auto sc = map_.scope_of(ln.tag * line_size_);
            if (sc && sc->index == scope) return true;
        }
    return false;
}

std::vector<std::pair<PhysAddr, std::vector<uint8_t>>> LlcCache::dirty_lines() const {
    std::vector<std::pair<PhysAddr, std::vector<uint8_t>>> out;
    for (uint32_t s = 0; s < sets_; ++s)
        for (const Line& ln : lines_[s])
            if (ln.valid && ln.dirty) out.emplace_back(ln.tag * line_size_, ln.data);
    return out;
}

std::string LlcCache::dump_json() const {
    nlohmann::json j;
    for (uint32_t s = 0; s < sets_; ++s) {
        nlohmann::json set_arr = nlohmann::json::array();
        for (const Line& ln : lines_[s]) {
            if (!ln.valid) continue;
            char st = ln.owner >= 0 ? 'M' : (ln.sharers ? 'S' : 'E');
            set_arr.push_back({{"tag", ln.tag}, {"state", std::string(1, st)},
                               {"pim_enabled", ln.pim_enabled}});
        }
        if (!set_arr.empty()) j[std::to_string(s)] = set_arr;
    }
    return j.dump();
}

void LlcCache::debug_install(PhysAddr line_base, bool dirty, const std::vector<uint8_t>& data) {
    uint32_t s = set_of(line_base);
    for (Line& ln : lines_[s]) {
        if (ln.valid) continue;
        ln.valid = true;
        ln.tag = line_base / line_size_;
        ln.owner = -1;
        ln.sharers = 0;
        ln.dirty = dirty;
        ln.pim_enabled = map_.in_pim(line_base);
        ln.lru = ++lru_tick_;
        ln.data = data;
        ln.data.resize(line_size_);
        if (ln.pim_enabled) sbv_[s] = true;
        return;
    }
    throw SimBug("debug_install: set full");
}

}  // namespace pimsim
