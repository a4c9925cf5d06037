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
#include <cstring>

#include "pimsim/cache.hpp"

namespace pimsim {

bool ScopeBuffer::contains(uint32_t scope) const {
    uint32_t s = set_of(scope);
    for (uint32_t w = 0; w < ways_; ++w) {
        const Entry& e = entries_[s * ways_ + w];
        if (e.valid && e.scope == scope) return true;
    }
    return false;
}

void ScopeBuffer::insert(uint32_t scope) {
    uint32_t s = set_of(scope);
    for (uint32_t w = 0; w < ways_; ++w) {
        Entry& e = entries_[s * ways_ + w];
        if (e.valid && e.scope == scope) {
            e.lru = ++tick_;
            return;
        }
    }
    // invalid way first, else overwrite the LRU way silently
    Entry* victim = nullptr;
    for (uint32_t w = 0; w < ways_; ++w) {
        Entry& e = entries_[s * ways_ + w];
        if (!e.valid) {
            victim = &e;
            break;
        }
        if (!victim || e.lru < victim->lru) victim = &e;
    }
    victim->valid = true;
    victim->scope = scope;
    victim->lru = ++tick_;
}

void ScopeBuffer::erase(uint32_t scope) {
    uint32_t s = set_of(scope);
    for (uint32_t w = 0; w < ways_; ++w) {
        Entry& e = entries_[s * ways_ + w];
        if (e.valid && e.scope == scope) e.valid = false;
    }
}

L1Cache::L1Cache(Engine& eng, int comp_id, const SimConfig& cfg, const AddressMap& map,
                 int core_id, bool scope_hw)
    : eng_(eng),
      comp_id_(comp_id),
      cfg_(cfg),
      map_(map),
      core_id_(core_id),
      scope_hw_(scope_hw),
      sets_(cfg.l1.sets()),
      ways_(cfg.l1.ways),
      line_size_(cfg.l1.line),
      lines_(sets_, std::vector<Line>(ways_)),
      sbv_(sets_, false),
      sb_(cfg.sb_l1.sets, cfg.sb_l1.ways),
      scan_cost_{cfg.scan_c_set, cfg.scan_c_line, cfg.scan_c_fixed} {}

L1Cache::Line* L1Cache::find(PhysAddr lb) {
    uint32_t s = set_of(lb);
    uint64_t tag = lb / line_size_;
    for (Line& ln : lines_[s])
        if (ln.valid && !ln.evicting && ln.tag == tag) return &ln;
    return nullptr;
}

L1Cache::Line* L1Cache::find_evictable(PhysAddr lb) {
    uint32_t s = set_of(lb);
    uint64_t tag = lb / line_size_;
    for (Line& ln : lines_[s])
        if (ln.valid && ln.tag == tag) return &ln;
    return nullptr;
}

bool L1Cache::txn_touching(PhysAddr lb) const {
    auto it = txns_.find(lb);
    if (it != txns_.end()) return true;
    for (const auto& [l, t] : txns_)
        if (t.victim_pending && t.victim == lb) return true;
    return false;
}

void L1Cache::core_load(PhysAddr addr, uint64_t seq) {
    In in;
    in.kind = In::Kind::Load;
    in.addr = addr;
    in.seq = seq;
    enqueue(std::move(in));
}
void L1Cache::core_store(PhysAddr addr, uint64_t value, uint64_t seq) {
    In in;
    in.kind = In::Kind::Store;
    in.addr = addr;
    in.value = value;
    in.seq = seq;
    enqueue(std::move(in));
}
void L1Cache::core_flush(PhysAddr addr, uint64_t seq) {
    In in;
    in.kind = In::Kind::Flush;
    in.addr = addr;
    in.seq = seq;
    enqueue(std::move(in));
}
void L1Cache::core_forward(Msg&& m) {
    In in;
    in.kind = In::Kind::Fwd;
    in.fwd = std::move(m);
    enqueue(std::move(in));
}

void L1Cache::enqueue(In&& in) {
    input_.push_back(std::move(in));
    pump();
}

void L1Cache::pump() {
    if (pump_scheduled_ || scanning_ || input_.empty()) return;
    pump_scheduled_ = true;
    eng_.schedule_in(cfg_.l1.latency, comp_id_, [this] {
        pump_scheduled_ = false;
        if (scanning_ || input_.empty()) return;
        In in = std::move(input_.front());
        input_.pop_front();
        process(in);
        pump();
    });
}

void L1Cache::process(In& in) {
    if (in.kind == In::Kind::Fwd) {
        handle_fwd(in.fwd);
        return;
    }
    handle_core_op(in);
}

void L1Cache::handle_core_op(In& in) {
    PhysAddr lb = line_base(in.addr);
    auto it = txns_.find(lb);
    if (it != txns_.end()) {
        it->second.deferred.push_back(std::move(in));
        return;
    }
    Line* ln = find(lb);
    switch (in.kind) {
        case In::Kind::Load: {
            if (ln) {
                stats_.hits++;
                ln->lru = ++lru_tick_;
                uint64_t v;
                std::memcpy(&v, ln->data.data() + (in.addr - lb), 8);
                core_.load_done(in.seq, v);
                return;
            }
            stats_.misses++;
            start_miss(in);
            return;
        }
        case In::Kind::Store: {
            if (ln && (ln->st == St::M || ln->st == St::E)) {
                stats_.hits++;
                ln->st = St::M;
                ln->lru = ++lru_tick_;
                std::memcpy(ln->data.data() + (in.addr - lb), &in.value, 8);
                core_.store_done(in.seq);
                return;
            }
            stats_.misses++;
            start_miss(in);  // S-upgrade or full miss: GetM either way
            return;
        }
        case In::Kind::Flush: {
            Msg f;
            f.type = MsgType::FlushReq;
            f.addr = lb;
            auto sc = map_.scope_of(lb);
            f.scope = sc ? static_cast<int>(sc->index) : -1;
            f.pim_page = map_.in_pim(lb);
            f.src_core = core_id_;
            f.seq = in.seq;
            if (ln) {
                if (ln->st == St::M) f.data = ln->data;
                uint32_t s = set_of(lb);
                ln->valid = false;
                ln->st = St::I;
                recompute_sbv(s);
            }
            send_llc(std::move(f));
            return;
        }
        case In::Kind::Fwd:
            return;  // unreachable
    }
}

void L1Cache::start_miss(const In& in) {
    PhysAddr lb = line_base(in.addr);
    bool is_store = in.kind == In::Kind::Store;
    Txn t;
    t.is_store = is_store;
    t.addr = in.addr;
    t.value = in.value;
    t.seq = in.seq;
    txns_.emplace(lb, std::move(t));
    if (scope_hw_) {
        auto sc = map_.scope_of(lb);
        if (sc) sb_.erase(sc->index);  // closing the in-flight-fill window
    }
    Msg m;
    m.type = is_store ? MsgType::GetM : MsgType::GetS;
    m.addr = lb;
    auto sc = map_.scope_of(lb);
    m.scope = sc ? static_cast<int>(sc->index) : -1;
    m.pim_page = map_.in_pim(lb);
    m.src_core = core_id_;
    m.seq = in.seq;
    send_llc(std::move(m));
}

void L1Cache::handle_fwd(Msg& m) {
    if (m.type == MsgType::PimOp) {
        send_llc(std::move(m));  // passes through untouched
        return;
    }
    // ScopeFence / PimFence: scan own contents (scope buffer may skip it)
    int scope_filter = m.type == MsgType::ScopeFence ? m.scope : -1;
    if (!scope_hw_) {
        send_llc(std::move(m));
        return;
    }
    // Drain in-flight transactions the scan must cover before walking sets.
    bool wait = false;
    for (auto& [lb, t] : txns_) {
        auto sc = map_.scope_of(lb);
        int txn_scope = sc ? static_cast<int>(sc->index) : -1;
        bool covered = scope_filter < 0 ? map_.in_pim(lb) : (txn_scope == scope_filter);
        if (covered) {
            wait = true;
            break;
        }
    }
    if (wait) {
        scanning_ = true;
        pending_fence_ = std::move(m);
        return;  // retried as transactions close
    }
    scan_and_forward(std::move(m));
}

void L1Cache::scan_and_forward(Msg m) {
    int scope_filter = m.type == MsgType::ScopeFence ? m.scope : -1;
    bool skip = scope_filter >= 0 && sb_.contains(static_cast<uint32_t>(scope_filter));
    uint64_t scan_cycles = 0;
    if (skip) {
        stats_.sb_hits++;
    } else {
        std::vector<std::pair<PhysAddr, std::vector<uint8_t>>> wbs;
        scan_cycles = run_scan(scope_filter, &wbs);
        stats_.fence_scans++;
        for (auto& [lb, data] : wbs) {
            Msg wb;
            wb.type = MsgType::PutM;
            wb.addr = lb;
            auto sc = map_.scope_of(lb);
            wb.scope = sc ? static_cast<int>(sc->index) : -1;
            wb.pim_page = true;
            wb.src_core = core_id_;
            wb.data = std::move(data);
            send_llc(std::move(wb));
        }
        if (scope_filter >= 0) sb_.insert(static_cast<uint32_t>(scope_filter));
    }
    scanning_ = true;
    eng_.schedule_in(scan_cycles, comp_id_, [this, fm = std::move(m)]() mutable {
        send_llc(std::move(fm));
        scanning_ = false;
        pump();
    });
}

uint64_t L1Cache::run_scan(int scope_filter,
                           std::vector<std::pair<PhysAddr, std::vector<uint8_t>>>* wbs) {
    uint64_t visited = 0, flushed = 0;
    for (uint32_t s = 0; s < sets_; ++s) {
        if (!sbv_[s]) continue;
        ++visited;
        for (Line& ln : lines_[s]) {
            if (!ln.valid || ln.evicting || !ln.pim_enabled) continue;
            PhysAddr lb = ln.tag * line_size_;
            auto sc = map_.scope_of(lb);
            if (scope_filter >= 0 && (!sc || sc->index != static_cast<uint32_t>(scope_filter)))
                continue;
            if (ln.st == St::M) {
                wbs->emplace_back(lb, ln.data);
                stats_.dirty_writebacks++;
            } else {
                // release the directory entry so the LLC view stays exact
                Msg put;
                put.type = MsgType::PutS;
                put.addr = lb;
                put.scope = sc ? static_cast<int>(sc->index) : -1;
                put.pim_page = ln.pim_enabled;
                put.src_core = core_id_;
                send_llc(std::move(put));
            }
            ln.valid = false;
            ln.st = St::I;
            ++flushed;
        }
        recompute_sbv(s);
    }
    stats_.lines_flushed += flushed;
    uint64_t cycles = scan_cost_.c_fixed + scan_cost_.c_set * visited + scan_cost_.c_line * flushed;
    stats_.scan_samples++;
    stats_.scan_cycles_sum += cycles;
    stats_.skip_ratio_sum += sets_ == 0 ? 0.0 : static_cast<double>(sets_ - visited) / sets_;
    return cycles;
}

void L1Cache::receive(Msg&& m) {
    switch (m.type) {
        case MsgType::DataS:
        case MsgType::DataE:
        case MsgType::GrantM:
            install(m);
            return;
        case MsgType::PutAck: {
            // way freed; resume any parked fill
            for (auto& [lb, t] : txns_) {
                if (t.victim_pending && t.victim == m.addr) {
                    t.victim_pending = false;
                    // clear the evicting line
                    uint32_t s = set_of(t.victim);
                    for (Line& ln : lines_[s]) {
                        if (ln.valid && ln.evicting && ln.tag == t.victim / line_size_) {
                            ln.valid = false;
                            ln.evicting = false;
                            ln.st = St::I;
                        }
                    }
                    recompute_sbv(s);
                    if (t.resp_parked) {
                        Msg parked = std::move(t.parked);
                        t.resp_parked = false;
                        install(parked);
                    }
                    return;
                }
            }
            // Put issued by a fence scan or raced an invalidation; nothing
            // is parked on it.
            return;
        }
        case MsgType::BackInval:
        case MsgType::Downgrade: {
            PhysAddr lb = m.addr;
            Line* ln = find_evictable(lb);
            Msg ack;
            ack.addr = lb;
            ack.scope = m.scope;
            ack.src_core = core_id_;
            ack.req_id = m.req_id;
            if (ln && ln->st == St::M) {
                ack.type = MsgType::ProbeAckData;
                ack.data = ln->data;
            } else {
                ack.type = MsgType::ProbeAckClean;
            }
            if (ln) {
                uint32_t s = set_of(lb);
                if (m.type == MsgType::BackInval) {
                    if (!ln->evicting) ln->valid = false;
                    ln->st = St::I;
                    if (!ln->evicting) recompute_sbv(s);
                } else {
                    ln->st = St::S;
                }
            }
            send_llc(std::move(ack));
            return;
        }
        default:
            throw SimBug("L1: unexpected message " + std::string(msg_type_name(m.type)));
    }
}

void L1Cache::install(Msg& m) {
    PhysAddr lb = m.addr;
    auto it = txns_.find(lb);
    if (it == txns_.end()) throw SimBug("L1: fill without transaction");
    Txn& t = it->second;
    uint32_t s = set_of(lb);
    // S->M upgrade: the line is already resident
    Line* target = find(lb);
    if (!target) {
        for (Line& ln : lines_[s])
            if (!ln.valid) {
                target = &ln;
                break;
            }
        if (!target) {
            if (!t.victim_pending) evict_for(t, s);
            if (t.victim_pending) {
                t.resp_parked = true;
                t.parked = std::move(m);
                return;
            }
            for (Line& ln : lines_[s])
                if (!ln.valid) {
                    target = &ln;
                    break;
                }
        }
    }
    if (!target) throw SimBug("L1: no way available after eviction");
    target->valid = true;
    target->evicting = false;
    target->tag = lb / line_size_;
    target->st = m.type == MsgType::GrantM ? St::M : (m.type == MsgType::DataE ? St::E : St::S);
    target->pim_enabled = m.pim_page;
    target->lru = ++lru_tick_;
    target->fill_stamp = m.value;  // LLC order stamp rides in `value`
    target->data = std::move(m.data);
    if (target->pim_enabled) sbv_[s] = true;
    if (scope_hw_ && m.scope >= 0) sb_.erase(static_cast<uint32_t>(m.scope));
    Msg ack;
    ack.type = MsgType::FillAck;
    ack.addr = lb;
    ack.scope = m.scope;
    ack.pim_page = m.pim_page;
    ack.src_core = core_id_;
    ack.req_id = m.req_id;
    send_llc(std::move(ack));
    finish_core_op(t, *target);
    // re-dispatch ops that piled up on this line
    std::deque<In> deferred = std::move(t.deferred);
    txns_.erase(it);
    for (auto& d : deferred) input_.push_front(std::move(d));
    if (!deferred.empty()) pump();
    // a pending fence may now be able to scan
    if (scanning_ && pending_fence_) {
        Msg f = std::move(*pending_fence_);
        pending_fence_.reset();
        scanning_ = false;
        handle_fwd(f);
        if (!scanning_) pump();
    }
}

void L1Cache::finish_core_op(Txn& t, Line& ln) {
    PhysAddr lb = line_base(t.addr);
    if (t.is_store) {
        ln.st = St::M;
        std::memcpy(ln.data.data() + (t.addr - lb), &t.value, 8);
        core_.store_done(t.seq);
    } else {
        uint64_t v;
        std::memcpy(&v, ln.data.data() + (t.addr - lb), 8);
        core_.load_done(t.seq, v);
    }
}

void L1Cache::evict_for(Txn& t, uint32_t set) {
    Line* victim = nullptr;
    for (Line& ln : lines_[set]) {
        if (!ln.valid || ln.evicting) continue;
        PhysAddr vlb = ln.tag * line_size_;
        if (txn_touching(vlb)) continue;
        if (!victim || ln.lru < victim->lru) victim = &ln;
    }
    if (!victim) throw SimBug("L1: set exhausted by concurrent transactions");
    PhysAddr vlb = victim->tag * line_size_;
    Msg put;
    put.addr = vlb;
    auto sc = map_.scope_of(vlb);
    put.scope = sc ? static_cast<int>(sc->index) : -1;
    put.pim_page = victim->pim_enabled;
    put.src_core = core_id_;
    if (victim->st == St::M) {
        put.type = MsgType::PutM;
        put.data = victim->data;
    } else {
        put.type = MsgType::PutS;
    }
    victim->evicting = true;  // stays probe-answerable until PutAck
    t.victim = vlb;
    t.victim_pending = true;
    send_llc(std::move(put));
}

void L1Cache::recompute_sbv(uint32_t set) {
    bool any = false;
    for (const Line& ln : lines_[set])
        if (ln.valid && !ln.evicting && ln.pim_enabled) {
            any = true;
            break;
        }
    sbv_[set] = any;
}

void L1Cache::send_llc(Msg&& m) { to_llc_->send(std::move(m)); }

std::vector<L1Cache::LineView> L1Cache::valid_lines() const {
    std::vector<LineView> out;
    for (uint32_t s = 0; s < sets_; ++s)
        for (const Line& ln : lines_[s]) {
            if (!ln.valid || ln.evicting) continue;
            char st = ln.st == St::M ? 'M' : (ln.st == St::E ? 'E' : 'S');
            out.push_back(LineView{ln.tag * line_size_, st, ln.pim_enabled, ln.fill_stamp});
        }
    return out;
}

bool L1Cache::sbv_exact() const {
    for (uint32_t s = 0; s < sets_; ++s) {
        bool any = false;
        for (const Line& ln : lines_[s])
            if (ln.valid && !ln.evicting && ln.pim_enabled) any = true;
        if (any != sbv_[s]) return false;
    }
    return true;
}

bool L1Cache::scope_has_valid_line(uint32_t scope) const {
    for (uint32_t s = 0; s < sets_; ++s)
        for (const Line& ln : lines_[s]) {
            if (!ln.valid || ln.evicting) continue;
            auto sc = map_.scope_of(ln.tag * line_size_);
            if (sc && sc->index == scope) return true;
        }
    return false;
}

std::vector<std::pair<PhysAddr, std::vector<uint8_t>>> L1Cache::dirty_lines() const {
    std::vector<std::pair<PhysAddr, std::vector<uint8_t>>> out;
    for (uint32_t s = 0; s < sets_; ++s)
        for (const Line& ln : lines_[s])
            if (ln.valid && ln.st == St::M) out.emplace_back(ln.tag * line_size_, ln.data);
    return out;
}

}  // namespace pimsim
