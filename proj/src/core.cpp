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

#include "pimsim/core.hpp"

namespace pimsim {

Core::Core(Engine& eng, int comp_id, const SimConfig& cfg, const AddressMap& map, int core_id,
           int thread_id)
    : eng_(eng), comp_id_(comp_id), cfg_(cfg), map_(map), core_id_(core_id), thread_id_(thread_id) {}

void Core::set_program(ThreadProgram p) {
    prog_ = std::move(p);
    regs_.assign(std::max(prog_.n_regs, 1u), 0);
}

void Core::start(SimTime at) {
    started_ = true;
    eng_.schedule_at(at, comp_id_, [this] { step(); });
}

int Core::scope_of(PhysAddr a) const {
    auto s = map_.scope_of(a);
    return s ? static_cast<int>(s->index) : -1;
}

void Core::schedule_step() {
    if (step_scheduled_ || done_) return;
    step_scheduled_ = true;
    eng_.schedule_in(1, comp_id_, [this] {
        step_scheduled_ = false;
        step();
    });
}

void Core::step() {
    wb_drain();
    while (try_commit()) {
    }
    maybe_finish();
}

void Core::maybe_finish() {
    if (done_ || pc_ < prog_.stmts.size()) return;
    if (!wb_.empty() || load_outstanding_ || atomic_wait_ack_ || delay_active_) return;
    done_ = true;
    finish_time_ = eng_.now();
    if (hooks_.on_done) hooks_.on_done();
}

bool Core::forward_from_wb(PhysAddr addr, uint64_t* out) const {
    for (auto it = wb_.rbegin(); it != wb_.rend(); ++it) {
        if (it->kind == Stmt::Kind::Store && it->addr == addr) {
            *out = it->value;
            return true;
        }
    }
    return false;
}

bool Core::load_blocked(PhysAddr addr, int scope) const {
    (void)addr;
    switch (cfg_.model) {
        case Model::Store:
        case Model::Scope:
            for (const WbEntry& e : wb_)
                if (e.kind == Stmt::Kind::PimOp && e.scope == scope && scope >= 0) return true;
            return false;
        case Model::ScopeRelaxed:
            for (const WbEntry& e : wb_) {
                if (e.st != WbEntry::St::Pending) continue;
                if (e.kind == Stmt::Kind::ScopeFence && e.scope == scope && scope >= 0) return true;
                if (e.kind == Stmt::Kind::PimFence && cfg_.pimfence_orders_all) return true;
            }
            return false;
        default:
            return false;  // Atomic never overlaps; baselines never hold
    }
}

bool Core::try_commit() {
    if (done_ || load_outstanding_ || atomic_wait_ack_ || delay_active_) return false;
    if (pc_ >= prog_.stmts.size()) return false;
    const Stmt& s = prog_.stmts[pc_];
    uint64_t seq = pc_;
    switch (s.kind) {
        case Stmt::Kind::Delay: {
            delay_active_ = true;
            size_t idx = pc_;
            pc_++;
            emit_trace(s, seq);
            eng_.schedule_in(s.value, comp_id_, [this, idx] {
                delay_active_ = false;
                if (hooks_.on_commit) hooks_.on_commit(static_cast<int>(idx));
                step();
            });
            return false;
        }
        case Stmt::Kind::Load: {
            int sc = scope_of(s.addr);
            uint64_t fwd;
            if (forward_from_wb(s.addr, &fwd)) {
                regs_.at(s.reg) = fwd;
                if (hooks_.on_load_value) hooks_.on_load_value(seq, fwd);
                pc_++;
                emit_trace(s, seq);
                if (hooks_.on_commit) hooks_.on_commit(static_cast<int>(seq));
                return true;
            }
            if (load_blocked(s.addr, sc)) return false;
            load_outstanding_ = true;
            load_seq_ = seq;
            load_reg_ = s.reg;
            emit_trace(s, seq);
            if (cfg_.model == Model::UncacheableBaseline && map_.in_pim(s.addr)) {
                Msg m;
                m.type = MsgType::UcLoad;
                m.addr = s.addr;
                m.scope = sc;
                m.pim_page = true;
                m.src_core = core_id_;
                m.thread = thread_id_;
                m.seq = seq;
                m.size = 8;
                m.req_id = hooks_.fresh_id();
                to_llc_->send(std::move(m));
            } else {
                l1_->core_load(s.addr, seq);
            }
            return false;
        }
        case Stmt::Kind::Store:
        case Stmt::Kind::LineFlush: {
            if (wb_.size() >= cfg_.write_buffer_depth) return false;  // stall, not an error
            WbEntry e;
            e.kind = s.kind;
            e.addr = s.addr;
            e.value = s.value;
            e.seq = seq;
            e.scope = scope_of(s.addr);
            wb_.push_back(e);
            pc_++;
            emit_trace(s, seq);
            if (hooks_.on_commit) hooks_.on_commit(static_cast<int>(seq));
            wb_drain();
            return true;
        }
        case Stmt::Kind::MemFence: {
            if (!wb_.empty()) {
                wb_drain();
                if (!wb_.empty()) return false;
            }
            pc_++;
            emit_trace(s, seq);
            if (hooks_.on_commit) hooks_.on_commit(static_cast<int>(seq));
            return true;
        }
        case Stmt::Kind::ScopeFence: {
            if (cfg_.model == Model::ScopeRelaxed) {
                if (wb_.size() >= cfg_.write_buffer_depth) return false;
                WbEntry e;
                e.kind = s.kind;
                e.seq = seq;
                e.scope = static_cast<int>(s.scope_index);
                wb_.push_back(e);
                pc_++;
                emit_trace(s, seq);
                if (hooks_.on_commit) hooks_.on_commit(static_cast<int>(seq));
                wb_drain();
                return true;
            }
            if (model_is_baseline(cfg_.model)) {
                pc_++;
                emit_trace(s, seq);
                if (hooks_.on_commit) hooks_.on_commit(static_cast<int>(seq));
                return true;
            }
            // strict models: wait until same-scope buffered work retires
            for (const WbEntry& e : wb_)
                if (e.scope == static_cast<int>(s.scope_index)) return false;
            pc_++;
            emit_trace(s, seq);
            if (hooks_.on_commit) hooks_.on_commit(static_cast<int>(seq));
            return true;
        }
        case Stmt::Kind::PimFence: {
            if (cfg_.model == Model::ScopeRelaxed) {
                if (wb_.size() >= cfg_.write_buffer_depth) return false;
                WbEntry e;
                e.kind = s.kind;
                e.seq = seq;
                wb_.push_back(e);
                pc_++;
                emit_trace(s, seq);
                if (hooks_.on_commit) hooks_.on_commit(static_cast<int>(seq));
                wb_drain();
                return true;
            }
            if (model_is_baseline(cfg_.model)) {
                pc_++;
                emit_trace(s, seq);
                if (hooks_.on_commit) hooks_.on_commit(static_cast<int>(seq));
                return true;
            }
            for (const WbEntry& e : wb_)
                if (e.kind == Stmt::Kind::PimOp) return false;  // all acks must be in
            pc_++;
            emit_trace(s, seq);
            if (hooks_.on_commit) hooks_.on_commit(static_cast<int>(seq));
            return true;
        }
        case Stmt::Kind::PimOp: {
            switch (cfg_.model) {
                case Model::Atomic: {
                    if (!wb_.empty()) {
                        wb_drain();
                        if (!wb_.empty()) return false;  // fence-before semantics
                    }
                    atomic_wait_ack_ = true;
                    atomic_req_id_ = hooks_.fresh_id();
                    emit_trace(s, seq);
                    if (hooks_.on_pim_ack_window) hooks_.on_pim_ack_window(true, seq);
                    Msg m;
                    m.type = MsgType::PimOp;
                    m.scope = static_cast<int>(s.pim.scope_index);
                    m.pim_page = true;
                    m.src_core = core_id_;
                    m.thread = thread_id_;
                    m.seq = seq;
                    m.req_id = atomic_req_id_;
                    m.pim = s.pim;
                    to_llc_->send(std::move(m));
                    return false;  // commits when the ack arrives
                }
                case Model::Store:
                case Model::Scope: {
                    if (wb_.size() >= cfg_.write_buffer_depth) return false;
                    WbEntry e;
                    e.kind = Stmt::Kind::PimOp;
                    e.seq = seq;
                    e.scope = static_cast<int>(s.pim.scope_index);
                    e.pim = s.pim;
                    wb_.push_back(e);
                    pc_++;
                    emit_trace(s, seq);
                    if (hooks_.on_commit) hooks_.on_commit(static_cast<int>(seq));
                    wb_drain();
                    return true;
                }
                case Model::ScopeRelaxed: {
                    // may not slip past a buffered fence that covers its scope
                    for (const WbEntry& e : wb_) {
                        if (e.st != WbEntry::St::Pending) continue;
                        if (e.kind == Stmt::Kind::ScopeFence &&
                            e.scope == static_cast<int>(s.pim.scope_index))
                            return false;
                        if (e.kind == Stmt::Kind::PimFence) return false;
                    }
                    issue_pim_now(s, /*via_l1=*/true);
                    pc_++;
                    if (hooks_.on_commit) hooks_.on_commit(static_cast<int>(seq));
                    return true;
                }
                default: {  // baselines: fire and forget, straight to memory
                    issue_pim_now(s, /*via_l1=*/false);
                    pc_++;
                    if (hooks_.on_commit) hooks_.on_commit(static_cast<int>(seq));
                    return true;
                }
            }
        }
    }
    return false;
}

void Core::issue_pim_now(const Stmt& s, bool via_l1) {
    emit_trace(s, pc_);
    Msg m;
    m.type = MsgType::PimOp;
    m.scope = static_cast<int>(s.pim.scope_index);
    m.pim_page = true;
    m.src_core = core_id_;
    m.thread = thread_id_;
    m.seq = pc_;
    m.req_id = hooks_.fresh_id();
    m.pim = s.pim;
    if (via_l1) {
        l1_->core_forward(std::move(m));
    } else {
        to_llc_->send(std::move(m));
    }
}

bool Core::wb_entry_issuable(size_t idx) const {
    const WbEntry& e = wb_[idx];
    auto plain = [](const WbEntry& x) {
        return x.kind == Stmt::Kind::Store || x.kind == Stmt::Kind::LineFlush;
    };
    switch (e.kind) {
        case Stmt::Kind::Store:
        case Stmt::Kind::LineFlush: {
            if (cfg_.model == Model::Atomic || cfg_.model == Model::Store) return idx == 0;
            for (size_t i = 0; i < idx; ++i) {
                const WbEntry& p = wb_[i];
                if (plain(p)) return false;  // plain traffic stays in order
                if (p.kind == Stmt::Kind::PimOp) {
                    if (cfg_.model == Model::Scope && p.scope == e.scope) return false;
                } else if (p.kind == Stmt::Kind::ScopeFence) {
                    if (p.st == WbEntry::St::Pending && p.scope == e.scope) return false;
                } else if (p.kind == Stmt::Kind::PimFence) {
                    if (p.st == WbEntry::St::Pending && cfg_.pimfence_orders_all) return false;
                }
            }
            return true;
        }
        case Stmt::Kind::PimOp: {
            if (cfg_.model == Model::Store) return idx == 0;
            // scope model: ordered only against same-scope work
            for (size_t i = 0; i < idx; ++i) {
                const WbEntry& p = wb_[i];
                if (p.scope == e.scope) return false;  // must retire first
            }
            return true;
        }
        case Stmt::Kind::ScopeFence: {
            for (size_t i = 0; i < idx; ++i) {
                const WbEntry& p = wb_[i];
                if (p.scope == e.scope && p.st == WbEntry::St::Pending) return false;
            }
            return true;
        }
        case Stmt::Kind::PimFence: {
            for (size_t i = 0; i < idx; ++i)
                if (wb_[i].st == WbEntry::St::Pending) return false;
            return true;
        }
        default:
            return false;
    }
}

void Core::wb_drain() {
    bool progressed = true;
    while (progressed) {
        progressed = false;
        for (size_t i = 0; i < wb_.size(); ++i) {
            WbEntry& e = wb_[i];
            if (e.st != WbEntry::St::Pending) continue;
            if (!wb_entry_issuable(i)) continue;
            issue_entry(e);
            // fences retire at issue; others await completion
            if (e.kind == Stmt::Kind::ScopeFence || e.kind == Stmt::Kind::PimFence) {
                wb_.erase(wb_.begin() + static_cast<long>(i));
                progressed = true;
                break;
            }
        }
    }
}

void Core::issue_entry(WbEntry& e) {
    switch (e.kind) {
        case Stmt::Kind::Store: {
            e.st = WbEntry::St::Issued;
            if (cfg_.model == Model::UncacheableBaseline && map_.in_pim(e.addr)) {
                Msg m;
                m.type = MsgType::UcStore;
                m.addr = e.addr;
                m.scope = e.scope;
                m.pim_page = true;
                m.src_core = core_id_;
                m.thread = thread_id_;
                m.seq = e.seq;
                m.size = 8;
                m.value = e.value;
                m.req_id = hooks_.fresh_id();
                to_llc_->send(std::move(m));
            } else {
                l1_->core_store(e.addr, e.value, e.seq);
            }
            return;
        }
        case Stmt::Kind::LineFlush: {
            e.st = WbEntry::St::Issued;
            l1_->core_flush(e.addr, e.seq);
            return;
        }
        case Stmt::Kind::PimOp: {
            e.st = WbEntry::St::AwaitAck;
            e.req_id = hooks_.fresh_id();
            if (hooks_.on_pim_ack_window) hooks_.on_pim_ack_window(true, e.seq);
            Msg m;
            m.type = MsgType::PimOp;
            m.scope = e.scope;
            m.pim_page = true;
            m.src_core = core_id_;
            m.thread = thread_id_;
            m.seq = e.seq;
            m.req_id = e.req_id;
            m.pim = e.pim;
            to_llc_->send(std::move(m));
            return;
        }
        case Stmt::Kind::ScopeFence: {
            Msg m;
            m.type = MsgType::ScopeFence;
            m.scope = e.scope;
            m.pim_page = true;
            m.src_core = core_id_;
            m.thread = thread_id_;
            m.seq = e.seq;
            m.req_id = hooks_.fresh_id();
            l1_->core_forward(std::move(m));
            return;
        }
        case Stmt::Kind::PimFence: {
            Msg m;
            m.type = MsgType::PimFence;
            m.fence_all = cfg_.pimfence_orders_all;
            m.src_core = core_id_;
            m.thread = thread_id_;
            m.seq = e.seq;
            m.req_id = hooks_.fresh_id();
            l1_->core_forward(std::move(m));
            return;
        }
        default:
            throw SimBug("core: cannot issue write-buffer entry");
    }
}

void Core::l1_load_done(uint64_t seq, uint64_t value) {
    if (!load_outstanding_ || seq != load_seq_)
        throw SimBug("core: unexpected load completion");
    load_outstanding_ = false;
    regs_.at(load_reg_) = value;
    if (hooks_.on_load_value) hooks_.on_load_value(seq, value);
    if (hooks_.on_commit) hooks_.on_commit(static_cast<int>(seq));
    schedule_step();
}

void Core::l1_store_done(uint64_t seq) {
    for (size_t i = 0; i < wb_.size(); ++i) {
        if (wb_[i].kind == Stmt::Kind::Store && wb_[i].seq == seq &&
            wb_[i].st == WbEntry::St::Issued) {
            wb_.erase(wb_.begin() + static_cast<long>(i));
            schedule_step();
            return;
        }
    }
    throw SimBug("core: store completion without entry");
}

void Core::receive_sideband(Msg&& m) {
    switch (m.type) {
        case MsgType::FlushAck: {
            for (size_t i = 0; i < wb_.size(); ++i) {
                if (wb_[i].kind == Stmt::Kind::LineFlush && wb_[i].seq == m.seq &&
                    wb_[i].st == WbEntry::St::Issued) {
                    wb_.erase(wb_.begin() + static_cast<long>(i));
                    schedule_step();
                    return;
                }
            }
            throw SimBug("core: flush ack without entry");
        }
        case MsgType::PimAck: {
            if (atomic_wait_ack_ && m.req_id == atomic_req_id_) {
                atomic_wait_ack_ = false;
                if (hooks_.on_pim_ack_window) hooks_.on_pim_ack_window(false, pc_);
                if (hooks_.on_commit) hooks_.on_commit(static_cast<int>(pc_));
                pc_++;
                schedule_step();
                return;
            }
            for (size_t i = 0; i < wb_.size(); ++i) {
                if (wb_[i].kind == Stmt::Kind::PimOp && wb_[i].req_id == m.req_id &&
                    wb_[i].st == WbEntry::St::AwaitAck) {
                    if (hooks_.on_pim_ack_window) hooks_.on_pim_ack_window(false, wb_[i].seq);
                    wb_.erase(wb_.begin() + static_cast<long>(i));
                    schedule_step();
                    return;
                }
            }
            throw SimBug("core: ack without a pending compute op");
        }
        case MsgType::UcLoadResp: {
            if (!load_outstanding_ || m.seq != load_seq_)
                throw SimBug("core: unexpected uncacheable load response");
            load_outstanding_ = false;
            regs_.at(load_reg_) = m.value;
            if (hooks_.on_load_value) hooks_.on_load_value(m.seq, m.value);
            if (hooks_.on_commit) hooks_.on_commit(static_cast<int>(m.seq));
            schedule_step();
            return;
        }
        case MsgType::UcStoreAck: {
            for (size_t i = 0; i < wb_.size(); ++i) {
                if (wb_[i].kind == Stmt::Kind::Store && wb_[i].seq == m.seq &&
                    wb_[i].st == WbEntry::St::Issued) {
                    wb_.erase(wb_.begin() + static_cast<long>(i));
                    schedule_step();
                    return;
                }
            }
            throw SimBug("core: uncacheable store ack without entry");
        }
        default:
            throw SimBug("core: unexpected sideband " + std::string(msg_type_name(m.type)));
    }
}

void Core::emit_trace(const Stmt& s, uint64_t seq) {
    if (!hooks_.on_trace) return;
    MemRequest r;
    r.thread_id = thread_id_;
    r.core_id = core_id_;
    r.program_seq = seq;
    switch (s.kind) {
        case Stmt::Kind::Load: r.kind = ReqKind::Load; r.addr = s.addr; break;
        case Stmt::Kind::Store:
            r.kind = ReqKind::Store;
            r.addr = s.addr;
            r.data = s.value;
            break;
        case Stmt::Kind::LineFlush: r.kind = ReqKind::LineFlush; r.addr = s.addr; break;
        case Stmt::Kind::PimOp:
            r.kind = ReqKind::PimOp;
            r.scope_index = s.pim.scope_index;
            r.pim_op = s.pim;
            break;
        case Stmt::Kind::ScopeFence:
            r.kind = ReqKind::ScopeFence;
            r.scope_index = s.scope_index;
            break;
        case Stmt::Kind::PimFence: r.kind = ReqKind::PimFence; break;
        case Stmt::Kind::MemFence:
        case Stmt::Kind::Delay:
            return;  // not memory requests
    }
    r.pim_enabled = r.kind == ReqKind::PimOp || r.kind == ReqKind::ScopeFence
                        ? true
                        : map_.in_pim(r.addr);
    hooks_.on_trace(r);
}

}  // namespace pimsim
