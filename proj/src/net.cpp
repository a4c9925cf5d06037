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

#include "pimsim/net.hpp"

#include <algorithm>

namespace pimsim {

const char* msg_type_name(MsgType t) {
    switch (t) {
        case MsgType::GetS: return "GetS";
        case MsgType::GetM: return "GetM";
        case MsgType::PutM: return "PutM";
        case MsgType::PutS: return "PutS";
        case MsgType::DataS: return "DataS";
        case MsgType::DataE: return "DataE";
        case MsgType::GrantM: return "GrantM";
        case MsgType::PutAck: return "PutAck";
        case MsgType::BackInval: return "BackInval";
        case MsgType::Downgrade: return "Downgrade";
        case MsgType::ProbeAckData: return "ProbeAckData";
        case MsgType::ProbeAckClean: return "ProbeAckClean";
        case MsgType::FillAck: return "FillAck";
        case MsgType::FlushReq: return "FlushReq";
        case MsgType::FlushAck: return "FlushAck";
        case MsgType::PimOp: return "PimOp";
        case MsgType::ScopeFence: return "ScopeFence";
        case MsgType::PimFence: return "PimFence";
        case MsgType::UcLoad: return "UcLoad";
        case MsgType::UcStore: return "UcStore";
        case MsgType::UcLoadResp: return "UcLoadResp";
        case MsgType::UcStoreAck: return "UcStoreAck";
        case MsgType::MemRead: return "MemRead";
        case MsgType::MemWrite: return "MemWrite";
        case MsgType::MemReadResp: return "MemReadResp";
        case MsgType::CreditReturn: return "CreditReturn";
        case MsgType::PimAck: return "PimAck";
    }
    return "?";
}

namespace {

bool line_addressed(MsgType t) {
    switch (t) {
        case MsgType::GetS:
        case MsgType::GetM:
        case MsgType::PutM:
        case MsgType::PutS:
        case MsgType::DataS:
        case MsgType::DataE:
        case MsgType::GrantM:
        case MsgType::PutAck:
        case MsgType::BackInval:
        case MsgType::Downgrade:
        case MsgType::ProbeAckData:
        case MsgType::ProbeAckClean:
        case MsgType::FlushReq:
        case MsgType::MemRead:
        case MsgType::MemWrite:
        case MsgType::UcLoad:
        case MsgType::UcStore:
            return true;
        default:
            return false;
    }
}

bool is_writeback(const Msg& m) {
    return m.type == MsgType::PutM || m.type == MsgType::MemWrite ||
           (m.type == MsgType::FlushReq && !m.data.empty());
}

bool is_plain_access(const Msg& m) {
    switch (m.type) {
        case MsgType::GetS:
        case MsgType::GetM:
        case MsgType::MemRead:
        case MsgType::UcLoad:
        case MsgType::UcStore:
            return true;
        default:
            return false;
    }
}

}  // namespace

bool must_fifo(const Msg& a, const Msg& b, LinkKind kind, bool exhaustive,
               bool pimfence_orders_all) {
    if (kind == LinkKind::Sideband) return false;
    // data dependence: same cache line
    if (line_addressed(a.type) && line_addressed(b.type)) {
        if ((a.addr & ~63ull) == (b.addr & ~63ull)) return true;
    }
    auto fence_orders = [&](const Msg& f, const Msg& o) {
        if (f.type == MsgType::ScopeFence) return o.scope == f.scope;
        if (f.type == MsgType::PimFence)
            return pimfence_orders_all ? true : (o.type == MsgType::PimOp || o.type == MsgType::PimFence);
        return false;
    };
    if (fence_orders(a, b) || fence_orders(b, a)) return true;
    bool a_pim = a.type == MsgType::PimOp;
    bool b_pim = b.type == MsgType::PimOp;
    if (a_pim && b_pim) return true;  // single route to the one PIM module
    if (a_pim || b_pim) {
        const Msg& pim = a_pim ? a : b;
        const Msg& other = a_pim ? b : a;
        if (other.scope != pim.scope) return false;
        if (is_writeback(other)) return true;  // flushed data must beat the op to memory
        if (is_plain_access(other)) {
            // The LLC->controller leg is the serialization point; above it a
            // multi-path network may reorder plain accesses around a PimOp
            // (explored as explicit branches in exhaustive mode).
            if (kind == LinkKind::LlcCtrl) return true;
            return !exhaustive;
        }
    }
    return false;
}

void Link::send(Msg msg) {
    if (!deliver_) throw SimBug("link " + name_ + ": no deliver target");
    InFlight f;
    f.id = ++next_id_;
    f.msg = std::move(msg);
    bool exhaustive = chooser_ && chooser_->exhaustive();
    SimTime t = eng_.now() + base_;
    if (!exhaustive && jitter_max_ > 0 && kind_ != LinkKind::Sideband) {
        t += static_cast<SimTime>(jitter_rng_.uniform(0, jitter_max_));
        // FIFO clamp against in-flight predecessors
        for (const InFlight& m : in_flight_) {
            if (!m.done && must_fifo(m.msg, f.msg, kind_, false, pimfence_all_))
                t = std::max(t, m.next_attempt);
        }
    }
    f.next_attempt = t;
    in_flight_.push_back(std::move(f));
    uint64_t id = in_flight_.back().id;
    eng_.schedule_at(t, target_id_, [this, id] { attempt(id); });
}

std::list<Link::InFlight>::iterator Link::find(uint64_t id) {
    for (auto it = in_flight_.begin(); it != in_flight_.end(); ++it)
        if (it->id == id) return it;
    throw SimBug("link " + name_ + ": lost in-flight message");
}

void Link::attempt(uint64_t id) {
    auto it = find(id);
    bool exhaustive = chooser_ && chooser_->exhaustive();
    if (exhaustive) {
        // FIFO predecessors first: poll until they have left the link.
        for (auto& m : in_flight_) {
            if (m.id >= it->id || m.done) continue;
            if (must_fifo(m.msg, it->msg, kind_, true, pimfence_all_)) {
                it->next_attempt = eng_.now() + 1;
                eng_.schedule_at(it->next_attempt, target_id_, [this, id] { attempt(id); });
                return;
            }
        }
        // Lazy race branching: defer only when it can change the order
        // against some reorderable in-flight peer.
        if (jitter_max_ > 0 && it->defers == 0) {
            bool race = false;
            for (auto& m : in_flight_) {
                if (m.id == it->id || m.done) continue;
                if (must_fifo(m.msg, it->msg, kind_, true, pimfence_all_) ||
                    must_fifo(it->msg, m.msg, kind_, true, pimfence_all_))
                    continue;
                if (m.next_attempt > eng_.now() && m.next_attempt <= eng_.now() + jitter_max_) {
                    race = true;
                    break;
                }
            }
            if (race && chooser_->choose(2, "net.defer") == 1) {
                it->defers = 1;
                it->next_attempt = eng_.now() + jitter_max_;
                eng_.schedule_at(it->next_attempt, target_id_, [this, id] { attempt(id); });
                return;
            }
        }
    }
    deliver_now(it);
}

void Link::deliver_now(std::list<InFlight>::iterator it) {
    Msg m = std::move(it->msg);
    in_flight_.erase(it);
    deliver_(std::move(m));
}

}  // namespace pimsim
