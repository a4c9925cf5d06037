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

#include "pimsim/memctrl.hpp"

namespace pimsim {

MemCtrl::MemCtrl(Engine& eng, int comp_id, const SimConfig& cfg, MainMemory& mem, PimModule& pim)
    : eng_(eng), comp_id_(comp_id), cfg_(cfg), mem_(mem), pim_(pim) {
    pim_.set_space_freed([this] { pump(); });
}

void MemCtrl::set_links(Link* to_llc, std::vector<Link*> to_core) {
    to_llc_ = to_llc;
    to_core_ = std::move(to_core);
}

void MemCtrl::receive(Msg&& m) {
    if (queue_.size() >= cfg_.memctrl_queue_depth)
        throw SimBug("memctrl: queue overflow (credit protocol breach)");
    stats_.arrivals++;
    stats_.queue_occupancy_sum += queue_.size();
    stats_.accepted++;
    if (m.type == MsgType::MemWrite && m.size == 1) stats_.scan_writebacks++;
    if (m.type == MsgType::PimOp) {
        m.pim.latency_cycles = cfg_.pim_op_latency(m.pim.opcode);
        if (model_uses_acks(cfg_.model)) {
            // acceptance is the point after which the op's order is fixed
            Msg ack;
            ack.type = MsgType::PimAck;
            ack.scope = m.scope;
            ack.req_id = m.req_id;
            ack.thread = m.thread;
            stats_.pim_acks++;
            to_core_.at(m.src_core)->send(std::move(ack));
        }
    }
    queue_.push_back(Entry{std::move(m), ++arrival_counter_});
    pump();
}

bool MemCtrl::conflicts(const Msg& earlier, const Msg& later) const {
    bool e_pim = earlier.type == MsgType::PimOp;
    bool l_pim = later.type == MsgType::PimOp;
    if ((e_pim || l_pim) && earlier.scope >= 0 && earlier.scope == later.scope) return true;
    if (!e_pim && !l_pim) {
        if ((earlier.addr & ~63ull) == (later.addr & ~63ull)) return true;
    }
    return false;
}

bool MemCtrl::eligible(size_t idx) const {
    const Entry& e = queue_[idx];
    if (e.msg.type == MsgType::PimOp && !pim_.can_accept_op()) return false;
    for (size_t i = 0; i < idx; ++i)
        if (conflicts(queue_[i].msg, e.msg)) return false;
    return true;
}

void MemCtrl::pump() {
    if (pump_scheduled_ || queue_.empty()) return;
    pump_scheduled_ = true;
    eng_.schedule_in(1, comp_id_, [this] {
        pump_scheduled_ = false;
        if (queue_.empty()) return;
        std::vector<size_t> elig;
        for (size_t i = 0; i < queue_.size(); ++i)
            if (eligible(i)) elig.push_back(i);
        if (!elig.empty()) {
            size_t pick = 0;
            if (chooser_ && elig.size() > 1) pick = chooser_->choose(elig.size(), "ctrl.pick");
            size_t idx = elig[pick];
            Msg m = std::move(queue_[idx].msg);
            queue_.erase(queue_.begin() + static_cast<long>(idx));
            Msg credit;
            credit.type = MsgType::CreditReturn;
            to_llc_->send(std::move(credit));
            dispatch(std::move(m));
        }
        pump();
    });
}

void MemCtrl::dispatch(Msg&& m) {
    switch (m.type) {
        case MsgType::PimOp: {
            if (!pim_.can_accept_op()) throw SimBug("memctrl: dispatched op without buffer space");
            pim_.op_arrive(std::move(m));
            return;
        }
        case MsgType::MemRead: {
            if (m.pim_page) {
                pim_.access_arrive(std::move(m));
                return;
            }
            eng_.schedule_in(cfg_.dram_latency, comp_id_, [this, m = std::move(m)]() mutable {
                Msg resp;
                resp.type = MsgType::MemReadResp;
                resp.addr = m.addr;
                resp.scope = m.scope;
                resp.req_id = m.req_id;
                resp.src_core = m.src_core;
                resp.data = mem_.read_line(m.addr, cfg_.llc.line);
                to_llc_->send(std::move(resp));
            });
            return;
        }
        case MsgType::MemWrite: {
            if (m.pim_page) {
                pim_.access_arrive(std::move(m));
                return;
            }
            eng_.schedule_in(cfg_.dram_latency, comp_id_,
                             [this, m = std::move(m)]() mutable { mem_.write_line(m.addr, m.data); });
            return;
        }
        case MsgType::UcLoad:
        case MsgType::UcStore: {
            if (m.pim_page) {
                pim_.access_arrive(std::move(m));
                return;
            }
            eng_.schedule_in(cfg_.dram_latency, comp_id_, [this, m = std::move(m)]() mutable {
                Msg resp;
                if (m.type == MsgType::UcLoad) {
                    resp.type = MsgType::UcLoadResp;
                    resp.value = mem_.read_u64(m.addr);
                } else {
                    mem_.write_u64(m.addr, m.value);
                    resp.type = MsgType::UcStoreAck;
                }
                resp.addr = m.addr;
                resp.req_id = m.req_id;
                resp.seq = m.seq;
                to_core_.at(m.src_core)->send(std::move(resp));
            });
            return;
        }
        default:
            throw SimBug("memctrl: cannot dispatch " + std::string(msg_type_name(m.type)));
    }
}

}  // namespace pimsim
