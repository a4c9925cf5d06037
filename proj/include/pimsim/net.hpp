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

#include <cstdint>
#include <functional>
#include <list>
#include <vector>

#include "pimsim/engine.hpp"
#include "pimsim/mem.hpp"

namespace pimsim {

enum class MsgType : uint8_t {
    // cache transactions (L1 <-> LLC)
    GetS,
    GetM,
    PutM,
    PutS,
    DataS,
    DataE,
    GrantM,
    PutAck,
    BackInval,
    Downgrade,
    ProbeAckData,
    ProbeAckClean,
    FillAck,
    FlushReq,
    FlushAck,
    // compute ops and fences travelling toward memory
    PimOp,
    ScopeFence,
    PimFence,
    // uncacheable accesses (core -> LLC passthrough -> controller)
    UcLoad,
    UcStore,
    UcLoadResp,
    UcStoreAck,
    // memory (LLC <-> controller)
    MemRead,
    MemWrite,
    MemReadResp,
    CreditReturn,
    // controller -> core
    PimAck,
};

const char* msg_type_name(MsgType t);

struct Msg {
    MsgType type = MsgType::GetS;
    PhysAddr addr = 0;   // byte address (line-aligned for line-granular messages)
    int scope = -1;      // scope index or -1 for non-PIM addresses
    bool pim_page = false;
    int src_core = -1;   // originating core (for response routing / acks)
    int thread = -1;
    uint64_t seq = 0;    // program_seq of the originating statement
    uint64_t req_id = 0; // matches requests to responses
    uint32_t size = 0;   // byte size for Uc accesses
    uint64_t value = 0;  // store payload / load result
    std::vector<uint8_t> data;  // line payload
    PimOpDescriptor pim;
    bool fence_all = false;  // PimFence ordered against all traffic
};

enum class LinkKind : uint8_t {
    Upper,    // core->LLC and L1<->LLC legs
    LlcCtrl,  // LLC -> memory controller (the serialization leg)
    Sideband, // acks, credits, responses with no ordering constraints
};

/// True when the link must preserve a->b send order (a was sent first).
bool must_fifo(const Msg& a, const Msg& b, LinkKind kind, bool exhaustive,
               bool pimfence_orders_all);

/// One-directional point-to-point link. Delivery = send + base + jitter,
/// subject to per-dependence-key FIFO. In exhaustive mode jitter is replaced
/// by explicit deferral choice points, emitted only when deferring could
/// actually reorder the message against an in-flight reorderable peer.
class Link {
  public:
    Link(Engine& eng, int target_id, std::string name, uint32_t base_latency, uint32_t jitter_max,
         LinkKind kind, bool pimfence_orders_all, uint64_t seed)
        : eng_(eng),
          target_id_(target_id),
          name_(std::move(name)),
          base_(base_latency),
          jitter_max_(jitter_max),
          kind_(kind),
          pimfence_all_(pimfence_orders_all),
          jitter_rng_(seed, "net." + name_) {}

    void set_deliver(std::function<void(Msg&&)> f) { deliver_ = std::move(f); }
    void set_chooser(Chooser* c) { chooser_ = c; }

    void send(Msg msg);

  private:
    struct InFlight {
        uint64_t id;
        Msg msg;
        SimTime next_attempt;
        int defers = 0;
        bool done = false;
    };

    void attempt(uint64_t id);
    void deliver_now(std::list<InFlight>::iterator it);
    std::list<InFlight>::iterator find(uint64_t id);

    Engine& eng_;
    int target_id_;
    std::string name_;
    uint32_t base_;
    uint32_t jitter_max_;
    LinkKind kind_;
    bool pimfence_all_;
    RngStream jitter_rng_;
    Chooser* chooser_ = nullptr;
    std::function<void(Msg&&)> deliver_;
    std::list<InFlight> in_flight_;
    uint64_t next_id_ = 0;
};

}  // namespace pimsim
