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

#include "pimsim/config.hpp"
#include "pimsim/net.hpp"
#include "pimsim/pim.hpp"

namespace pimsim {

/// Memory controller: bounded request queue, one dispatch per cycle. May
/// reorder requests but never violates data dependencies: same-line accesses
/// and anything sharing a scope with a compute op dispatch in arrival order.
/// Accepting a compute op is its ordering linearization point; that is when
/// the ack (if the model uses acks) returns to the issuing core.
class MemCtrl {
  public:
    struct Stats {
        uint64_t accepted = 0;
        uint64_t pim_acks = 0;
        uint64_t queue_occupancy_sum = 0;
        uint64_t arrivals = 0;
        uint64_t scan_writebacks = 0;  // conservation check vs LLC scan flushes
    };

    MemCtrl(Engine& eng, int comp_id, const SimConfig& cfg, MainMemory& mem, PimModule& pim);

    void set_links(Link* to_llc, std::vector<Link*> to_core);
    void set_chooser(Chooser* c) { chooser_ = c; }

    void receive(Msg&& m);  // from the LLC link

    const Stats& stats() const { return stats_; }
    bool quiesced() const { return queue_.empty(); }

  private:
    struct Entry {
        Msg msg;
        uint64_t arrival;
    };

    void pump();
    void dispatch(Msg&& m);
    bool eligible(size_t idx) const;
    bool conflicts(const Msg& earlier, const Msg& later) const;

    Engine& eng_;
    int comp_id_;
    const SimConfig& cfg_;
    MainMemory& mem_;
    PimModule& pim_;
    Link* to_llc_ = nullptr;
    std::vector<Link*> to_core_;
    Chooser* chooser_ = nullptr;
    std::deque<Entry> queue_;
    bool pump_scheduled_ = false;
    uint64_t arrival_counter_ = 0;
    Stats stats_;
};

}  // namespace pimsim
