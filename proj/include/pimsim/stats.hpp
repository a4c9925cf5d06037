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

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pimsim/config.hpp"

namespace pimsim {

/// Aggregated per-run metrics mirroring the reported statistics: scope-buffer
/// hit rate, scan latency (hits count as zero-cycle scans), set-skip ratio,
/// compute-buffer occupancy and unique scopes at op arrival, controller queue
/// occupancy, and cycle counts.
struct RunMetrics {
    std::string model;
    uint64_t seed = 0;
    uint64_t config_hash = 0;
    uint64_t workload_hash = 0;

    uint64_t total_cycles = 0;
    std::vector<uint64_t> thread_cycles;

    uint64_t llc_sb_hits = 0;
    uint64_t llc_sb_misses = 0;
    uint64_t llc_scan_cycles_sum = 0;
    double llc_skip_ratio_sum = 0.0;
    uint64_t llc_skip_samples = 0;
    uint64_t llc_lines_flushed = 0;
    uint64_t llc_dirty_writebacks = 0;
    uint64_t llc_fence_scans = 0;
    uint64_t llc_hits = 0;
    uint64_t llc_misses = 0;
    uint64_t l1_sb_hits = 0;
    uint64_t l1_sb_misses = 0;
    uint64_t l1_fence_scans = 0;

    uint64_t pim_ops_executed = 0;
    uint64_t pim_arrival_samples = 0;
    uint64_t pim_occupancy_sum = 0;
    uint64_t pim_unique_scopes_sum = 0;
    uint64_t pim_max_occupancy = 0;

    uint64_t ctrl_accepted = 0;
    uint64_t ctrl_pim_acks = 0;
    uint64_t ctrl_arrivals = 0;
    uint64_t ctrl_queue_occupancy_sum = 0;
    uint64_t ctrl_scan_writebacks = 0;

    uint64_t invariant_checks = 0;
    uint64_t events_dispatched = 0;
    uint64_t trace_hash = 0;

    std::optional<double> sb_hit_rate() const {
        uint64_t n = llc_sb_hits + llc_sb_misses;
        if (n == 0) return std::nullopt;
        return static_cast<double>(llc_sb_hits) / static_cast<double>(n);
    }
    std::optional<double> mean_scan_latency() const {
        uint64_t n = llc_sb_hits + llc_sb_misses;  // hits are zero-cycle scans
        if (n == 0) return std::nullopt;
        return static_cast<double>(llc_scan_cycles_sum) / static_cast<double>(n);
    }
    std::optional<double> mean_skip_ratio() const {
        if (llc_skip_samples == 0) return std::nullopt;
        return llc_skip_ratio_sum / static_cast<double>(llc_skip_samples);
    }
    std::optional<double> mean_pim_occupancy() const {
        if (pim_arrival_samples == 0) return std::nullopt;
        return static_cast<double>(pim_occupancy_sum) / static_cast<double>(pim_arrival_samples);
    }
    std::optional<double> mean_unique_scopes() const {
        if (pim_arrival_samples == 0) return std::nullopt;
        return static_cast<double>(pim_unique_scopes_sum) /
               static_cast<double>(pim_arrival_samples);
    }

    std::string to_json() const;
    static std::string csv_header();
    std::string csv_row(const std::string& axis, const std::string& axis_value,
                        std::optional<double> norm_cycles) const;
};

/// Ratios of one run against a baseline run of the identical workload.
struct Summary {
    double cycles_ratio = 0.0;
    std::string to_json() const;
};

/// Throws ConfigError if the two reports describe different workloads.
Summary summarize_vs_baseline(const RunMetrics& run, const RunMetrics& baseline);

}  // namespace pimsim
