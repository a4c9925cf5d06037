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

#include "pimsim/stats.hpp"

#include <cstdio>

#include <nlohmann/json.hpp>

namespace pimsim {

using nlohmann::json;

namespace {
// fixed-precision doubles keep report bytes identical across runs
json num_or_null(const std::optional<double>& v) {
    if (!v) return nullptr;
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6f", *v);
    return json::parse(buf);
}
std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}
}  // namespace

std::string RunMetrics::to_json() const {
    json j;
    j["schema"] = "pimsim-report-v1";
    j["model"] = model;
    j["seed"] = seed;
    j["config_hash"] = config_hash;
    j["workload_hash"] = workload_hash;
    j["cycles"] = {{"total", total_cycles}, {"per_thread", thread_cycles}};
    j["scope_buffer"] = {{"llc", {{"hits", llc_sb_hits},
                                  {"misses", llc_sb_misses},
                                  {"hit_rate", num_or_null(sb_hit_rate())}}},
                         {"l1", {{"hits", l1_sb_hits}, {"misses", l1_sb_misses}}}};
    j["llc_scan"] = {{"scans", llc_sb_misses},
                     {"mean_latency_cycles", num_or_null(mean_scan_latency())},
                     {"mean_skip_ratio", num_or_null(mean_skip_ratio())},
                     {"lines_flushed", llc_lines_flushed},
                     {"dirty_writebacks", llc_dirty_writebacks},
                     {"fence_scans", llc_fence_scans}};
    j["llc_cache"] = {{"hits", llc_hits}, {"misses", llc_misses}};
    j["pim"] = {{"ops_executed", pim_ops_executed},
                {"mean_occupancy", num_or_null(mean_pim_occupancy())},
                {"mean_unique_scopes", num_or_null(mean_unique_scopes())},
                {"max_occupancy", pim_max_occupancy},
                {"arrival_samples", pim_arrival_samples}};
    j["memctrl"] = {{"accepted", ctrl_accepted},
                    {"pim_acks", ctrl_pim_acks},
                    {"mean_queue_occupancy",
                     num_or_null(ctrl_arrivals == 0
                                     ? std::optional<double>{}
                                     : std::optional<double>{static_cast<double>(
                                                                 ctrl_queue_occupancy_sum) /
                                                             static_cast<double>(ctrl_arrivals)})},
                    {"scan_writebacks", ctrl_scan_writebacks}};
    j["engine"] = {{"events", events_dispatched},
                   {"trace_hash", trace_hash},
                   {"invariant_checks", invariant_checks}};
    return j.dump(2);
}

std::string RunMetrics::csv_header() {
    return "axis,axis_value,model,seed,total_cycles,norm_cycles,llc_sb_hit_rate,"
           "llc_scan_mean_latency,llc_sbv_skip_ratio,pim_unique_scopes_mean,"
           "pim_occupancy_mean,pim_ops,llc_lines_flushed,ctrl_accepted";
}

std::string RunMetrics::csv_row(const std::string& axis, const std::string& axis_value,
                                std::optional<double> norm_cycles) const {
    auto opt = [](const std::optional<double>& v) { return v ? fmt(*v) : std::string(); };
    std::string row;
    row += axis + "," + axis_value + "," + model + "," + std::to_string(seed) + ",";
    row += std::to_string(total_cycles) + "," + opt(norm_cycles) + ",";
    row += opt(sb_hit_rate()) + "," + opt(mean_scan_latency()) + "," + opt(mean_skip_ratio()) + ",";
    row += opt(mean_unique_scopes()) + "," + opt(mean_pim_occupancy()) + ",";
    row += std::to_string(pim_ops_executed) + "," + std::to_string(llc_lines_flushed) + "," +
           std::to_string(ctrl_accepted);
    return row;
}

std::string Summary::to_json() const {
    json j;
    j["cycles_ratio"] = json::parse(fmt(cycles_ratio));
    return j.dump(2);
}

Summary summarize_vs_baseline(const RunMetrics& run, const RunMetrics& baseline) {
    if (run.workload_hash != baseline.workload_hash)
        throw ConfigError("summarize: baseline ran a different workload (hash mismatch)");
    if (baseline.total_cycles == 0) throw ConfigError("summarize: baseline has zero cycles");
    Summary s;
    s.cycles_ratio = static_cast<double>(run.total_cycles) /
                     static_cast<double>(baseline.total_cycles);
    return s;
}

}  // namespace pimsim
