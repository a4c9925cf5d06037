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

#include "pimsim/machine.hpp"
#include "pimsim/workload.hpp"

namespace pimsim {

struct WorkloadRunResult {
    RunMetrics metrics;
    uint64_t loads_checked = 0;
    uint64_t read_mismatches = 0;       // simulated load values vs oracle
    std::vector<std::string> image_issues;  // final memory image vs oracle
    bool image_fields_only = false;     // no-coherency baseline: fields compared only
    std::vector<std::string> trace;
};

/// Runs one workload end to end on a fresh machine and validates the final
/// state against the sequential reference oracle.
WorkloadRunResult run_workload(SimConfig cfg, const WorkloadSpec& spec, bool check_oracle,
                               bool collect_trace = false);

}  // namespace pimsim
