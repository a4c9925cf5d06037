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

#include "pimsim/runner.hpp"

namespace pimsim {

WorkloadRunResult run_workload(SimConfig cfg, const WorkloadSpec& spec, bool check_oracle,
                               bool collect_trace) {
    cfg.n_scopes = spec.n_scopes();
    cfg.records_per_scope = spec.records_per_scope();
    if (spec.type == WorkloadSpec::Type::Ycsb) {
        cfg.fields_per_record = spec.ycsb.fields_per_record;
        cfg.field_len_bytes = spec.ycsb.field_len_bytes;
    }
    if (spec.n_threads() > cfg.cores)
        throw ConfigError("workload.n_threads: exceeds configured cores (raise cores)");
    cfg.validate();

    GeneratedWorkload gen = generate_workload(spec, cfg.model);
    Machine mach(cfg);
    gen.apply_initial(mach.memory());
    if (check_oracle) mach.track_loads();
    if (collect_trace) mach.enable_trace();
    mach.load_programs(gen.programs);
    RunResult run = mach.run();
    if (run.hit_limit) throw SimLimit("workload run did not quiesce");

    WorkloadRunResult out;
    out.metrics = mach.metrics();
    out.metrics.workload_hash = gen.workload_hash;
    out.trace = std::move(run.trace);
    if (check_oracle) {
        mach.flatten_caches();
        OracleResult oracle = reference_execute(gen, mach.map());
        out.image_fields_only = cfg.model == Model::NaiveBaseline;
        out.image_issues = oracle.db->compare(mach.memory(), out.image_fields_only);
        for (const auto& [key, expected] : oracle.load_values) {
            auto it = run.load_values.find(key);
            out.loads_checked++;
            if (it == run.load_values.end() || it->second != expected) out.read_mismatches++;
        }
    }
    return out;
}

}  // namespace pimsim
