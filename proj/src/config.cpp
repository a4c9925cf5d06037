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

#include "pimsim/config.hpp"

#include <nlohmann/json.hpp>

namespace pimsim {

using nlohmann::json;

const char* model_name(Model m) {
    switch (m) {
        case Model::Atomic: return "atomic";
        case Model::Store: return "store";
        case Model::Scope: return "scope";
        case Model::ScopeRelaxed: return "scope_relaxed";
        case Model::NaiveBaseline: return "naive";
        case Model::SwFlushBaseline: return "swflush";
        case Model::UncacheableBaseline: return "uncacheable";
    }
    return "?";
}

std::optional<Model> model_from(const std::string& s) {
    if (s == "atomic") return Model::Atomic;
    if (s == "store") return Model::Store;
    if (s == "scope") return Model::Scope;
    if (s == "scope_relaxed" || s == "scope-relaxed") return Model::ScopeRelaxed;
    if (s == "naive") return Model::NaiveBaseline;
    if (s == "swflush" || s == "sw_flush" || s == "sw-flush") return Model::SwFlushBaseline;
    if (s == "uncacheable" || s == "uc") return Model::UncacheableBaseline;
    return std::nullopt;
}

void SimConfig::validate() const {
    auto fail = [](const std::string& path, const std::string& m) {
        throw ConfigError(path + ": " + m);
    };
    if (cores == 0 || cores > 64) fail("cores", "must be in [1,64]");
    auto check_cache = [&](const char* name, const CacheGeom& g) {
        std::string p = name;
        if (g.line == 0 || (g.line & (g.line - 1)) != 0) fail(p + ".line", "must be a power of two");
        if (g.ways == 0) fail(p + ".ways", "must be > 0");
        if (g.size_bytes == 0 || g.size_bytes % (static_cast<uint64_t>(g.ways) * g.line) != 0)
            fail(p + ".size", "ways * sets * line must equal size");
        uint32_t sets = g.sets();
        if (sets == 0 || (sets & (sets - 1)) != 0) fail(p + ".size", "set count must be a power of two");
    };
    check_cache("l1", l1);
    check_cache("llc", llc);
    if (l1.line != llc.line) fail("llc.line", "must match l1.line");
    if (sb_llc.sets == 0 || sb_llc.ways == 0) fail("scope_buffer.llc", "sets/ways must be > 0");
    if (sb_l1.sets == 0 || sb_l1.ways == 0) fail("scope_buffer.l1", "sets/ways must be > 0");
    if (memctrl_queue_depth == 0) fail("memctrl.queue_depth", "must be > 0");
    if (!pim_buffer_unbounded && pim_buffer_capacity == 0)
        fail("pim.buffer_capacity", "must be > 0 (or unbounded)");
    if (write_buffer_depth == 0) fail("write_buffer_depth", "must be > 0");
    if (n_scopes == 0) fail("pim.n_scopes", "must be > 0");
    if (records_per_scope > 32768) fail("pim.records_per_scope", "must be <= 32768");
    AddressMap map(address_map_config());  // validates layout fit
    (void)map;
}

static json latency_json(const PimLatencyTable& t) {
    return json{{"filter_eq", t.filter_eq}, {"filter_lt", t.filter_lt}, {"mask_and", t.mask_and},
                {"mask_or", t.mask_or},     {"mask_not", t.mask_not},   {"aggregate", t.aggregate}};
}

std::string SimConfig::to_json() const {
    json j;
    j["cores"] = cores;
    j["l1"] = {{"size_kib", l1.size_bytes / 1024}, {"ways", l1.ways}, {"line_bytes", l1.line},
               {"latency", l1.latency}};
    j["llc"] = {{"size_kib", llc.size_bytes / 1024}, {"ways", llc.ways}, {"line_bytes", llc.line},
                {"latency", llc.latency}};
    j["scope_buffer"] = {{"llc", {{"sets", sb_llc.sets}, {"ways", sb_llc.ways}}},
                         {"l1", {{"sets", sb_l1.sets}, {"ways", sb_l1.ways}}}};
    j["scan"] = {{"c_set", scan_c_set}, {"c_line", scan_c_line}, {"c_fixed", scan_c_fixed}};
    j["network"] = {{"base_latency", net_base_latency}, {"jitter_max", net_jitter_max}};
    j["memctrl"] = {{"queue_depth", memctrl_queue_depth}, {"dram_latency", dram_latency}};
    j["pim"] = {{"buffer_capacity", pim_buffer_capacity},
                {"unbounded", pim_buffer_unbounded},
                {"zero_latency", pim_zero_latency},
                {"latency", latency_json(pim_latency)},
                {"scope_size_mib", scope_size >> 20},
                {"n_scopes", n_scopes},
                {"records_per_scope", records_per_scope},
                {"fields_per_record", fields_per_record},
                {"field_len_bytes", field_len_bytes}};
    j["write_buffer_depth"] = write_buffer_depth;
    j["model"] = model_name(model);
    j["pimfence_orders_all"] = pimfence_orders_all;
    j["invariant_check_interval"] = invariant_check_interval;
    j["watchdog_events"] = watchdog_events;
    j["seed"] = seed;
    return j.dump(2);
}

template <typename T>
static void get_if(const json& j, const char* key, T& out, const std::string& path) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(path + "." + key + ": " + e.what());
    }
}

SimConfig SimConfig::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config parse: ") + e.what());
    }
    SimConfig c;
    get_if(j, "cores", c.cores, "config");
    if (j.contains("l1")) {
        uint64_t kib = c.l1.size_bytes / 1024;
        get_if(j["l1"], "size_kib", kib, "config.l1");
        c.l1.size_bytes = kib * 1024;
        get_if(j["l1"], "ways", c.l1.ways, "config.l1");
        get_if(j["l1"], "line_bytes", c.l1.line, "config.l1");
        get_if(j["l1"], "latency", c.l1.latency, "config.l1");
    }
    if (j.contains("llc")) {
        uint64_t kib = c.llc.size_bytes / 1024;
        get_if(j["llc"], "size_kib", kib, "config.llc");
        c.llc.size_bytes = kib * 1024;
        get_if(j["llc"], "ways", c.llc.ways, "config.llc");
        get_if(j["llc"], "line_bytes", c.llc.line, "config.llc");
        get_if(j["llc"], "latency", c.llc.latency, "config.llc");
    }
    if (j.contains("scope_buffer")) {
        const json& sb = j["scope_buffer"];
        if (sb.contains("llc")) {
            get_if(sb["llc"], "sets", c.sb_llc.sets, "config.scope_buffer.llc");
            get_if(sb["llc"], "ways", c.sb_llc.ways, "config.scope_buffer.llc");
        }
        if (sb.contains("l1")) {
            get_if(sb["l1"], "sets", c.sb_l1.sets, "config.scope_buffer.l1");
            get_if(sb["l1"], "ways", c.sb_l1.ways, "config.scope_buffer.l1");
        }
    }
    if (j.contains("scan")) {
        get_if(j["scan"], "c_set", c.scan_c_set, "config.scan");
        get_if(j["scan"], "c_line", c.scan_c_line, "config.scan");
        get_if(j["scan"], "c_fixed", c.scan_c_fixed, "config.scan");
    }
    if (j.contains("network")) {
        get_if(j["network"], "base_latency", c.net_base_latency, "config.network");
        get_if(j["network"], "jitter_max", c.net_jitter_max, "config.network");
    }
    if (j.contains("memctrl")) {
        get_if(j["memctrl"], "queue_depth", c.memctrl_queue_depth, "config.memctrl");
        get_if(j["memctrl"], "dram_latency", c.dram_latency, "config.memctrl");
    }
    if (j.contains("pim")) {
        const json& p = j["pim"];
        get_if(p, "buffer_capacity", c.pim_buffer_capacity, "config.pim");
        get_if(p, "unbounded", c.pim_buffer_unbounded, "config.pim");
        get_if(p, "zero_latency", c.pim_zero_latency, "config.pim");
        if (p.contains("latency")) {
            const json& L = p["latency"];
            get_if(L, "filter_eq", c.pim_latency.filter_eq, "config.pim.latency");
            get_if(L, "filter_lt", c.pim_latency.filter_lt, "config.pim.latency");
            get_if(L, "mask_and", c.pim_latency.mask_and, "config.pim.latency");
            get_if(L, "mask_or", c.pim_latency.mask_or, "config.pim.latency");
            get_if(L, "mask_not", c.pim_latency.mask_not, "config.pim.latency");
            get_if(L, "aggregate", c.pim_latency.aggregate, "config.pim.latency");
        }
        uint64_t mib = c.scope_size >> 20;
        get_if(p, "scope_size_mib", mib, "config.pim");
        c.scope_size = mib << 20;
        get_if(p, "n_scopes", c.n_scopes, "config.pim");
        get_if(p, "records_per_scope", c.records_per_scope, "config.pim");
        get_if(p, "fields_per_record", c.fields_per_record, "config.pim");
        get_if(p, "field_len_bytes", c.field_len_bytes, "config.pim");
    }
    get_if(j, "write_buffer_depth", c.write_buffer_depth, "config");
    if (j.contains("model")) {
        auto m = model_from(j["model"].get<std::string>());
        if (!m) throw ConfigError("config.model: unknown model " + j["model"].dump());
        c.model = *m;
    }
    get_if(j, "pimfence_orders_all", c.pimfence_orders_all, "config");
    get_if(j, "invariant_check_interval", c.invariant_check_interval, "config");
    get_if(j, "watchdog_events", c.watchdog_events, "config");
    get_if(j, "seed", c.seed, "config");
    c.validate();
    return c;
}

uint64_t SimConfig::hash() const {
    std::string s = to_json();
    uint64_t h = 0xCBF29CE484222325ull;
    for (char ch : s) {
        h ^= static_cast<uint8_t>(ch);
        h *= 0x100000001B3ull;
    }
    return h;
}

}  // namespace pimsim
