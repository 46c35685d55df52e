// Copyright (C) 2026 The hksim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "hksim/dataflow.hpp"
#include "hksim/taskgraph.hpp"

namespace hksim {

// Decoupled-accelerator model: one memory channel of fixed bandwidth and one
// vector compute engine, each draining a FIFO task queue; a queue head issues
// once its dependencies have completed. GB = 2^30 for bandwidth, MB = 2^20
// for capacities and traffic.
struct SimConfig {
    double bandwidth_gbps = 64.0;
    int num_lanes = 128;
    double freq_ghz = 1.7;
    double modops_mult = 1.0;
    // The only calibration knobs: utilization of the transform-style kernels
    // (NTT/INTT/BConvPartial) and of the pointwise kernels.
    double eff_transform = 0.29;
    double eff_pointwise = 0.40;

    double kernel_efficiency(Kernel k) const {
        switch (k) {
            case Kernel::INTT:
            case Kernel::NTT:
            case Kernel::BConvPartial: return eff_transform;
            default: return eff_pointwise;
        }
    }
};

struct StageStats {
    u64 ops = 0;
    u64 bytes = 0;
    double compute_seconds = 0.0;
};

struct SimResult {
    double runtime_ms = 0.0;
    double idle_fraction = 0.0;
    double dram_mb = 0.0;
    double arithmetic_intensity = 0.0;
    std::map<std::string, StageStats> per_stage_breakdown;
};

inline SimResult simulate(const TaskGraph& g, const SimConfig& cfg) {
    if (cfg.bandwidth_gbps <= 0 || cfg.num_lanes <= 0 || cfg.freq_ghz <= 0 || cfg.modops_mult < 1)
        throw std::invalid_argument("simulate: invalid configuration");
    for (const auto& t : g.tasks)
        for (int d : t.deps)
            if (d >= t.id) throw std::invalid_argument("simulate: graph has a forward dependency (cycle)");

    const double bw = cfg.bandwidth_gbps * 1073741824.0;  // bytes per second
    const double engine_rate = (double)cfg.num_lanes * cfg.modops_mult * cfg.freq_ghz * 1e9;

    std::vector<int> mem_q, cmp_q;
    for (const auto& t : g.tasks) (t.kind == TaskKind::Compute ? cmp_q : mem_q).push_back(t.id);

    std::vector<double> done(g.tasks.size(), -1.0);
    double mem_free = 0.0, cmp_free = 0.0;
    double compute_busy = 0.0;
    std::size_t mi = 0, ci = 0;
    SimResult res;

    auto duration = [&](const Task& t) {
        if (t.kind == TaskKind::Compute) return (double)t.ops / (engine_rate * cfg.kernel_efficiency(t.kernel));
        return (double)t.bytes / bw;
    };
    auto try_run = [&](std::size_t& idx, const std::vector<int>& q, double& engine_free) {
        bool progress = false;
        while (idx < q.size()) {
            const Task& t = g.tasks[q[idx]];
            double deps_done = 0.0;
            bool ready = true;
            for (int d : t.deps) {
                if (done[d] < 0) {
                    ready = false;
                    break;
                }
                deps_done = std::max(deps_done, done[d]);
            }
            if (!ready) break;
            double start = std::max(engine_free, deps_done);
            double dur = duration(t);
            done[t.id] = start + dur;
            engine_free = done[t.id];
            if (t.kind == TaskKind::Compute) compute_busy += dur;
            ++idx;
            progress = true;
        }
        return progress;
    };

    while (mi < mem_q.size() || ci < cmp_q.size()) {
        bool p1 = try_run(mi, mem_q, mem_free);
        bool p2 = try_run(ci, cmp_q, cmp_free);
        if (!p1 && !p2) throw std::logic_error("simulate: deadlock (unsatisfiable dependency)");
    }

    double runtime = 0.0;
    for (double d : done) runtime = std::max(runtime, d);
    res.runtime_ms = runtime * 1e3;
    res.idle_fraction = runtime > 0 ? (runtime - compute_busy) / runtime : 0.0;

    u64 bytes = 0;
    for (const auto& t : g.tasks) {
        if (t.kind != TaskKind::Compute) bytes += t.bytes;
        std::string stage = t.stage >= 0 && t.stage < (int)g.stage_names.size() ? g.stage_names[t.stage] : "(none)";
        auto& ss = res.per_stage_breakdown[stage];
        if (t.kind == TaskKind::Compute) {
            ss.ops += t.ops;
            ss.compute_seconds += duration(t);
        } else {
            ss.bytes += t.bytes;
        }
    }
    res.dram_mb = (double)bytes / 1048576.0;
    res.arithmetic_intensity = bytes > 0 ? (double)g.total_ops / (double)bytes : 0.0;
    return res;
}

// --- experiment drivers ------------------------------------------------------

inline const std::vector<double>& default_bw_grid() {
    static const std::vector<double> g = {8.0, 12.8, 25.6, 32.0, 64.0};
    return g;
}

struct SweepPoint {
    Dataflow dataflow;
    double bandwidth_gbps;
    double modops_mult;
    SimResult result;
};

inline std::vector<SweepPoint> sweep_bandwidth(const HksParams& params, const std::vector<Dataflow>& dfs,
                                               const std::vector<double>& bw_list, const SimConfig& base,
                                               u64 onchip_bytes, EvkMode evk) {
    std::vector<SweepPoint> out;
    for (Dataflow df : dfs) {
        TaskGraph g = build_graph(params, df, onchip_bytes, evk);
        for (double bw : bw_list) {
            SimConfig cfg = base;
            cfg.bandwidth_gbps = bw;
            out.push_back(SweepPoint{df, bw, cfg.modops_mult, simulate(g, cfg)});
        }
    }
    return out;
}

// Baseline for the bandwidth-saving studies: MP at 64 GB/s with evks
// preloaded and the 32MB data memory.
inline constexpr u64 kDefaultOnchipBytes = 32ull << 20;
inline constexpr double kBaselineBandwidth = 64.0;

inline double baseline_runtime_ms(const HksParams& params, const SimConfig& base) {
    TaskGraph g = build_mp(params, kDefaultOnchipBytes, EvkMode::Preloaded);
    SimConfig cfg = base;
    cfg.bandwidth_gbps = kBaselineBandwidth;
    return simulate(g, cfg).runtime_ms;
}

// Smallest swept bandwidth at which the OC dataflow (preloaded keys) matches
// the baseline runtime. A non-negative target_runtime_ms overrides the MP
// baseline (useful for self-comparisons).
inline double find_oc_base(const HksParams& params, const SimConfig& base,
                           std::vector<double> grid = default_bw_grid(), double target_runtime_ms = -1.0) {
    const double target =
        (target_runtime_ms >= 0 ? target_runtime_ms : baseline_runtime_ms(params, base)) * (1.0 + 1e-9);
    TaskGraph g = build_oc(params, kDefaultOnchipBytes, EvkMode::Preloaded);
    for (double bw : grid) {
        SimConfig cfg = base;
        cfg.bandwidth_gbps = bw;
        if (simulate(g, cfg).runtime_ms <= target) return bw;
    }
    return grid.back();
}

// Cross-product MODOPS/bandwidth study for one dataflow.
inline std::vector<SweepPoint> sweep_modops(const HksParams& params, Dataflow df,
                                            const std::vector<double>& bw_list,
                                            const std::vector<double>& modops_list, const SimConfig& base,
                                            u64 onchip_bytes, EvkMode evk) {
    std::vector<SweepPoint> out;
    TaskGraph g = build_graph(params, df, onchip_bytes, evk);
    for (double m : modops_list)
        for (double bw : bw_list) {
            SimConfig cfg = base;
            cfg.bandwidth_gbps = bw;
            cfg.modops_mult = m;
            out.push_back(SweepPoint{df, bw, m, simulate(g, cfg)});
        }
    return out;
}

// Smallest bandwidth at which the streamed-key, 32MB-capacity run of `df`
// matches `target_runtime_ms` within 2%. Binary search over the monotone
// runtime curve, refined to 0.01 GB/s; +inf when unreachable below 4 TB/s.
inline double evk_streaming_equivalent_bw(const HksParams& params, Dataflow df, double target_runtime_ms,
                                          const SimConfig& base) {
    TaskGraph g = build_graph(params, df, kDefaultOnchipBytes, EvkMode::Streamed);
    auto runtime_at = [&](double bw) {
        SimConfig cfg = base;
        cfg.bandwidth_gbps = bw;
        return simulate(g, cfg).runtime_ms;
    };
    const double limit = target_runtime_ms * 1.02;
    double lo = 1.0, hi = 4096.0;
    if (runtime_at(hi) > limit) return std::numeric_limits<double>::infinity();
    if (runtime_at(lo) <= limit) return lo;
    while (hi - lo > 0.01) {
        double mid = 0.5 * (lo + hi);
        (runtime_at(mid) <= limit ? hi : lo) = mid;
    }
    return std::round(hi * 100.0) / 100.0;
}

}  // namespace hksim
