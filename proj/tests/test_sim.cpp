// Copyright (C) 2026 The hksim Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include "hksim/registry.hpp"
#include "hksim/sim.hpp"

using namespace hksim;

namespace {
constexpr u64 MB = 1ull << 20;
constexpr u64 GB = 1ull << 30;
}  // namespace

TEST_CASE("a single load at matching bandwidth takes one second") {
    TaskGraph g;
    g.tower_bytes = 8 * GB;
    g.buffers.push_back(BufferInfo{});
    Task t;
    t.id = 0;
    t.kind = TaskKind::Load;
    t.bytes = 8 * GB;
    t.buffers_out = {0};
    g.tasks.push_back(t);
    SimConfig cfg;
    cfg.bandwidth_gbps = 8.0;
    auto r = simulate(g, cfg);
    CHECK(r.runtime_ms == Catch::Approx(1000.0));
    CHECK(r.idle_fraction == Catch::Approx(1.0));
}

TEST_CASE("cyclic graphs are rejected before simulation") {
    TaskGraph g;
    g.tower_bytes = 8;
    Task t;
    t.id = 0;
    t.kind = TaskKind::Compute;
    t.kernel = Kernel::Add;
    t.ops = 1;
    t.deps = {0};  // self-dependency
    g.tasks.push_back(t);
    g.total_ops = 1;
    SimConfig cfg;
    CHECK_THROWS_AS(simulate(g, cfg), std::invalid_argument);
}

TEST_CASE("simulation is deterministic and conserves bytes") {
    HksParams p = find_benchmark("DPRIVE").make_params();
    TaskGraph g = build_oc(p, 32 * MB, EvkMode::Streamed);
    SimConfig cfg;
    cfg.bandwidth_gbps = 25.6;
    auto a = simulate(g, cfg);
    auto b = simulate(g, cfg);
    CHECK(a.runtime_ms == b.runtime_ms);
    CHECK(a.idle_fraction == b.idle_fraction);
    auto traffic = summarize_traffic(g);
    CHECK(a.dram_mb == Catch::Approx((double)traffic.dram_bytes_total / MB));
}

TEST_CASE("runtime respects the bandwidth and compute lower bounds") {
    HksParams p = find_benchmark("ARK").make_params();
    for (Dataflow df : {Dataflow::MP, Dataflow::DC, Dataflow::OC}) {
        TaskGraph g = build_graph(p, df, 32 * MB, EvkMode::Streamed);
        auto traffic = summarize_traffic(g);
        for (double bw : {8.0, 32.0, 128.0}) {
            SimConfig cfg;
            cfg.bandwidth_gbps = bw;
            auto r = simulate(g, cfg);
            double mem_ms = (double)traffic.dram_bytes_total / (bw * GB) * 1e3;
            double compute_ms = 0;
            for (const auto& t : g.tasks)
                if (t.kind == TaskKind::Compute)
                    compute_ms += (double)t.ops /
                                  (cfg.num_lanes * cfg.modops_mult * cfg.freq_ghz * 1e9 *
                                   cfg.kernel_efficiency(t.kernel)) *
                                  1e3;
            CHECK(r.runtime_ms >= mem_ms * 0.999999);
            CHECK(r.runtime_ms >= compute_ms * 0.999999);
        }
    }
}

TEST_CASE("more bandwidth never hurts") {
    HksParams p = find_benchmark("BTS2").make_params();
    for (Dataflow df : {Dataflow::MP, Dataflow::DC, Dataflow::OC}) {
        TaskGraph g = build_graph(p, df, 32 * MB, EvkMode::Preloaded);
        double prev = 1e300;
        for (double bw : {8.0, 12.8, 25.6, 32.0, 64.0, 128.0, 256.0, 512.0, 1024.0}) {
            SimConfig cfg;
            cfg.bandwidth_gbps = bw;
            double rt = simulate(g, cfg).runtime_ms;
            CHECK(rt <= prev * 1.0000001);
            prev = rt;
        }
    }
}

TEST_CASE("sweep_bandwidth covers the grid with nonincreasing runtimes") {
    HksParams p = find_benchmark("DPRIVE").make_params();
    SimConfig base;
    auto pts = sweep_bandwidth(p, {Dataflow::OC}, default_bw_grid(), base, 32 * MB, EvkMode::Preloaded);
    REQUIRE(pts.size() == default_bw_grid().size());
    for (std::size_t i = 1; i < pts.size(); ++i)
        CHECK(pts[i].result.runtime_ms <= pts[i - 1].result.runtime_ms * 1.0000001);
}

TEST_CASE("modops multiplier is irrelevant when bandwidth bound") {
    // streamed keys at 8 GB/s put the run deep in the bandwidth-bound regime
    HksParams p = find_benchmark("ARK").make_params();
    SimConfig base;
    auto pts = sweep_modops(p, Dataflow::MP, {8.0}, {1.0, 16.0}, base, 32 * MB, EvkMode::Streamed);
    REQUIRE(pts.size() == 2);
    double r1 = pts[0].result.runtime_ms;
    double r16 = pts[1].result.runtime_ms;
    CHECK(std::abs(r1 - r16) / r1 < 0.10);
}

TEST_CASE("oc_base degenerates to 64 when the target is OC itself") {
    HksParams p = find_benchmark("ARK").make_params();
    SimConfig base;
    TaskGraph g = build_oc(p, 32 * MB, EvkMode::Preloaded);
    SimConfig cfg = base;
    cfg.bandwidth_gbps = 64.0;
    double self_target = simulate(g, cfg).runtime_ms;
    CHECK(find_oc_base(p, base, default_bw_grid(), self_target) == 64.0);
}

TEST_CASE("streamed-equivalent bandwidth matches a preloaded target within 2%") {
    HksParams p = find_benchmark("ARK").make_params();
    SimConfig base;
    double target = baseline_runtime_ms(p, base);
    double bw = evk_streaming_equivalent_bw(p, Dataflow::OC, target, base);
    REQUIRE(std::isfinite(bw));
    TaskGraph g = build_oc(p, 32 * MB, EvkMode::Streamed);
    SimConfig cfg = base;
    cfg.bandwidth_gbps = bw;
    CHECK(simulate(g, cfg).runtime_ms <= target * 1.02);
    // unreachable targets report infinity
    CHECK(std::isinf(evk_streaming_equivalent_bw(p, Dataflow::OC, target * 1e-6, base)));
}

TEST_CASE("imported graphs simulate like the originals") {
    HksParams p(12, 6, 2, 2);
    TaskGraph g = build_dc(p, 32 * MB, EvkMode::Streamed);
    std::stringstream ss;
    export_graph(g, ss);
    TaskGraph h = import_graph(ss);
    SimConfig cfg;
    cfg.bandwidth_gbps = 12.8;
    auto a = simulate(g, cfg);
    auto b = simulate(h, cfg);
    CHECK(a.runtime_ms == Catch::Approx(b.runtime_ms));
    CHECK(a.dram_mb == Catch::Approx(b.dram_mb));
}
