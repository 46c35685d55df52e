// Copyright (C) 2026 The hksim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hksim/params.hpp"

namespace hksim {

enum class Dataflow { MP, DC, OC };

inline const char* to_string(Dataflow d) {
    switch (d) {
        case Dataflow::MP: return "mp";
        case Dataflow::DC: return "dc";
        case Dataflow::OC: return "oc";
    }
    return "?";
}

// One registered benchmark parameterization plus the published reference
// numbers used by the reporting commands: DRAM transfers (MB, evk included,
// 32MB on-chip, keys streamed) and arithmetic intensity per dataflow, and
// the bandwidth/speedup design points.
struct BenchmarkSpec {
    std::string name;
    int degree_log2;
    int k_l;   // number of q towers
    int k_p;   // number of p towers (K)
    int dnum;
    int alpha;
    u64 expected_evk_mb;
    std::array<double, 3> expected_dram_mb;  // MP, DC, OC
    std::array<double, 3> expected_ai;       // MP, DC, OC
    double ocbase_gbps;
    double ocbase_speedup;

    HksParams make_params() const { return HksParams(degree_log2, k_l, k_p, dnum); }
};

inline const std::vector<BenchmarkSpec>& benchmark_registry() {
    static const std::vector<BenchmarkSpec> regs = {
        {"BTS1", 17, 28, 28, 1, 28, 112, {600, 600, 420}, {1.92, 1.92, 2.74}, 25.6, 1.30},
        {"BTS2", 17, 40, 20, 2, 20, 240, {1352, 1278, 716}, {1.21, 1.28, 2.28}, 12.8, 2.42},
        {"BTS3", 17, 45, 15, 3, 15, 360, {1850, 1766, 1119}, {1.00, 1.05, 1.65}, 32.0, 1.37},
        {"ARK", 16, 24, 6, 4, 6, 120, {432, 356, 180}, {1.05, 1.27, 2.52}, 8.0, 4.16},
        {"DPRIVE", 16, 26, 7, 3, 9, 99, {365, 336, 170}, {1.26, 1.37, 2.71}, 12.8, 2.96},
    };
    return regs;
}

inline const BenchmarkSpec& find_benchmark(const std::string& name) {
    for (const auto& b : benchmark_registry())
        if (b.name == name) return b;
    throw std::invalid_argument("unknown benchmark: " + name);
}

}  // namespace hksim
