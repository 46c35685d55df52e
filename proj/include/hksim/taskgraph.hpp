// Copyright (C) 2026 The hksim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hksim/params.hpp"
#include "hksim/registry.hpp"

namespace hksim {

enum class TaskKind { Load, Store, Compute };
enum class Kernel { INTT, NTT, BConvPartial, PointMul, Add, ScaleSub, None };
enum class EvkMode { Preloaded, Streamed };

inline const char* to_string(TaskKind k) {
    switch (k) {
        case TaskKind::Load: return "load";
        case TaskKind::Store: return "store";
        case TaskKind::Compute: return "compute";
    }
    return "?";
}

inline const char* to_string(Kernel k) {
    switch (k) {
        case Kernel::INTT: return "intt";
        case Kernel::NTT: return "ntt";
        case Kernel::BConvPartial: return "bconvpartial";
        case Kernel::PointMul: return "pointmul";
        case Kernel::Add: return "add";
        case Kernel::ScaleSub: return "scalesub";
        case Kernel::None: return "-";
    }
    return "-";
}

inline const char* to_string(EvkMode m) { return m == EvkMode::Preloaded ? "preloaded" : "streamed"; }

struct Task {
    int id = 0;
    TaskKind kind = TaskKind::Compute;
    Kernel kernel = Kernel::None;
    u64 bytes = 0;  // Load/Store payload
    u64 ops = 0;    // Compute modular-op count (muls + adds)
    std::vector<int> deps;
    std::vector<int> buffers_in, buffers_out;
    std::vector<int> frees;  // buffers leaving the scratchpad after this task
    int stage = -1;
};

struct BufferInfo {
    bool is_evk = false;
    bool is_output = false;
};

struct TrafficSummary {
    u64 dram_bytes_total = 0;
    u64 dram_bytes_evk = 0;
    u64 dram_bytes_data = 0;
    double arithmetic_intensity = 0.0;
    u64 peak_working_set_bytes = 0;
};

// Explicit task DAG for one key-switch invocation under a fixed dataflow,
// on-chip capacity and evk placement. Tasks are stored in the serial issue
// order; the two queue orders are its projections.
struct TaskGraph {
    Dataflow dataflow = Dataflow::MP;
    EvkMode evk_mode = EvkMode::Streamed;
    u64 onchip_capacity_bytes = 0;  // 0 means unbounded
    u64 tower_bytes = 0;
    u64 total_ops = 0;
    std::vector<Task> tasks;
    std::vector<BufferInfo> buffers;
    std::vector<std::string> stage_names;
    // Peak live-buffer footprint over the serial issue order, filled by the
    // scheduler (buffer lifetimes include hoisted-stage extensions).
    u64 peak_live_bytes = 0;

    std::vector<int> memory_order() const {
        std::vector<int> o;
        for (const auto& t : tasks)
            if (t.kind != TaskKind::Compute) o.push_back(t.id);
        return o;
    }
    std::vector<int> compute_order() const {
        std::vector<int> o;
        for (const auto& t : tasks)
            if (t.kind == TaskKind::Compute) o.push_back(t.id);
        return o;
    }
};

inline TrafficSummary summarize_traffic(const TaskGraph& g) {
    TrafficSummary s;
    for (const auto& t : g.tasks) {
        if (t.kind == TaskKind::Compute) continue;
        bool evk = t.kind == TaskKind::Load && !t.buffers_out.empty() &&
                   g.buffers[t.buffers_out[0]].is_evk;
        if (evk)
            s.dram_bytes_evk += t.bytes;
        else
            s.dram_bytes_data += t.bytes;
    }
    s.dram_bytes_total = s.dram_bytes_evk + s.dram_bytes_data;
    s.peak_working_set_bytes = g.peak_live_bytes;
    if (s.dram_bytes_total > 0) s.arithmetic_intensity = (double)g.total_ops / (double)s.dram_bytes_total;
    return s;
}

// Replay checks: dependency ids are backward, every compute input was
// produced (loaded or computed) earlier and not invalidated, live bytes
// never exceed capacity, and the summed compute ops match total_ops.
struct ValidationResult {
    bool ok = true;
    std::string error;
    u64 peak_live_bytes = 0;
};

inline ValidationResult validate_graph(const TaskGraph& g) {
    ValidationResult r;
    auto fail = [&](const std::string& e) {
        r.ok = false;
        r.error = e;
        return r;
    };
    const std::size_t nb = g.buffers.size();
    for (std::size_t i = 0; i < g.tasks.size(); ++i) {
        const auto& t = g.tasks[i];
        if ((int)i != t.id) return fail("task ids must equal their serial position");
        for (int d : t.deps)
            if (d >= (int)i) return fail("dependency points forward at task " + std::to_string(i));
    }
    // residency replay: Load/Compute outputs enter the scratchpad, the
    // scheduler's recorded frees remove buffers, capacity is checked at
    // every point of the serial issue order.
    const u64 cap = g.onchip_capacity_bytes == 0 ? std::numeric_limits<u64>::max() : g.onchip_capacity_bytes;
    std::vector<char> resident(nb, 0);
    // streamed key towers flow through the pointwise units; they are part of
    // the working-set footprint but not of the evictable scratchpad contents
    u64 live = 0, live_evk = 0, peak = 0, ops = 0;
    for (const auto& t : g.tasks) {
        auto alloc = [&](int b) {
            if (b < 0 || b >= (int)nb) throw std::out_of_range("buffer id");
            if (!resident[b]) {
                resident[b] = 1;
                (g.buffers[b].is_evk ? live_evk : live) += g.tower_bytes;
            }
        };
        if (t.kind == TaskKind::Load) {
            for (int b : t.buffers_out) alloc(b);
        } else if (t.kind == TaskKind::Compute) {
            ops += t.ops;
            for (int b : t.buffers_in)
                if (!resident[b]) return fail("compute input buffer not on-chip at task " + std::to_string(t.id));
            for (int b : t.buffers_out) alloc(b);
        } else {
            for (int b : t.buffers_in)
                if (!resident[b]) return fail("store of non-resident buffer at task " + std::to_string(t.id));
        }
        peak = std::max(peak, live + live_evk);
        if (live > cap) return fail("capacity exceeded at task " + std::to_string(t.id));
        for (int b : t.frees) {
            if (!resident[b]) return fail("free of non-resident buffer at task " + std::to_string(t.id));
            resident[b] = 0;
            (g.buffers[b].is_evk ? live_evk : live) -= g.tower_bytes;
        }
    }
    if (ops != g.total_ops) return fail("sum of compute ops does not match the recorded total");
    r.peak_live_bytes = peak;
    return r;
}

// Line-oriented export: task <id> <kind> <kernel|-> <bytes> <ops> deps=<id,...>
inline void export_graph(const TaskGraph& g, std::ostream& os) {
    for (const auto& t : g.tasks) {
        os << "task " << t.id << ' ' << to_string(t.kind) << ' ' << to_string(t.kernel) << ' ' << t.bytes
           << ' ' << t.ops << " deps=";
        for (std::size_t i = 0; i < t.deps.size(); ++i) {
            if (i) os << ',';
            os << t.deps[i];
        }
        os << '\n';
    }
}

// Import of the text format; buffer/stage metadata is not part of the wire
// format, so imported graphs support simulation but not capacity replay.
inline TaskGraph import_graph(std::istream& is) {
    TaskGraph g;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string word;
        ls >> word;
        if (word != "task") throw std::invalid_argument("graph import: expected 'task', got '" + word + "'");
        Task t;
        std::string kind, kernel, deps;
        ls >> t.id >> kind >> kernel >> t.bytes >> t.ops >> deps;
        if (!ls) throw std::invalid_argument("graph import: malformed line: " + line);
        if (kind == "load")
            t.kind = TaskKind::Load;
        else if (kind == "store")
            t.kind = TaskKind::Store;
        else if (kind == "compute")
            t.kind = TaskKind::Compute;
        else
            throw std::invalid_argument("graph import: bad kind " + kind);
        for (Kernel k : {Kernel::INTT, Kernel::NTT, Kernel::BConvPartial, Kernel::PointMul, Kernel::Add,
                         Kernel::ScaleSub, Kernel::None})
            if (kernel == to_string(k)) t.kernel = k;
        if (deps.rfind("deps=", 0) != 0) throw std::invalid_argument("graph import: missing deps field");
        std::string ids = deps.substr(5);
        std::istringstream ds(ids);
        std::string tok;
        while (std::getline(ds, tok, ','))
            if (!tok.empty()) t.deps.push_back(std::stoi(tok));
        g.total_ops += t.ops;
        g.tasks.push_back(std::move(t));
    }
    return g;
}

}  // namespace hksim
