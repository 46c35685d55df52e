// Copyright (C) 2026 The hksim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cassert>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "hksim/keyswitch.hpp"
#include "hksim/taskgraph.hpp"

namespace hksim {

struct InfeasibleScheduleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

// Abstract compute step emitted by a dataflow builder. The scheduler turns
// the step stream into Load/Store/Compute tasks under the capacity budget.
struct Step {
    Kernel kernel;
    u64 ops;
    std::vector<int> ins;
    std::vector<int> outs;
    int stage;
};

struct BufDecl {
    bool home_offchip = false;  // an off-chip copy exists before the run
    bool is_evk = false;
    bool is_output = false;
};

class Assembler {
public:
    // schedule_margin_bytes keeps headroom for the memory engine to
    // prefetch into; retention decisions use the reduced budget while the
    // capacity guarantee itself stays at the full size.
    Assembler(const HksParams& params, Dataflow df, u64 capacity_bytes, EvkMode evk,
              u64 schedule_margin_bytes = 0)
        : params_(params), df_(df), capacity_bytes_(capacity_bytes), evk_(evk) {
        tower_bytes_ = params.tower_bytes();
        margin_ = schedule_margin_bytes / tower_bytes_;
        if (capacity_bytes_ != 0 && capacity_bytes_ / tower_bytes_ < 2)
            throw InfeasibleScheduleError("on-chip capacity below two towers");
    }

    int input_buffer(bool is_evk = false) {
        bufs_.push_back(BufDecl{true, is_evk, false});
        return (int)bufs_.size() - 1;
    }
    int fresh_buffer(bool is_output = false) {
        bufs_.push_back(BufDecl{false, false, is_output});
        return (int)bufs_.size() - 1;
    }

    // writeback stages owe one DRAM store for each freshly created output
    // (the stage-major discipline: every stage's products go to DRAM).
    int begin_stage(const std::string& name, bool writeback = false) {
        stage_names_.push_back(name);
        stage_writeback_.push_back(writeback);
        return (int)stage_names_.size() - 1;
    }

    void step(Kernel k, u64 ops, std::vector<int> ins, std::vector<int> outs) {
        steps_.push_back(Step{k, ops, std::move(ins), std::move(outs), (int)stage_names_.size() - 1});
    }

    TaskGraph schedule();

    const HksParams& params() const { return params_; }
    EvkMode evk_mode() const { return evk_; }

private:
    const HksParams& params_;
    Dataflow df_;
    u64 capacity_bytes_;
    EvkMode evk_;
    u64 margin_ = 0;
    u64 tower_bytes_;
    std::vector<BufDecl> bufs_;
    std::vector<Step> steps_;
    std::vector<std::string> stage_names_;
    std::vector<char> stage_writeback_;
};

// ---------------------------------------------------------------------------
// Scheduler: Belady spilling on the static step order, stage hoisting when a
// stage's working set fits on-chip without evictions, and capacity-gate
// dependencies so the simulator can never overrun the scratchpad.
inline TaskGraph Assembler::schedule() {
    const std::size_t nb = bufs_.size();
    const u64 cap_t = capacity_bytes_ == 0 ? std::numeric_limits<u64>::max() / 2 : capacity_bytes_ / tower_bytes_;
    // Streamed key towers flow straight into the pointwise units and are
    // never buffered; they use bandwidth but not scratchpad capacity.
    auto counted = [&](int b) { return !bufs_[b].is_evk; };
    // the prefetch margin can never shrink the budget below the largest
    // single-step footprint
    u64 max_footprint = 0;
    for (const auto& s : steps_) {
        u64 f = 0;
        for (int b : s.ins)
            if (counted(b)) ++f;
        for (int b : s.outs)
            if (counted(b) && std::find(s.ins.begin(), s.ins.end(), b) == s.ins.end()) ++f;
        max_footprint = std::max(max_footprint, f);
    }
    const u64 cap_sched = std::min(cap_t, std::max(cap_t > margin_ ? cap_t - margin_ : 1, max_footprint + 1));

    // reference positions per buffer
    std::vector<std::vector<int>> refs(nb);
    for (std::size_t s = 0; s < steps_.size(); ++s) {
        for (int b : steps_[s].ins) refs[b].push_back((int)s);
        for (int b : steps_[s].outs) refs[b].push_back((int)s);
    }
    // the write-back discipline covers staging through DRAM; once the whole
    // pipeline fits on-chip there is nothing to stage
    u64 unique_buffers = 0;
    for (std::size_t b = 0; b < nb; ++b)
        if (counted((int)b) && !refs[b].empty()) ++unique_buffers;
    const bool writeback_active = capacity_bytes_ != 0 && cap_t < unique_buffers;
    std::vector<std::size_t> ref_ptr(nb, 0);
    auto next_use = [&](int b, int after) -> int {
        auto& r = refs[b];
        auto& p = ref_ptr[b];
        while (p < r.size() && r[p] <= after) ++p;
        return p < r.size() ? r[p] : std::numeric_limits<int>::max();
    };

    // stage extents
    const int nstages = (int)stage_names_.size();
    std::vector<int> stage_begin(nstages, -1), stage_end(nstages, -1);
    for (std::size_t s = 0; s < steps_.size(); ++s) {
        int st = steps_[s].stage;
        if (stage_begin[st] < 0) stage_begin[st] = (int)s;
        stage_end[st] = (int)s;
    }
    // distinct buffers per stage
    std::vector<std::vector<int>> stage_bufs(nstages);
    {
        std::vector<int> seen(nb, -1);
        for (std::size_t s = 0; s < steps_.size(); ++s) {
            int st = steps_[s].stage;
            auto touch = [&](int b) {
                if (seen[b] != st) {
                    seen[b] = st;
                    stage_bufs[st].push_back(b);
                }
            };
            for (int b : steps_[s].ins) touch(b);
            for (int b : steps_[s].outs) touch(b);
        }
    }
    // first/last raw reference per buffer
    std::vector<int> last_ref(nb, -1), first_ref(nb, -1);
    for (std::size_t b = 0; b < nb; ++b)
        if (!refs[b].empty()) {
            first_ref[b] = refs[b].front();
            last_ref[b] = refs[b].back();
        }

    TaskGraph g;
    g.dataflow = df_;
    g.evk_mode = evk_;
    g.onchip_capacity_bytes = capacity_bytes_;
    g.tower_bytes = tower_bytes_;
    g.stage_names = stage_names_;
    g.buffers.resize(nb);
    for (std::size_t b = 0; b < nb; ++b) g.buffers[b] = BufferInfo{bufs_[b].is_evk, bufs_[b].is_output};

    struct BufState {
        bool resident = false;
        bool dirty = false;
        bool wb_pending = false;  // produced by a write-back stage, store owed
        bool has_copy = false;    // valid off-chip copy
        int last_task = -1;       // last task referencing it (for free gating)
        int writer_task = -1;     // last task writing it
        int store_task = -1;      // task holding its latest off-chip copy
        int pinned_until = -1;    // stage-hoist pin (step index)
    };
    std::vector<BufState> st(nb);
    for (std::size_t b = 0; b < nb; ++b) st[b].has_copy = bufs_[b].home_offchip;

    u64 live = 0, peak_live = 0;
    u64 credits = cap_t;
    std::vector<std::pair<int, u64>> free_fifo;  // (task id, towers)
    std::size_t fifo_head = 0;

    auto emit = [&](TaskKind kind, Kernel kern, u64 bytes, u64 ops, std::vector<int> deps,
                    std::vector<int> bin, std::vector<int> bout, int stage) -> int {
        Task t;
        t.id = (int)g.tasks.size();
        t.kind = kind;
        t.kernel = kern;
        t.bytes = bytes;
        t.ops = ops;
        std::sort(deps.begin(), deps.end());
        deps.erase(std::unique(deps.begin(), deps.end()), deps.end());
        t.deps = std::move(deps);
        t.buffers_in = std::move(bin);
        t.buffers_out = std::move(bout);
        t.stage = stage;
        g.tasks.push_back(std::move(t));
        return g.tasks.back().id;
    };

    // take capacity gates until `need` credits are available
    auto take_credits = [&](u64 need, std::vector<int>& gate_deps) {
        while (credits < need) {
            if (fifo_head >= free_fifo.size())
                throw InfeasibleScheduleError("scheduler ran out of reclaimable space");
            gate_deps.push_back(free_fifo[fifo_head].first);
            credits += free_fifo[fifo_head].second;
            ++fifo_head;
        }
        credits -= need;
    };
    auto release = [&](int task, u64 n) { free_fifo.emplace_back(task, n); };

    u64 live_evk = 0, peak_total = 0;
    auto free_buffer = [&](int b) {
        assert(st[b].resident);
        st[b].resident = false;
        g.tasks.back().frees.push_back(b);
        if (!counted(b)) {
            live_evk -= 1;
            return;
        }
        live -= 1;
        release(st[b].last_task, 1);
    };

    // stores a dirty resident buffer; returns the store task id
    auto store_buffer = [&](int b, int stage) {
        int id = emit(TaskKind::Store, Kernel::None, tower_bytes_, 0, {st[b].writer_task}, {b}, {}, stage);
        st[b].dirty = false;
        st[b].wb_pending = false;
        st[b].has_copy = true;
        st[b].store_task = id;
        st[b].last_task = id;
        return id;
    };

    // Victim choice: least-soon-needed, except that dropping a clean buffer
    // costs one reload while spilling a dirty one costs a store and a
    // reload, so a clean victim is preferred whenever its reuse is within a
    // constant factor of the farthest dirty buffer's.
    constexpr long long kCleanPreferenceRatio = 10;
    auto evict_one = [&](int cur_step, const std::vector<int>& pinned, int stage) {
        int best_clean = -1, best_dirty = -1;
        long long clean_nu = -1, dirty_nu = -1;
        for (std::size_t b = 0; b < nb; ++b) {
            if (!st[b].resident || !counted(b)) continue;
            if (st[b].pinned_until >= cur_step) continue;
            if (std::find(pinned.begin(), pinned.end(), (int)b) != pinned.end()) continue;
            long long nu = next_use((int)b, cur_step - 1);
            if (st[b].dirty || st[b].wb_pending) {
                if (nu > dirty_nu) { dirty_nu = nu; best_dirty = (int)b; }
            } else {
                if (nu > clean_nu) { clean_nu = nu; best_clean = (int)b; }
            }
        }
        int victim;
        if (best_clean >= 0 && best_dirty >= 0) {
            long long cd = clean_nu - cur_step, dd = dirty_nu - cur_step;
            victim = cd * kCleanPreferenceRatio >= dd ? best_clean : best_dirty;
        } else if (best_clean >= 0) {
            victim = best_clean;
        } else if (best_dirty >= 0) {
            victim = best_dirty;
        } else {
            throw InfeasibleScheduleError("no evictable buffer; step working set exceeds capacity");
        }
        if (st[victim].dirty || st[victim].wb_pending) store_buffer(victim, stage);
        free_buffer(victim);
    };

    // make b resident (load from its off-chip copy)
    int last_compute_task = -1;
    auto load_buffer = [&](int b, int cur_step, const std::vector<int>& pinned, int stage) {
        if (st[b].resident) return;
        if (!st[b].has_copy) throw std::logic_error("builder bug: consuming a buffer with no copy");
        std::vector<int> deps;
        if (st[b].store_task >= 0) deps.push_back(st[b].store_task);
        if (counted(b)) {
            while (live + 1 > cap_sched) evict_one(cur_step, pinned, stage);
            take_credits(1, deps);
        } else if (last_compute_task >= 0) {
            // key towers stream in lockstep with the pointwise units rather
            // than prefetching arbitrarily far ahead
            deps.push_back(last_compute_task);
        }
        int id = emit(TaskKind::Load, Kernel::None, tower_bytes_, 0, std::move(deps), {}, {b}, stage);
        st[b].resident = true;
        st[b].dirty = false;
        st[b].writer_task = id;
        st[b].last_task = id;
        if (counted(b)) {
            live += 1;
            peak_live = std::max(peak_live, live);
        } else {
            live_evk += 1;
        }
        peak_total = std::max(peak_total, live + live_evk);
    };

    auto alloc_output = [&](int b, int cur_step, const std::vector<int>& pinned, int stage,
                            std::vector<int>& gate_deps) {
        if (st[b].resident) return;  // RMW on resident buffer
        while (live + 1 > cap_sched) evict_one(cur_step, pinned, stage);
        take_credits(1, gate_deps);
        st[b].resident = true;
        live += 1;
        peak_live = std::max(peak_live, live);
        peak_total = std::max(peak_total, live + live_evk);
    };

    // process deaths after `pos` (task-granular or deferred to stage end)
    auto process_death = [&](int b, int stage) {
        if (!st[b].resident) return;
        if ((st[b].dirty && bufs_[b].is_output) || st[b].wb_pending) store_buffer(b, stage);
        free_buffer(b);
    };

    int si = 0;
    while (si < (int)steps_.size()) {
        const int stage = steps_[si].stage;
        const int sbegin = stage_begin[stage];
        const int send = stage_end[stage];
        assert(si == sbegin);

        // hoisting test: the whole stage working set fits without evictions
        u64 extra = 0;
        for (int b : stage_bufs[stage])
            if (!st[b].resident && counted(b)) ++extra;
        const bool hoist = live + extra <= cap_sched;

        if (hoist) {
            // loads first, lifetimes pinned to the stage span
            for (int b : stage_bufs[stage]) {
                st[b].pinned_until = send;
                if (!st[b].resident && st[b].has_copy) load_buffer(b, sbegin, {}, stage);
            }
        }
        for (int s = sbegin; s <= send; ++s) {
            const Step& stp = steps_[s];
            std::vector<int> pinned = stp.ins;
            pinned.insert(pinned.end(), stp.outs.begin(), stp.outs.end());
            std::vector<int> deps;
            for (int b : stp.ins) {
                if (!st[b].resident) load_buffer(b, s, pinned, stage);
                deps.push_back(st[b].writer_task);
            }
            for (int b : stp.outs)
                if (st[b].resident && st[b].writer_task >= 0) deps.push_back(st[b].writer_task);
            std::vector<int> gate_deps;
            for (int b : stp.outs) alloc_output(b, s, pinned, stage, gate_deps);
            deps.insert(deps.end(), gate_deps.begin(), gate_deps.end());
            int id = emit(TaskKind::Compute, stp.kernel, 0, stp.ops, std::move(deps), stp.ins, stp.outs, stage);
            last_compute_task = id;
            for (int b : stp.ins) st[b].last_task = id;
            for (int b : stp.outs) {
                st[b].last_task = id;
                st[b].writer_task = id;
                st[b].dirty = true;
                st[b].has_copy = false;  // the on-chip version is newer than any copy
                st[b].store_task = -1;
            }
            if (!hoist) {
                for (int b : stp.ins)
                    if (last_ref[b] == s) process_death(b, stage);
                for (int b : stp.outs)
                    if (last_ref[b] == s) process_death(b, stage);
            }
        }
        // stage-major write-back: under a bounded budget, products of this
        // stage owe one trip to DRAM; the store itself is deferred so it
        // does not head-block the next stage's loads in the memory queue
        if (stage_writeback_[stage] && writeback_active) {
            for (int b : stage_bufs[stage])
                if (first_ref[b] >= sbegin && st[b].resident && st[b].dirty) st[b].wb_pending = true;
        }
        if (hoist) {
            for (int b : stage_bufs[stage]) {
                st[b].pinned_until = -1;
                if (last_ref[b] <= send) process_death(b, stage);
            }
        }
        si = send + 1;
    }
    // flush dirty outputs that survived to the end (none expected, but safe)
    for (std::size_t b = 0; b < nb; ++b)
        if (st[b].resident && ((st[b].dirty && bufs_[b].is_output) || st[b].wb_pending))
            store_buffer((int)b, nstages - 1);

    // the reported working set includes streamed key towers in flight even
    // though they are not evictable scratchpad contents
    g.peak_live_bytes = peak_total * tower_bytes_;
    for (const auto& t : g.tasks)
        if (t.kind == TaskKind::Compute) g.total_ops += t.ops;
    return g;
}

// ---------------------------------------------------------------------------
// Shared emission for the stage-major (MP) and digit-major (DC) dataflows.
// MP runs every stage over all digits before the next stage begins; DC
// completes P1..P5 one digit at a time. Both accumulate the pointwise
// products into running sums under a bounded budget; MP materializes the
// ModUp_P4 partials as a separate stage when everything fits on-chip.

struct PipelineBuffers {
    std::vector<int> c1;                              // L input towers
    std::vector<std::vector<int>> evk;                // [digit][2*D] streamed towers, empty if preloaded
    std::vector<int> acc;                             // 2*D accumulator towers (h*D + t)
    std::vector<int> out;                             // 2*L output towers
};

inline PipelineBuffers make_common_buffers(Assembler& a, const HksParams& p) {
    PipelineBuffers pb;
    const int L = p.num_q_towers();
    const int D = L + p.num_p_towers();
    for (int t = 0; t < L; ++t) pb.c1.push_back(a.input_buffer());
    if (a.evk_mode() == EvkMode::Streamed) {
        pb.evk.resize(p.dnum());
        for (int j = 0; j < p.dnum(); ++j)
            for (int h = 0; h < 2; ++h)
                for (int t = 0; t < D; ++t) pb.evk[j].push_back(a.input_buffer(true));
    }
    for (int h = 0; h < 2; ++h)
        for (int t = 0; t < D; ++t) pb.acc.push_back(a.fresh_buffer());
    for (int h = 0; h < 2; ++h)
        for (int t = 0; t < L; ++t) pb.out.push_back(a.fresh_buffer(true));
    return pb;
}

inline u64 butterfly_ops(const HksParams& p) { return 3 * (p.n() / 2) * (u64)p.degree_log2(); }

// evk operand list for digit j, half h, tower t (empty when preloaded)
inline std::vector<int> evk_operand(const PipelineBuffers& pb, const HksParams& p, int j, int h, int t) {
    if (pb.evk.empty()) return {};
    const int D = p.num_q_towers() + p.num_p_towers();
    return {pb.evk[j][h * D + t]};
}

// Shared ModDown emission: stage-major with the BConv->NTT pair fused per
// output tower; used by MP and DC.
inline void emit_moddown_stage_major(Assembler& a, const HksParams& p, PipelineBuffers& pb,
                                     const std::string& tag) {
    const int L = p.num_q_towers();
    const int K = p.num_p_towers();
    const int D = L + K;
    const u64 n = p.n();
    const u64 bf = butterfly_ops(p);

    // one result polynomial at a time, stage-major within it
    for (int h = 0; h < 2; ++h) {
        const std::string hh = tag + "_h" + std::to_string(h);
        a.begin_stage("moddown_p1" + hh, true);
        std::vector<int> src;
        for (int k = 0; k < K; ++k) {
            int b = pb.acc[h * D + L + k];
            a.step(Kernel::INTT, bf, {b}, {b});
            src.push_back(b);
        }
        a.begin_stage("moddown_p23" + hh, true);
        std::vector<int> cv(L);
        for (int t = 0; t < L; ++t) {
            cv[t] = a.fresh_buffer();
            a.step(Kernel::BConvPartial, 2 * n * K, src, {cv[t]});
            a.step(Kernel::NTT, bf, {cv[t]}, {cv[t]});
        }
        a.begin_stage("moddown_p4" + hh, true);
        for (int t = 0; t < L; ++t)
            a.step(Kernel::ScaleSub, 2 * n, {pb.acc[h * D + t], cv[t]}, {pb.out[h * L + t]});
    }
}

inline TaskGraph build_grouped(const HksParams& p, Dataflow df, u64 capacity_bytes, EvkMode evk,
                               const std::vector<std::vector<int>>& groups, bool unfused_reduce) {
    // bulk stage streams leave headroom for prefetch; the stage-major
    // schedule reserves more of it than the digit-major one
    Assembler a(p, df, capacity_bytes, evk,
                /*schedule_margin_bytes=*/df == Dataflow::MP ? (11ull << 20) : (2ull << 20));
    PipelineBuffers pb = make_common_buffers(a, p);
    const int L = p.num_q_towers();
    const int K = p.num_p_towers();
    const int D = L + K;
    const int d = p.dnum();
    const u64 n = p.n();
    const u64 bf = butterfly_ops(p);
    const bool multi = groups.size() > 1;

    // per-digit conversion buffers (bc) indexed by target position in D order
    std::vector<std::vector<int>> bc(d);
    std::vector<std::vector<int>> intt(d);
    // ext operand for digit j at D-basis tower t
    auto ext_of = [&](int j, int t) {
        auto [ds, de] = p.digit_bounds(j);
        if (t >= ds && t < de) return pb.c1[t];
        int pos = t < ds ? t : t - p.digit_size(j);  // skip the digit's own towers
        return bc[j][pos];
    };

    bool first_contribution = true;
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
        const auto& g = groups[gi];
        std::string tag = multi ? "_g" + std::to_string(gi) : "";
        a.begin_stage("modup_p1" + tag, true);
        for (int j : g) {
            auto [ds, de] = p.digit_bounds(j);
            intt[j].clear();
            for (int t = ds; t < de; ++t) {
                int b = a.fresh_buffer();
                intt[j].push_back(b);
                a.step(Kernel::INTT, bf, {pb.c1[t]}, {b});
            }
        }
        // basis extension with the NTT chained per converted tower
        a.begin_stage("modup_p23" + tag, true);
        for (int j : g) {
            const u64 alpha = p.digit_size(j);
            bc[j].assign(p.beta(j), -1);
            for (int t = 0; t < p.beta(j); ++t) {
                bc[j][t] = a.fresh_buffer();
                a.step(Kernel::BConvPartial, 2 * n * alpha, intt[j], {bc[j][t]});
                a.step(Kernel::NTT, bf, {bc[j][t]}, {bc[j][t]});
            }
        }

        if (unfused_reduce && d > 1) {
            // stage-pure pointwise multiply producing all partial products,
            // then a tower-major reduce stage
            a.begin_stage("modup_p4" + tag, true);
            std::vector<std::vector<int>> part(2 * d);
            for (int j : g)
                for (int h = 0; h < 2; ++h) {
                    part[j * 2 + h].assign(D, -1);
                    for (int t = 0; t < D; ++t) {
                        part[j * 2 + h][t] = a.fresh_buffer();
                        std::vector<int> ins = {ext_of(j, t)};
                        auto e = evk_operand(pb, p, j, h, t);
                        ins.insert(ins.end(), e.begin(), e.end());
                        a.step(Kernel::PointMul, n, ins, {part[j * 2 + h][t]});
                    }
                }
            a.begin_stage("modup_p5" + tag, true);
            for (int t = 0; t < D; ++t)
                for (int h = 0; h < 2; ++h) {
                    std::vector<int> ins;
                    for (int j : g) ins.push_back(part[j * 2 + h][t]);
                    a.step(Kernel::Add, (u64)(d - 1) * n, ins, {pb.acc[h * D + t]});
                }
        } else {
            // Fused multiply-accumulate. The digit-major schedule keys one
            // (digit, half) pair per sub-stage; the stage-major one runs a
            // whole digit per sub-stage with the halves interleaved, which
            // keeps its wide pipeline running through fewer transitions.
            const bool half_substages = true;
            for (int j : g) {
                auto emit_mul = [&](int h, int t) {
                    int accb = pb.acc[h * D + t];
                    std::vector<int> ins = {ext_of(j, t)};
                    auto e = evk_operand(pb, p, j, h, t);
                    ins.insert(ins.end(), e.begin(), e.end());
                    if (j == g.front() && first_contribution) {
                        a.step(Kernel::PointMul, n, ins, {accb});
                    } else {
                        ins.push_back(accb);
                        a.step(Kernel::PointMul, 2 * n, ins, {accb});
                    }
                };
                const std::string dtag = multi || d > 1 ? "_d" + std::to_string(j) : "";
                if (half_substages) {
                    for (int h = 0; h < 2; ++h) {
                        a.begin_stage("modup_p45" + dtag + "_h" + std::to_string(h), true);
                        for (int t = 0; t < D; ++t) emit_mul(h, t);
                    }
                } else {
                    a.begin_stage("modup_p45" + dtag, true);
                    for (int t = 0; t < D; ++t)
                        for (int h = 0; h < 2; ++h) emit_mul(h, t);
                }
            }
            // after the first group's first digit, further digits accumulate
        }
        if (!g.empty()) first_contribution = false;
    }
    emit_moddown_stage_major(a, p, pb, "");
    return a.schedule();
}

}  // namespace detail

// Max-Parallel: every stage runs over all towers and digits before the next
// stage begins. With enough on-chip memory the ModUp_P4 partial products are
// materialized and reduced by a separate stage; under a tight budget the
// reduce is folded into the pointwise stage so partials never round-trip.
inline TaskGraph build_mp(const HksParams& p, u64 onchip_capacity_bytes, EvkMode evk) {
    std::vector<std::vector<int>> groups(1);
    for (int j = 0; j < p.dnum(); ++j) groups[0].push_back(j);
    const int L = p.num_q_towers();
    const int D = L + p.num_p_towers();
    const int d = p.dnum();
    u64 beta_total = 0;
    for (int j = 0; j < d; ++j) beta_total += p.beta(j);
    // full ModUp working set: inputs, INTT outputs, conversions, partials,
    // running sums, plus streamed key towers for one pointwise stage
    u64 ws = 2ull * L + beta_total + (u64)2 * d * D + 2ull * D;
    if (evk == EvkMode::Streamed) ws += (u64)2 * d * D;
    const bool unbounded = onchip_capacity_bytes == 0;
    const bool fits = unbounded || onchip_capacity_bytes / p.tower_bytes() >= ws;
    return detail::build_grouped(p, Dataflow::MP, onchip_capacity_bytes, evk, groups,
                                 /*unfused_reduce=*/fits);
}

// Digit-Centric: all of P1..P5 completes for one digit before the next digit
// is touched; the ModUp_P5 running sums absorb each digit's products. A
// single digit collapses the distinction, so dnum = 1 shares the MP graph.
inline TaskGraph build_dc(const HksParams& p, u64 onchip_capacity_bytes, EvkMode evk) {
    if (p.dnum() == 1) {
        TaskGraph g = build_mp(p, onchip_capacity_bytes, evk);
        g.dataflow = Dataflow::DC;
        return g;
    }
    std::vector<std::vector<int>> groups;
    for (int j = 0; j < p.dnum(); ++j) groups.push_back({j});
    return detail::build_grouped(p, Dataflow::DC, onchip_capacity_bytes, evk, groups,
                                 /*unfused_reduce=*/false);
}

// Output-Centric: output towers are produced one at a time. Digits whose
// INTT outputs fit on-chip contribute in one final pass; earlier passes
// precompute and store the extension towers of the remaining digits.
inline TaskGraph build_oc(const HksParams& p, u64 onchip_capacity_bytes, EvkMode evk) {
    detail::Assembler a(p, Dataflow::OC, onchip_capacity_bytes, evk, /*schedule_margin_bytes=*/1ull << 20);
    detail::PipelineBuffers pb = detail::make_common_buffers(a, p);
    const int L = p.num_q_towers();
    const int K = p.num_p_towers();
    const int D = L + K;
    const int d = p.dnum();
    const u64 n = p.n();
    const u64 bf = detail::butterfly_ops(p);

    const u64 cap_t = onchip_capacity_bytes == 0 ? std::numeric_limits<u64>::max() / 2
                                                 : onchip_capacity_bytes / p.tower_bytes();
    const u64 reserve_final = 4;
    const u64 reserve_pass = 3;

    // pack digits into passes; the final pass holds the trailing digits that
    // fit alongside the per-tower working buffers
    std::vector<std::vector<int>> passes;
    std::vector<int> final_pass;
    {
        u64 total_alpha = 0;
        for (int j = 0; j < d; ++j) total_alpha += p.digit_size(j);
        if (total_alpha + reserve_final <= cap_t) {
            for (int j = 0; j < d; ++j) final_pass.push_back(j);
        } else {
            final_pass.push_back(d - 1);
            if ((u64)p.digit_size(d - 1) + reserve_final > cap_t)
                throw InfeasibleScheduleError("digit does not fit on-chip for the output-centric schedule");
            std::vector<int> cur;
            u64 cur_sz = 0;
            for (int j = 0; j < d - 1; ++j) {
                const u64 sz = p.digit_size(j);
                if (cur_sz + sz + reserve_pass > cap_t && !cur.empty()) {
                    passes.push_back(cur);
                    cur.clear();
                    cur_sz = 0;
                }
                if (sz + reserve_pass > cap_t)
                    throw InfeasibleScheduleError("digit does not fit on-chip for the output-centric schedule");
                cur.push_back(j);
                cur_sz += sz;
            }
            if (!cur.empty()) passes.push_back(cur);
        }
    }

    std::vector<std::vector<int>> intt(d);
    auto in_digit = [&](int j, int t) {
        auto [ds, de] = p.digit_bounds(j);
        return t >= ds && t < de;
    };

    a.begin_stage("modup_p1");
    for (int j = 0; j < d; ++j) {
        auto [ds, de] = p.digit_bounds(j);
        for (int t = ds; t < de; ++t) {
            int b = a.fresh_buffer();
            intt[j].push_back(b);
            a.step(Kernel::INTT, bf, {pb.c1[t]}, {b});
        }
    }

    // Earlier passes: P-basis output towers (needed by every digit) are
    // applied to the key immediately and carried as partial sums. With a
    // single earlier pass the Q-basis extension towers are stored and
    // combined at the end; with several passes holding multiple stored
    // generations would crowd the final pass, so Q towers carry partial
    // sums as well.
    const bool carry_q_partials = passes.size() >= 2;
    std::vector<std::vector<int>> ext(d, std::vector<int>(D, -1));
    std::vector<char> acc_written(2 * D, 0);
    std::vector<char> applied((std::size_t)d * D, 0);
    auto apply_key = [&](int j, int t, int operand) {
        applied[(std::size_t)j * D + t] = 1;
        for (int h = 0; h < 2; ++h) {
            int accb = pb.acc[h * D + t];
            std::vector<int> ins = {operand};
            auto e = detail::evk_operand(pb, p, j, h, t);
            ins.insert(ins.end(), e.begin(), e.end());
            if (!acc_written[h * D + t]) {
                a.step(Kernel::PointMul, n, ins, {accb});
                acc_written[h * D + t] = 1;
            } else {
                ins.push_back(accb);
                a.step(Kernel::PointMul, 2 * n, ins, {accb});
            }
        }
    };
    for (std::size_t pi = 0; pi < passes.size(); ++pi) {
        for (int t = 0; t < D; ++t) {
            a.begin_stage("oc_ext_p" + std::to_string(pi) + "_t" + std::to_string(t));
            for (int j : passes[pi]) {
                if (t < L && in_digit(j, t)) continue;  // bypass handled at the final pass
                int b = a.fresh_buffer();
                a.step(Kernel::BConvPartial, 2 * n * p.digit_size(j), intt[j], {b});
                a.step(Kernel::NTT, bf, {b}, {b});
                if (t < L && !carry_q_partials) {
                    ext[j][t] = b;  // stored, reused by the final pass
                } else {
                    apply_key(j, t, b);  // partial sum accumulates across passes
                }
            }
        }
    }

    // final pass: per output tower, remaining conversions plus the pointwise
    // key product accumulated into the running sums
    for (int t = 0; t < D; ++t) {
        a.begin_stage("oc_main_t" + std::to_string(t));
        for (int j : final_pass) {
            if (t < L && in_digit(j, t)) continue;
            int b = a.fresh_buffer();
            ext[j][t] = b;
            a.step(Kernel::BConvPartial, 2 * n * p.digit_size(j), intt[j], {b});
            a.step(Kernel::NTT, bf, {b}, {b});
        }
        for (int h = 0; h < 2; ++h) {
            for (int j = 0; j < d; ++j) {
                if (applied[(std::size_t)j * D + t]) continue;  // carried from an earlier pass
                int operand = (t < L && in_digit(j, t)) ? pb.c1[t] : ext[j][t];
                if (operand < 0) continue;  // contribution already carried
                int accb = pb.acc[h * D + t];
                std::vector<int> ins = {operand};
                auto e = detail::evk_operand(pb, p, j, h, t);
                ins.insert(ins.end(), e.begin(), e.end());
                if (!acc_written[h * D + t]) {
                    a.step(Kernel::PointMul, n, ins, {accb});
                    acc_written[h * D + t] = 1;
                } else {
                    ins.push_back(accb);
                    a.step(Kernel::PointMul, 2 * n, ins, {accb});
                }
            }
        }
    }

    // ModDown, fused per output tower and processed one half at a time;
    // [P]_C towers were just produced and stay on-chip when capacity permits
    for (int h = 0; h < 2; ++h) {
        a.begin_stage("moddown_p1_h" + std::to_string(h));
        std::vector<int> src;
        for (int k = 0; k < K; ++k) {
            int b = pb.acc[h * D + L + k];
            a.step(Kernel::INTT, bf, {b}, {b});
            src.push_back(b);
        }
        for (int t = 0; t < L; ++t) {
            a.begin_stage("oc_md_h" + std::to_string(h) + "_t" + std::to_string(t));
            int cv = a.fresh_buffer();
            a.step(Kernel::BConvPartial, 2 * n * K, src, {cv});
            a.step(Kernel::NTT, bf, {cv}, {cv});
            a.step(Kernel::ScaleSub, 2 * n, {pb.acc[h * D + t], cv}, {pb.out[h * L + t]});
        }
    }
    return a.schedule();
}

inline TaskGraph build_graph(const HksParams& p, Dataflow df, u64 onchip_capacity_bytes, EvkMode evk) {
    switch (df) {
        case Dataflow::MP: return build_mp(p, onchip_capacity_bytes, evk);
        case Dataflow::DC: return build_dc(p, onchip_capacity_bytes, evk);
        case Dataflow::OC: return build_oc(p, onchip_capacity_bytes, evk);
    }
    throw std::invalid_argument("unknown dataflow");
}

}  // namespace hksim
