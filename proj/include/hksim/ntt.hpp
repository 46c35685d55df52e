// Copyright (C) 2026 The hksim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>

#include "hksim/modular.hpp"

namespace hksim {

// Negacyclic Cooley-Tukey NTT, natural order in, bit-reversed order out.
// Evaluation at the odd powers of the 2N-th root of unity, so pointwise
// products correspond to multiplication mod X^N + 1.
inline void ntt_forward(std::span<u64> a, const Modulus& mod) {
    const u64 q = mod.value();
    const std::size_t n = a.size();
    const auto& tw = mod.fwd_tw();
    const auto& tws = mod.fwd_tw_shoup();
    u64 muls = 0;
    std::size_t t = n;
    for (std::size_t m = 1; m < n; m <<= 1) {
        t >>= 1;
        for (std::size_t i = 0; i < m; ++i) {
            const u64 w = tw[m + i];
            const u64 ws = tws[m + i];
            const std::size_t j1 = 2 * i * t;
            for (std::size_t j = j1; j < j1 + t; ++j) {
                const u64 u = a[j];
                const u64 v = mul_mod_shoup(a[j + t], w, ws, q);
                a[j] = add_mod(u, v, q);
                a[j + t] = sub_mod(u, v, q);
                ++muls;
            }
        }
    }
    op_counter().mul += muls;
    op_counter().add += 2 * muls;
}

// Gentleman-Sande inverse, bit-reversed in, natural order out. The 1/N
// scaling is fused into the final pass.
inline void ntt_inverse(std::span<u64> a, const Modulus& mod) {
    const u64 q = mod.value();
    const std::size_t n = a.size();
    const auto& tw = mod.inv_tw();
    const auto& tws = mod.inv_tw_shoup();
    u64 muls = 0;
    std::size_t t = 1;
    for (std::size_t m = n; m > 1; m >>= 1) {
        const std::size_t h = m >> 1;
        std::size_t j1 = 0;
        for (std::size_t i = 0; i < h; ++i) {
            const u64 w = tw[h + i];
            const u64 ws = tws[h + i];
            for (std::size_t j = j1; j < j1 + t; ++j) {
                const u64 u = a[j];
                const u64 v = a[j + t];
                a[j] = add_mod(u, v, q);
                a[j + t] = mul_mod_shoup(sub_mod(u, v, q), w, ws, q);
                ++muls;
            }
            j1 += 2 * t;
        }
        t <<= 1;
    }
    const u64 ninv = mod.n_inv();
    const u64 ninvs = mod.n_inv_shoup();
    for (std::size_t j = 0; j < n; ++j) a[j] = mul_mod_shoup(a[j], ninv, ninvs, q);
    op_counter().mul += muls;
    op_counter().add += 2 * muls;
}

}  // namespace hksim
