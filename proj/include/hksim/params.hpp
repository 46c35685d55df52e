// Copyright (C) 2026 The hksim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hksim/modular.hpp"
#include "hksim/rns.hpp"

namespace hksim {

// Parameter bundle for one hybrid key-switching instance. The q-chain
// holds the num_q_towers ciphertext primes, the p-chain the K auxiliary
// primes; digits partition the q towers into dnum contiguous ranges, the
// last of which may be smaller.
class HksParams {
public:
    HksParams() = default;

    HksParams(int degree_log2, int num_q_towers, int num_p_towers, int dnum)
        : degree_log2_(degree_log2), num_q_(num_q_towers), num_p_(num_p_towers), dnum_(dnum) {
        if (num_q_towers <= 0 || num_p_towers <= 0 || dnum <= 0 || dnum > num_q_towers)
            throw std::invalid_argument("invalid tower/digit configuration");
        alpha_ = (num_q_ + dnum_ - 1) / dnum_;
        auto moduli = generate_moduli(degree_log2_, static_cast<std::size_t>(num_q_ + num_p_));
        q_chain_.assign(moduli.begin(), moduli.begin() + num_q_);
        p_chain_.assign(moduli.begin() + num_q_, moduli.end());
        for (int j = 0; j < dnum_; ++j) {
            int start = j * alpha_;
            int end = std::min(num_q_, start + alpha_);
            digit_bounds_.emplace_back(start, end);
        }
        if (digit_bounds_.back().second != num_q_) throw std::logic_error("digits do not partition the q chain");
    }

    int degree_log2() const { return degree_log2_; }
    std::size_t n() const { return 1ull << degree_log2_; }
    int num_q_towers() const { return num_q_; }
    int num_p_towers() const { return num_p_; }
    int dnum() const { return dnum_; }
    int alpha() const { return alpha_; }

    const std::vector<Modulus>& q_chain() const { return q_chain_; }
    const std::vector<Modulus>& p_chain() const { return p_chain_; }

    std::pair<int, int> digit_bounds(int j) const { return digit_bounds_[j]; }
    int digit_size(int j) const { return digit_bounds_[j].second - digit_bounds_[j].first; }
    // beta for digit j: number of towers the digit is extended by.
    int beta(int j) const { return num_q_ + num_p_ - digit_size(j); }

    // Full D = B u C basis in canonical order (q towers then p towers).
    std::vector<Modulus> d_basis() const {
        std::vector<Modulus> d = q_chain_;
        d.insert(d.end(), p_chain_.begin(), p_chain_.end());
        return d;
    }

    // Source basis of digit j.
    std::vector<Modulus> digit_basis(int j) const {
        auto [s, e] = digit_bounds_[j];
        return std::vector<Modulus>(q_chain_.begin() + s, q_chain_.begin() + e);
    }

    // Target basis of digit j's ModUp conversion: all q towers outside the
    // digit, then the p towers, in canonical D order.
    std::vector<Modulus> digit_target_basis(int j) const {
        auto [s, e] = digit_bounds_[j];
        std::vector<Modulus> t;
        t.reserve(static_cast<std::size_t>(beta(j)));
        for (int i = 0; i < num_q_; ++i)
            if (i < s || i >= e) t.push_back(q_chain_[i]);
        t.insert(t.end(), p_chain_.begin(), p_chain_.end());
        return t;
    }

    // 8 bytes per residue word for all size accounting.
    static constexpr u64 bytes_per_word = 8;
    u64 tower_bytes() const { return bytes_per_word * n(); }
    u64 evk_bytes() const { return static_cast<u64>(dnum_) * 2 * n() * (num_q_ + num_p_) * bytes_per_word; }

private:
    int degree_log2_ = 0;
    int num_q_ = 0;
    int num_p_ = 0;
    int dnum_ = 0;
    int alpha_ = 0;
    std::vector<Modulus> q_chain_, p_chain_;
    std::vector<std::pair<int, int>> digit_bounds_;
};

}  // namespace hksim
