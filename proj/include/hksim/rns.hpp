// Copyright (C) 2026 The hksim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cassert>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "hksim/modular.hpp"
#include "hksim/ntt.hpp"

namespace hksim {

enum class Domain { Coefficient, Evaluation };

struct Tower {
    Modulus mod;
    std::vector<u64> coeffs;  // length N, each < mod.value()
};

// An RNS polynomial: one residue vector of length N per tower modulus.
// The domain flag is flipped only by to_ntt/to_intt.
class RnsPolynomial {
public:
    RnsPolynomial() = default;
    RnsPolynomial(int degree_log2, Domain d) : degree_log2_(degree_log2), domain_(d) {}

    static RnsPolynomial zero(int degree_log2, std::span<const Modulus> moduli, Domain d) {
        RnsPolynomial p(degree_log2, d);
        const std::size_t n = 1ull << degree_log2;
        p.towers_.reserve(moduli.size());
        for (const auto& m : moduli) p.towers_.push_back(Tower{m, std::vector<u64>(n, 0)});
        return p;
    }

    int degree_log2() const { return degree_log2_; }
    std::size_t n() const { return 1ull << degree_log2_; }
    Domain domain() const { return domain_; }
    std::size_t num_towers() const { return towers_.size(); }
    Tower& tower(std::size_t i) { return towers_[i]; }
    const Tower& tower(std::size_t i) const { return towers_[i]; }
    std::vector<Tower>& towers() { return towers_; }
    const std::vector<Tower>& towers() const { return towers_; }

    void append_tower(Tower t) {
        if (!towers_.empty() && t.coeffs.size() != n()) throw std::invalid_argument("tower length mismatch");
        towers_.push_back(std::move(t));
    }

    void to_ntt() {
        if (domain_ != Domain::Coefficient) throw std::logic_error("to_ntt: polynomial already in evaluation domain");
        for (auto& t : towers_) ntt_forward(t.coeffs, t.mod);
        domain_ = Domain::Evaluation;
    }

    void to_intt() {
        if (domain_ != Domain::Evaluation) throw std::logic_error("to_intt: polynomial already in coefficient domain");
        for (auto& t : towers_) ntt_inverse(t.coeffs, t.mod);
        domain_ = Domain::Coefficient;
    }

    bool same_basis(const RnsPolynomial& o) const {
        if (num_towers() != o.num_towers()) return false;
        for (std::size_t i = 0; i < num_towers(); ++i)
            if (towers_[i].mod != o.towers_[i].mod) return false;
        return true;
    }

private:
    int degree_log2_ = 0;
    Domain domain_ = Domain::Coefficient;
    std::vector<Tower> towers_;
};

inline void poly_add_inplace(RnsPolynomial& a, const RnsPolynomial& b) {
    if (!a.same_basis(b) || a.domain() != b.domain()) throw std::invalid_argument("poly_add: basis/domain mismatch");
    u64 adds = 0;
    for (std::size_t t = 0; t < a.num_towers(); ++t) {
        const u64 q = a.tower(t).mod.value();
        auto& x = a.tower(t).coeffs;
        const auto& y = b.tower(t).coeffs;
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = add_mod(x[i], y[i], q);
        adds += x.size();
    }
    op_counter().add += adds;
}

inline void poly_mul_pointwise_inplace(RnsPolynomial& a, const RnsPolynomial& b) {
    if (!a.same_basis(b)) throw std::invalid_argument("pointwise mul: basis mismatch");
    if (a.domain() != Domain::Evaluation || b.domain() != Domain::Evaluation)
        throw std::invalid_argument("pointwise mul: operands must be in evaluation domain");
    u64 muls = 0;
    for (std::size_t t = 0; t < a.num_towers(); ++t) {
        const u64 q = a.tower(t).mod.value();
        auto& x = a.tower(t).coeffs;
        const auto& y = b.tower(t).coeffs;
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = mul_mod(x[i], y[i], q);
        muls += x.size();
    }
    op_counter().mul += muls;
}

// Precomputed constants for the fast (approximate) basis conversion from a
// source prime set to a disjoint target prime set.
class BasisTable {
public:
    BasisTable() = default;

    BasisTable(std::vector<Modulus> source, std::vector<Modulus> target)
        : source_(std::move(source)), target_(std::move(target)) {
        const std::size_t a = source_.size();
        const std::size_t b = target_.size();
        qhat_inv_.resize(a);
        qhat_inv_shoup_.resize(a);
        for (std::size_t i = 0; i < a; ++i) {
            const u64 qi = source_[i].value();
            u64 prod = 1;
            for (std::size_t k = 0; k < a; ++k)
                if (k != i) prod = mul_mod(prod, source_[k].value() % qi, qi);
            qhat_inv_[i] = inv_mod(prod, qi);
            qhat_inv_shoup_[i] = shoup_precompute(qhat_inv_[i], qi);
        }
        qhat_mod_target_.assign(a, std::vector<u64>(b));
        for (std::size_t j = 0; j < b; ++j) {
            const u64 pj = target_[j].value();
            for (std::size_t i = 0; i < a; ++i) {
                u64 prod = 1;
                for (std::size_t k = 0; k < a; ++k)
                    if (k != i) prod = mul_mod(prod, source_[k].value() % pj, pj);
                qhat_mod_target_[i][j] = prod;
            }
        }
    }

    const std::vector<Modulus>& source() const { return source_; }
    const std::vector<Modulus>& target() const { return target_; }
    u64 qhat_inv(std::size_t i) const { return qhat_inv_[i]; }
    u64 qhat_inv_shoup(std::size_t i) const { return qhat_inv_shoup_[i]; }
    u64 qhat_mod_target(std::size_t i, std::size_t j) const { return qhat_mod_target_[i][j]; }

private:
    std::vector<Modulus> source_, target_;
    std::vector<u64> qhat_inv_, qhat_inv_shoup_;
    std::vector<std::vector<u64>> qhat_mod_target_;
};

namespace detail {

// y_j = sum_i [x_i * qhat_inv_i mod q_i] * qhat_ij mod p_j for one target
// tower j. The alpha-term dot product is accumulated in 128 bits; alpha is
// at most 45 and each product is below 2^124/45, so no overflow.
inline std::vector<u64> bconv_target_tower(const std::vector<std::vector<u64>>& scaled,
                                           const BasisTable& table, std::size_t j, std::size_t n) {
    const u64 pj = table.target()[j].value();
    const std::size_t a = scaled.size();
    std::vector<u64> out(n);
    for (std::size_t c = 0; c < n; ++c) {
        u128 acc = 0;
        for (std::size_t i = 0; i < a; ++i) acc += (u128)scaled[i][c] * table.qhat_mod_target(i, j);
        out[c] = static_cast<u64>(acc % pj);
    }
    op_counter().mul += a * n;
    op_counter().add += a * n;
    return out;
}

inline std::vector<std::vector<u64>> bconv_scaled_inputs(const RnsPolynomial& p, const BasisTable& table) {
    const std::size_t a = table.source().size();
    const std::size_t n = p.n();
    std::vector<std::vector<u64>> scaled(a);
    for (std::size_t i = 0; i < a; ++i) {
        const u64 qi = table.source()[i].value();
        const u64 w = table.qhat_inv(i);
        const u64 ws = table.qhat_inv_shoup(i);
        scaled[i].resize(n);
        const auto& src = p.tower(i).coeffs;
        for (std::size_t c = 0; c < n; ++c) scaled[i][c] = mul_mod_shoup(src[c], w, ws, qi);
    }
    return scaled;
}

}  // namespace detail

// Fast approximate basis conversion. The CRT value of the output equals the
// CRT value of the input plus k * (prod of source primes) with |k| <= a/2.
inline RnsPolynomial bconv(const RnsPolynomial& p, const BasisTable& table) {
    if (p.domain() != Domain::Coefficient) throw std::invalid_argument("bconv: input must be in coefficient domain");
    if (p.num_towers() != table.source().size()) throw std::invalid_argument("bconv: basis mismatch");
    for (std::size_t i = 0; i < p.num_towers(); ++i)
        if (p.tower(i).mod != table.source()[i]) throw std::invalid_argument("bconv: basis mismatch");

    const std::size_t n = p.n();
    auto scaled = detail::bconv_scaled_inputs(p, table);
    RnsPolynomial out(p.degree_log2(), Domain::Coefficient);
    for (std::size_t j = 0; j < table.target().size(); ++j)
        out.append_tower(Tower{table.target()[j], detail::bconv_target_tower(scaled, table, j, n)});
    return out;
}

}  // namespace hksim
