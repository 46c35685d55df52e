// Copyright (C) 2026 The hksim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <span>
#include <string>
#include <vector>

#include "hksim/keyswitch.hpp"
#include "hksim/registry.hpp"

namespace hksim {

using bigint = boost::multiprecision::cpp_int;

inline bigint basis_product(std::span<const Modulus> basis) {
    bigint p = 1;
    for (const auto& m : basis) p *= m.value();
    return p;
}

// CRT reconstruction of one coefficient from its residues, result in [0, prod).
inline bigint crt_reconstruct(std::span<const u64> residues, std::span<const Modulus> basis) {
    bigint prod = basis_product(basis);
    bigint acc = 0;
    for (std::size_t i = 0; i < basis.size(); ++i) {
        const u64 qi = basis[i].value();
        bigint qhat = prod / qi;
        u64 qhat_mod = static_cast<u64>(qhat % qi);
        u64 coef = mul_mod(residues[i], inv_mod(qhat_mod, qi), qi);
        acc += qhat * coef;
    }
    return acc % prod;
}

inline bigint to_centered(const bigint& x, const bigint& prod) {
    return x > prod / 2 ? x - prod : x;
}

// Coefficient-wise CRT lift of a full polynomial; input may be in either
// domain (a copy is INTT'd if needed). Returns centered representatives.
inline std::vector<bigint> lift_centered(const RnsPolynomial& p) {
    RnsPolynomial c = p;
    if (c.domain() == Domain::Evaluation) c.to_intt();
    std::vector<Modulus> basis;
    for (const auto& t : c.towers()) basis.push_back(t.mod);
    bigint prod = basis_product(basis);
    std::vector<bigint> out(c.n());
    std::vector<u64> res(basis.size());
    for (std::size_t i = 0; i < c.n(); ++i) {
        for (std::size_t t = 0; t < basis.size(); ++t) res[t] = c.tower(t).coeffs[i];
        out[i] = to_centered(crt_reconstruct(res, basis), prod);
    }
    return out;
}

// Parameter-derived cap on the verification residue.
struct NoiseBound {
    bigint max_abs_coeff;
};

// Rounding-only bound for the verification residue: num_q * (alpha/2 + 1) * q_max.
inline bigint noiseless_bound(const HksParams& params) {
    u64 qmax = 0;
    for (const auto& m : params.q_chain()) qmax = std::max(qmax, m.value());
    return bigint(params.num_q_towers()) * (params.alpha() / 2 + 1) * qmax;
}

// With sigma-noise keys the residue grows by the ModDown-scaled key noise:
// dnum * N * alpha * Qdigit_max * B_e / P plus the conversion slack K + 1,
// where B_e bounds a single error coefficient (truncated at 19 for 3.2).
inline NoiseBound noise_bound(const HksParams& params, double sigma) {
    bigint bound = noiseless_bound(params);
    if (sigma <= 0) return NoiseBound{bound};
    const bigint be = 20;
    bigint qd_max = 0;
    for (int j = 0; j < params.dnum(); ++j) {
        bigint qd = basis_product(params.digit_basis(j));
        if (qd > qd_max) qd_max = qd;
    }
    bigint p = basis_product(params.p_chain());
    bigint noise = bigint(params.dnum()) * params.n() * params.alpha() * qd_max * be;
    bound += noise / p + 1 + params.num_p_towers() + 1;
    return NoiseBound{bound};
}

struct VerifyReport {
    bool pass = false;
    std::string failure_stage;  // empty when pass
    bigint max_residual = 0;
    bigint bound = 0;
};

// Per-digit key identity: k0_j + k1_j * s_dst - P * g_j * s_src must be the
// (small) key noise e_j. Localizes corrupted key material to a digit.
inline VerifyReport verify_evk(const HksParams& params, const EvaluationKey& evk, const SecretKey& s_src,
                               const SecretKey& s_dst, double sigma) {
    VerifyReport rep;
    rep.bound = sigma > 0 ? bigint(20) : bigint(0);
    auto d_basis = params.d_basis();
    bigint dprod = basis_product(d_basis);
    for (int j = 0; j < params.dnum(); ++j) {
        RnsPolynomial r = evk.digits[j][1];
        poly_mul_pointwise_inplace(r, s_dst.s);
        poly_add_inplace(r, evk.digits[j][0]);
        // subtract P * g_j * s_src: towers inside digit j only
        auto [ds, de] = params.digit_bounds(j);
        RnsPolynomial rr = r;
        for (int t = ds; t < de; ++t) {
            const u64 q = params.q_chain()[t].value();
            u64 scale = 1;
            for (const auto& pm : params.p_chain()) scale = mul_mod(scale, pm.value() % q, q);
            auto& v = rr.tower(t).coeffs;
            const auto& sv = s_src.s.tower(t).coeffs;
            for (std::size_t i = 0; i < v.size(); ++i)
                v[i] = sub_mod(v[i], mul_mod(scale, sv[i], q), q);
        }
        auto coeffs = lift_centered(rr);
        bigint worst = 0;
        for (const auto& c : coeffs) worst = std::max(worst, bigint(abs(c)));
        rep.max_residual = std::max(rep.max_residual, worst);
        if (worst > rep.bound) {
            rep.pass = false;
            rep.failure_stage = "evk digit " + std::to_string(j);
            return rep;
        }
    }
    rep.pass = true;
    return rep;
}

// Functional replay of the pipeline in the evaluation order of the given
// dataflow. All three orders must produce bit-identical outputs: modular
// sums are reassociations of the same elementwise operations.
inline std::array<RnsPolynomial, 2> hybrid_key_switch_ordered(const RnsPolynomial& c1,
                                                              const EvaluationKey& evk,
                                                              const HksParams& params, Dataflow df) {
    if (df == Dataflow::MP) return hybrid_key_switch(c1, evk, params);
    auto digits = digit_decompose(c1, params);
    const int D = params.num_q_towers() + params.num_p_towers();
    auto d_basis = params.d_basis();
    std::array<RnsPolynomial, 2> acc = {
        RnsPolynomial::zero(params.degree_log2(), d_basis, Domain::Evaluation),
        RnsPolynomial::zero(params.degree_log2(), d_basis, Domain::Evaluation)};
    if (df == Dataflow::DC) {
        // one digit at a time: extend, apply the key, fold into the sums
        for (int j = 0; j < params.dnum(); ++j) {
            RnsPolynomial ext = modup(digits[j], j, params);
            for (int h = 0; h < 2; ++h) {
                RnsPolynomial prod = ext;
                poly_mul_pointwise_inplace(prod, evk.digits[j][h]);
                poly_add_inplace(acc[h], prod);
            }
        }
    } else {
        // output-tower-major: every output tower accumulates its digit
        // contributions before the next tower is touched
        std::vector<RnsPolynomial> ext;
        for (int j = 0; j < params.dnum(); ++j) ext.push_back(modup(digits[j], j, params));
        for (int t = 0; t < D; ++t) {
            for (int h = 0; h < 2; ++h) {
                auto& out = acc[h].tower(t).coeffs;
                const u64 q = acc[h].tower(t).mod.value();
                for (int j = 0; j < params.dnum(); ++j) {
                    const auto& e = ext[j].tower(t).coeffs;
                    const auto& k = evk.digits[j][h].tower(t).coeffs;
                    for (std::size_t i = 0; i < out.size(); ++i)
                        out[i] = add_mod(out[i], mul_mod(e[i], k[i], q), q);
                }
            }
        }
        op_counter().mul += (u64)params.dnum() * 2 * D * params.n();
        op_counter().add += (u64)params.dnum() * 2 * D * params.n();
    }
    return {moddown(acc[0], params), moddown(acc[1], params)};
}

// Key-switch identity check: || d0 + d1 * s_dst - c1 * s_src ||_inf over Q,
// centered, against the parameter-derived bound.
inline VerifyReport verify_key_switch(const HksParams& params, const RnsPolynomial& c1,
                                      const RnsPolynomial& d0, const RnsPolynomial& d1,
                                      const SecretKey& s_src, const SecretKey& s_dst, double sigma) {
    VerifyReport rep;
    rep.bound = noise_bound(params, sigma).max_abs_coeff;

    // Residue computed pointwise in the evaluation domain over B.
    RnsPolynomial r = d1;
    for (std::size_t t = 0; t < r.num_towers(); ++t) {
        const u64 q = r.tower(t).mod.value();
        auto& v = r.tower(t).coeffs;
        const auto& d0v = d0.tower(t).coeffs;
        const auto& c1v = c1.tower(t).coeffs;
        const auto& src = s_src.s.tower(t).coeffs;
        const auto& dst = s_dst.s.tower(t).coeffs;
        for (std::size_t i = 0; i < v.size(); ++i) {
            u64 lhs = add_mod(d0v[i], mul_mod(v[i], dst[i], q), q);
            v[i] = sub_mod(lhs, mul_mod(c1v[i], src[i], q), q);
        }
    }
    auto coeffs = lift_centered(r);
    for (const auto& c : coeffs) rep.max_residual = std::max(rep.max_residual, bigint(abs(c)));
    rep.pass = rep.max_residual <= rep.bound;
    if (!rep.pass) rep.failure_stage = "key-switch identity";
    return rep;
}

}  // namespace hksim
