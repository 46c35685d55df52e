// Copyright (C) 2026 The hksim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "hksim/params.hpp"
#include "hksim/rns.hpp"

namespace hksim {

// Ternary secret over the D basis, evaluation domain. signed_coeffs keeps
// the {-1,0,1} view for the verifier.
struct SecretKey {
    RnsPolynomial s;                 // lifted, evaluation domain
    std::vector<int> signed_coeffs;  // length N, entries in {-1,0,1}
};

// dnum pairs (k0, k1) over the full D basis, evaluation domain.
struct EvaluationKey {
    std::vector<std::array<RnsPolynomial, 2>> digits;

    u64 element_count() const {
        u64 c = 0;
        for (const auto& d : digits) c += d[0].num_towers() * d[0].n() + d[1].num_towers() * d[1].n();
        return c;
    }
    u64 byte_size() const { return element_count() * HksParams::bytes_per_word; }
};

namespace detail {

// Discrete centered error with sigma = 3.2, truncated at +-19, sampled by
// inverse CDF so draws are integer-deterministic for a given engine state.
inline int sample_centered_error(std::mt19937_64& rng, double sigma) {
    constexpr int kTail = 19;
    static thread_local double cached_sigma = -1.0;
    static thread_local std::vector<double> cdf;
    if (cached_sigma != sigma) {
        cdf.clear();
        double total = 0;
        std::vector<double> w;
        for (int x = -kTail; x <= kTail; ++x) {
            double p = std::exp(-0.5 * (double)x * x / (sigma * sigma));
            w.push_back(p);
            total += p;
        }
        double acc = 0;
        for (double p : w) {
            acc += p / total;
            cdf.push_back(acc);
        }
        cached_sigma = sigma;
    }
    const double u = (double)(rng() >> 11) * 0x1.0p-53;
    for (int i = 0; i < (int)cdf.size(); ++i)
        if (u < cdf[i]) return i - kTail;
    return kTail;
}

inline RnsPolynomial lift_signed(const std::vector<int>& coeffs, int degree_log2,
                                 std::span<const Modulus> basis, Domain target) {
    RnsPolynomial p = RnsPolynomial::zero(degree_log2, basis, Domain::Coefficient);
    for (std::size_t t = 0; t < p.num_towers(); ++t) {
        const u64 q = p.tower(t).mod.value();
        auto& v = p.tower(t).coeffs;
        for (std::size_t i = 0; i < coeffs.size(); ++i) {
            int c = coeffs[i];
            v[i] = c >= 0 ? (u64)c % q : q - ((u64)(-c) % q);
        }
    }
    if (target == Domain::Evaluation) p.to_ntt();
    return p;
}

}  // namespace detail

inline SecretKey sample_secret(const HksParams& params, std::mt19937_64& rng) {
    SecretKey sk;
    sk.signed_coeffs.resize(params.n());
    for (auto& c : sk.signed_coeffs) c = (int)(rng() % 3) - 1;
    auto d = params.d_basis();
    sk.s = detail::lift_signed(sk.signed_coeffs, params.degree_log2(), d, Domain::Evaluation);
    return sk;
}

inline RnsPolynomial sample_uniform(const HksParams& params, std::span<const Modulus> basis, Domain dom,
                                    std::mt19937_64& rng) {
    RnsPolynomial p = RnsPolynomial::zero(params.degree_log2(), basis, dom);
    for (std::size_t t = 0; t < p.num_towers(); ++t) {
        const u64 q = p.tower(t).mod.value();
        for (auto& c : p.tower(t).coeffs) c = rng() % q;
    }
    return p;
}

// Hybrid-gadget key generation: for each digit j,
//   k0_j = -k1_j * s_dst + e_j + P * g_j * s_src   over the D basis,
// with k1_j uniform and g_j the CRT selector of digit j's towers (residue 1
// inside the digit, 0 on other q towers, and P * g_j = 0 on the p towers).
// sigma < 0 forces e = 0 (noiseless keys for verification).
inline EvaluationKey keygen(const HksParams& params, const SecretKey& s_src, const SecretKey& s_dst,
                            u64 rng_seed, double sigma = 3.2) {
    if (s_src.s.num_towers() != s_dst.s.num_towers() ||
        s_src.s.num_towers() != (std::size_t)(params.num_q_towers() + params.num_p_towers()))
        throw std::invalid_argument("keygen: secret keys must live on the full D basis");
    std::mt19937_64 rng(rng_seed);
    auto d_basis = params.d_basis();

    // [P]_{q_i} for every q tower.
    std::vector<u64> p_mod_q(params.num_q_towers());
    for (int i = 0; i < params.num_q_towers(); ++i) {
        const u64 qi = params.q_chain()[i].value();
        u64 prod = 1;
        for (const auto& pm : params.p_chain()) prod = mul_mod(prod, pm.value() % qi, qi);
        p_mod_q[i] = prod;
    }

    EvaluationKey evk;
    evk.digits.resize(params.dnum());
    for (int j = 0; j < params.dnum(); ++j) {
        RnsPolynomial k1 = sample_uniform(params, d_basis, Domain::Evaluation, rng);

        std::vector<int> e_coeffs(params.n(), 0);
        if (sigma > 0)
            for (auto& c : e_coeffs) c = detail::sample_centered_error(rng, sigma);
        RnsPolynomial e = detail::lift_signed(e_coeffs, params.degree_log2(), d_basis, Domain::Evaluation);

        RnsPolynomial k0 = RnsPolynomial::zero(params.degree_log2(), d_basis, Domain::Evaluation);
        auto [ds, de] = params.digit_bounds(j);
        for (std::size_t t = 0; t < k0.num_towers(); ++t) {
            const u64 q = k0.tower(t).mod.value();
            const bool in_digit = (int)t >= ds && (int)t < de;
            const u64 scale = in_digit ? p_mod_q[t] : 0;  // p towers: t >= num_q, scale 0
            auto& out = k0.tower(t).coeffs;
            const auto& k1v = k1.tower(t).coeffs;
            const auto& sv = s_dst.s.tower(t).coeffs;
            const auto& srcv = s_src.s.tower(t).coeffs;
            const auto& ev = e.tower(t).coeffs;
            for (std::size_t c = 0; c < out.size(); ++c) {
                u64 v = sub_mod(ev[c], mul_mod(k1v[c], sv[c], q), q);
                if (scale) v = add_mod(v, mul_mod(scale, srcv[c], q), q);
                out[c] = v;
            }
        }
        evk.digits[j] = {std::move(k0), std::move(k1)};
    }
    return evk;
}

// --- pipeline stages -------------------------------------------------------

// Restriction of c to digit j's tower range; no arithmetic.
inline std::vector<RnsPolynomial> digit_decompose(const RnsPolynomial& c, const HksParams& params) {
    if ((int)c.num_towers() != params.num_q_towers())
        throw std::invalid_argument("digit_decompose: expected the full q basis");
    std::vector<RnsPolynomial> digits;
    digits.reserve(params.dnum());
    for (int j = 0; j < params.dnum(); ++j) {
        auto [s, e] = params.digit_bounds(j);
        RnsPolynomial d(c.degree_log2(), c.domain());
        for (int t = s; t < e; ++t) d.append_tower(c.tower(t));
        digits.push_back(std::move(d));
    }
    return digits;
}

// INTT -> bconv (alpha_j -> beta_j) -> NTT, then concatenation with the
// original digit towers in canonical D order.
inline RnsPolynomial modup(const RnsPolynomial& digit, int j, const HksParams& params) {
    if (digit.domain() != Domain::Evaluation) throw std::invalid_argument("modup: digit must be in evaluation domain");
    RnsPolynomial coeff = digit;
    coeff.to_intt();
    BasisTable table(params.digit_basis(j), params.digit_target_basis(j));
    RnsPolynomial converted = bconv(coeff, table);
    converted.to_ntt();

    auto [ds, de] = params.digit_bounds(j);
    RnsPolynomial out(digit.degree_log2(), Domain::Evaluation);
    std::size_t conv_idx = 0;
    for (int t = 0; t < params.num_q_towers(); ++t) {
        if (t >= ds && t < de)
            out.append_tower(digit.tower(t - ds));  // bypass path, bit exact
        else
            out.append_tower(converted.tower(conv_idx++));
    }
    for (int t = 0; t < params.num_p_towers(); ++t) out.append_tower(converted.tower(conv_idx++));
    return out;
}

// Pointwise multiply each extended digit with both evk halves.
inline std::vector<std::array<RnsPolynomial, 2>> apply_evk(const std::vector<RnsPolynomial>& extended,
                                                           const EvaluationKey& evk) {
    if (extended.size() != evk.digits.size()) throw std::invalid_argument("apply_evk: digit count mismatch");
    std::vector<std::array<RnsPolynomial, 2>> out(extended.size());
    for (std::size_t j = 0; j < extended.size(); ++j) {
        for (int h = 0; h < 2; ++h) {
            RnsPolynomial prod = extended[j];
            poly_mul_pointwise_inplace(prod, evk.digits[j][h]);
            out[j][h] = std::move(prod);
        }
    }
    return out;
}

// Tower-wise sum across digits; identity for dnum = 1.
inline std::array<RnsPolynomial, 2> modup_reduce(const std::vector<std::array<RnsPolynomial, 2>>& partials) {
    if (partials.empty()) throw std::invalid_argument("modup_reduce: no partials");
    std::array<RnsPolynomial, 2> acc = partials[0];
    for (std::size_t j = 1; j < partials.size(); ++j) {
        poly_add_inplace(acc[0], partials[j][0]);
        poly_add_inplace(acc[1], partials[j][1]);
    }
    return acc;
}

// Split off the K towers of [c]_C, INTT, bconv K -> num_q, NTT, and compute
// P^-1 * ([c]_B - converted) tower-wise. Output over B, evaluation domain.
inline RnsPolynomial moddown(const RnsPolynomial& c, const HksParams& params) {
    const int nq = params.num_q_towers();
    const int np = params.num_p_towers();
    if ((int)c.num_towers() != nq + np) throw std::invalid_argument("moddown: expected the full D basis");
    if (c.domain() != Domain::Evaluation) throw std::invalid_argument("moddown: input must be in evaluation domain");

    RnsPolynomial c_part(c.degree_log2(), Domain::Evaluation);
    for (int t = 0; t < np; ++t) c_part.append_tower(c.tower(nq + t));
    c_part.to_intt();
    BasisTable table(params.p_chain(), params.q_chain());
    RnsPolynomial conv = bconv(c_part, table);
    conv.to_ntt();

    RnsPolynomial out(c.degree_log2(), Domain::Evaluation);
    u64 muls = 0, adds = 0;
    for (int t = 0; t < nq; ++t) {
        const u64 q = params.q_chain()[t].value();
        u64 p_inv = 1;
        for (const auto& pm : params.p_chain()) p_inv = mul_mod(p_inv, pm.value() % q, q);
        p_inv = inv_mod(p_inv, q);
        Tower tw{params.q_chain()[t], std::vector<u64>(params.n())};
        const auto& bv = c.tower(t).coeffs;
        const auto& cv = conv.tower(t).coeffs;
        for (std::size_t i = 0; i < tw.coeffs.size(); ++i)
            tw.coeffs[i] = mul_mod(sub_mod(bv[i], cv[i], q), p_inv, q);
        muls += tw.coeffs.size();
        adds += tw.coeffs.size();
        out.append_tower(std::move(tw));
    }
    op_counter().mul += muls;
    op_counter().add += adds;
    return out;
}

// Full pipeline applied to the c1 half of a ciphertext: returns (d0, d1)
// over B with d0 + d1 * s_dst ~= c1 * s_src (mod Q).
inline std::array<RnsPolynomial, 2> hybrid_key_switch(const RnsPolynomial& c1, const EvaluationKey& evk,
                                                      const HksParams& params) {
    auto digits = digit_decompose(c1, params);
    std::vector<RnsPolynomial> extended;
    extended.reserve(digits.size());
    for (int j = 0; j < params.dnum(); ++j) extended.push_back(modup(digits[j], j, params));
    auto partials = apply_evk(extended, evk);
    auto acc = modup_reduce(partials);
    return {moddown(acc[0], params), moddown(acc[1], params)};
}

// --- closed-form operation counts ------------------------------------------

struct StageOps {
    u64 mul = 0;
    u64 add = 0;
    u64 total() const { return mul + add; }
};

struct OpCounts {
    StageOps modup_p1, modup_p2, modup_p3, modup_p4, modup_p5;
    StageOps moddown_p1, moddown_p2, moddown_p3, moddown_p4;
    StageOps total;
};

// Deterministic per-stage counts, identical for all dataflows. NTT/INTT are
// (N/2) log2 N butterflies, one mul and two adds each; bconv is N*alpha*beta
// muls and as many adds; pointwise stages as written.
inline OpCounts count_ops(const HksParams& params) {
    const u64 n = params.n();
    const u64 logn = params.degree_log2();
    const u64 bf = n / 2 * logn;  // butterflies per tower
    const int nq = params.num_q_towers();
    const int np = params.num_p_towers();
    const int d = params.dnum();

    auto transform = [&](u64 towers) { return StageOps{towers * bf, 2 * towers * bf}; };

    OpCounts oc;
    oc.modup_p1 = transform(nq);
    u64 conv = 0;
    for (int j = 0; j < d; ++j) conv += (u64)params.digit_size(j) * params.beta(j);
    oc.modup_p2 = StageOps{n * conv, n * conv};
    u64 beta_total = 0;
    for (int j = 0; j < d; ++j) beta_total += params.beta(j);
    oc.modup_p3 = transform(beta_total);
    oc.modup_p4 = StageOps{(u64)d * 2 * (nq + np) * n, 0};
    oc.modup_p5 = StageOps{0, (u64)(d - 1) * 2 * (nq + np) * n};
    oc.moddown_p1 = transform(2 * (u64)np);
    oc.moddown_p2 = StageOps{2 * n * (u64)np * nq, 2 * n * (u64)np * nq};
    oc.moddown_p3 = transform(2 * (u64)nq);
    oc.moddown_p4 = StageOps{2 * (u64)nq * n, 2 * (u64)nq * n};

    for (const StageOps* s : {&oc.modup_p1, &oc.modup_p2, &oc.modup_p3, &oc.modup_p4, &oc.modup_p5,
                              &oc.moddown_p1, &oc.moddown_p2, &oc.moddown_p3, &oc.moddown_p4}) {
        oc.total.mul += s->mul;
        oc.total.add += s->add;
    }
    return oc;
}

}  // namespace hksim
