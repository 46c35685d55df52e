// Copyright (C) 2026 The hksim Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>
#include <random>

#include "hksim/rns.hpp"
#include "hksim/verify.hpp"

using namespace hksim;

namespace {

RnsPolynomial encode_bigints(const std::vector<bigint>& values, int degree_log2,
                             std::span<const Modulus> basis) {
    RnsPolynomial p = RnsPolynomial::zero(degree_log2, basis, Domain::Coefficient);
    bigint prod = basis_product(basis);
    for (std::size_t t = 0; t < basis.size(); ++t) {
        const u64 q = basis[t].value();
        for (std::size_t i = 0; i < values.size(); ++i) {
            bigint v = values[i] % prod;
            if (v < 0) v += prod;
            p.tower(t).coeffs[i] = static_cast<u64>(v % q);
        }
    }
    return p;
}

}  // namespace

TEST_CASE("basis table invariants") {
    auto mods = generate_moduli(3, 7);
    std::vector<Modulus> src(mods.begin(), mods.begin() + 3);
    std::vector<Modulus> dst(mods.begin() + 3, mods.end());
    BasisTable t(src, dst);
    for (std::size_t i = 0; i < src.size(); ++i) {
        const u64 qi = src[i].value();
        u64 qhat = 1;
        for (std::size_t k = 0; k < src.size(); ++k)
            if (k != i) qhat = mul_mod(qhat, src[k].value() % qi, qi);
        CHECK(mul_mod(t.qhat_inv(i), qhat, qi) == 1);
        for (std::size_t j = 0; j < dst.size(); ++j) {
            const u64 pj = dst[j].value();
            u64 qhat_pj = 1;
            for (std::size_t k = 0; k < src.size(); ++k)
                if (k != i) qhat_pj = mul_mod(qhat_pj, src[k].value() % pj, pj);
            CHECK(t.qhat_mod_target(i, j) == qhat_pj);
        }
    }
}

TEST_CASE("bconv maps zero to zero") {
    auto mods = generate_moduli(3, 7);
    std::vector<Modulus> src(mods.begin(), mods.begin() + 3);
    std::vector<Modulus> dst(mods.begin() + 3, mods.end());
    RnsPolynomial z = RnsPolynomial::zero(3, src, Domain::Coefficient);
    auto out = bconv(z, BasisTable(src, dst));
    for (std::size_t t = 0; t < out.num_towers(); ++t)
        for (u64 c : out.tower(t).coeffs) CHECK(c == 0);
}

// Big-integer CRT oracle at N=8, alpha=3, beta=4: the output value differs
// from the input by k * Q_source with |k| <= alpha/2.
TEST_CASE("bconv error is a small multiple of the source product") {
    std::mt19937_64 rng(17);
    auto mods = generate_moduli(3, 7);
    std::vector<Modulus> src(mods.begin(), mods.begin() + 3);
    std::vector<Modulus> dst(mods.begin() + 3, mods.end());
    BasisTable table(src, dst);
    bigint qsrc = basis_product(src);
    bigint qdst = basis_product(dst);

    for (int rep = 0; rep < 50; ++rep) {
        std::vector<bigint> values(8);
        for (auto& v : values) {
            // |v| < Q_source / 2, represented exactly
            bigint r = 0;
            for (int w = 0; w < 4; ++w) r = (r << 64) | rng();
            v = r % (qsrc / 2);
            if (rng() & 1) v = -v;
        }
        RnsPolynomial p = encode_bigints(values, 3, src);
        RnsPolynomial out = bconv(p, table);
        for (std::size_t i = 0; i < values.size(); ++i) {
            std::vector<u64> res(dst.size());
            for (std::size_t t = 0; t < dst.size(); ++t) res[t] = out.tower(t).coeffs[i];
            bigint got = crt_reconstruct(res, dst);
            // got = (v mod qsrc) + k*qsrc (mod qdst) for unsigned v rep
            bigint vpos = values[i] % qsrc;
            if (vpos < 0) vpos += qsrc;
            bigint diff = (got - vpos) % qdst;
            if (diff < 0) diff += qdst;
            REQUIRE(diff % qsrc == 0);
            bigint k = diff / qsrc;
            if (k > qdst / qsrc / 2) k -= qdst / qsrc;  // centered multiple
            REQUIRE(abs(k) <= bigint(src.size()) / 2 + 1);
        }
    }
}

TEST_CASE("bconv charges exactly N*alpha*beta multiplications") {
    auto mods = generate_moduli(17, 4);
    std::vector<Modulus> src(mods.begin(), mods.begin() + 2);
    std::vector<Modulus> dst(mods.begin() + 2, mods.end());
    RnsPolynomial z = RnsPolynomial::zero(17, src, Domain::Coefficient);
    op_counter().reset();
    bconv(z, BasisTable(src, dst));
    CHECK(op_counter().mul == (1ull << 17) * 2 * 2);
    CHECK(op_counter().add == (1ull << 17) * 2 * 2);
    op_counter().reset();
}

TEST_CASE("domain flag flips only through transforms") {
    auto mods = generate_moduli(4, 2);
    RnsPolynomial p = RnsPolynomial::zero(4, mods, Domain::Coefficient);
    CHECK(p.domain() == Domain::Coefficient);
    p.to_ntt();
    CHECK(p.domain() == Domain::Evaluation);
    CHECK_THROWS_AS(p.to_ntt(), std::logic_error);
    p.to_intt();
    CHECK(p.domain() == Domain::Coefficient);
    CHECK_THROWS_AS(p.to_intt(), std::logic_error);
}

TEST_CASE("bconv rejects basis mismatch") {
    auto mods = generate_moduli(3, 7);
    std::vector<Modulus> src(mods.begin(), mods.begin() + 3);
    std::vector<Modulus> dst(mods.begin() + 3, mods.end());
    BasisTable table(src, dst);
    RnsPolynomial wrong = RnsPolynomial::zero(3, dst, Domain::Coefficient);
    CHECK_THROWS_AS(bconv(wrong, table), std::invalid_argument);
    RnsPolynomial eval = RnsPolynomial::zero(3, src, Domain::Coefficient);
    eval.to_ntt();
    CHECK_THROWS_AS(bconv(eval, table), std::invalid_argument);
}
