// Copyright (C) 2026 The hksim Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>
#include <random>

#include "hksim/modular.hpp"
#include "hksim/ntt.hpp"

using namespace hksim;

// O(N^2) schoolbook negacyclic convolution: c = a * b mod (X^N + 1, q).
static std::vector<u64> negacyclic_oracle(const std::vector<u64>& a, const std::vector<u64>& b, u64 q) {
    const std::size_t n = a.size();
    std::vector<u64> c(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            u64 prod = mul_mod(a[i], b[j], q);
            std::size_t k = i + j;
            if (k < n)
                c[k] = add_mod(c[k], prod, q);
            else
                c[k - n] = sub_mod(c[k - n], prod, q);
        }
    }
    return c;
}

static std::vector<u64> random_poly(std::size_t n, u64 q, std::mt19937_64& rng) {
    std::vector<u64> v(n);
    for (auto& x : v) x = rng() % q;
    return v;
}

TEST_CASE("constant polynomial transforms to constant vector") {
    Modulus m(generate_ntt_primes(4, 1)[0], 4);
    std::vector<u64> a(16, 0);
    a[0] = 1234567;
    ntt_forward(a, m);
    for (u64 x : a) CHECK(x == 1234567);
    ntt_inverse(a, m);
    CHECK(a[0] == 1234567);
    for (std::size_t i = 1; i < 16; ++i) CHECK(a[i] == 0);
}

TEST_CASE("ntt/intt roundtrip is the exact identity") {
    std::mt19937_64 rng(11);
    for (int logn : {4, 10, 12}) {
        Modulus m(generate_ntt_primes(logn, 1)[0], logn);
        auto a = random_poly(1ull << logn, m.value(), rng);
        auto saved = a;
        ntt_forward(a, m);
        ntt_inverse(a, m);
        REQUIRE(a == saved);
    }
}

TEST_CASE("pointwise product in NTT domain equals negacyclic convolution at N=16") {
    std::mt19937_64 rng(99);
    Modulus m(generate_ntt_primes(4, 1)[0], 4);
    const u64 q = m.value();
    for (int rep = 0; rep < 20; ++rep) {
        auto a = random_poly(16, q, rng);
        auto b = random_poly(16, q, rng);
        auto expect = negacyclic_oracle(a, b, q);
        ntt_forward(a, m);
        ntt_forward(b, m);
        std::vector<u64> c(16);
        for (int i = 0; i < 16; ++i) c[i] = mul_mod(a[i], b[i], q);
        ntt_inverse(c, m);
        REQUIRE(c == expect);
    }
}

TEST_CASE("intt is linear") {
    std::mt19937_64 rng(5);
    Modulus m(generate_ntt_primes(10, 1)[0], 10);
    const u64 q = m.value();
    auto x = random_poly(1 << 10, q, rng);
    auto y = random_poly(1 << 10, q, rng);
    std::vector<u64> sum(1 << 10);
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] = add_mod(x[i], y[i], q);
    ntt_inverse(x, m);
    ntt_inverse(y, m);
    ntt_inverse(sum, m);
    for (std::size_t i = 0; i < sum.size(); ++i) REQUIRE(sum[i] == add_mod(x[i], y[i], q));
}

TEST_CASE("transform charges one mul and two adds per butterfly") {
    Modulus m(generate_ntt_primes(10, 1)[0], 10);
    std::mt19937_64 rng(1);
    auto a = random_poly(1 << 10, m.value(), rng);
    op_counter().reset();
    ntt_forward(a, m);
    const u64 butterflies = (1ull << 10) / 2 * 10;
    CHECK(op_counter().mul == butterflies);
    CHECK(op_counter().add == 2 * butterflies);
    op_counter().reset();
    ntt_inverse(a, m);
    CHECK(op_counter().mul == butterflies);
    CHECK(op_counter().add == 2 * butterflies);
    op_counter().reset();
}
