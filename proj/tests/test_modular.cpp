// Copyright (C) 2026 The hksim Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>
#include <random>

#include "hksim/modular.hpp"

using namespace hksim;

// Wide-integer schoolbook oracle: full 128-bit product reduced by repeated
// subtraction-free division, independent of the library's reduction path.
static u64 mulmod_oracle(u64 a, u64 b, u64 m) {
    u128 prod = (u128)a * b;
    return static_cast<u64>(prod - (prod / m) * m);
}

TEST_CASE("mod_mul absorbing and identity elements") {
    Modulus m(12289, 4);
    CHECK(mul_mod(0, 777, m.value()) == 0);
    CHECK(mul_mod(1, 777, m.value()) == 777);
}

TEST_CASE("mod_mul matches wide-integer oracle") {
    std::mt19937_64 rng(7);
    // 12289 plus one generated prime per width class up to the 2^62 limit.
    std::vector<u64> moduli = {12289};
    for (int logn : {4, 10}) {
        auto primes = generate_ntt_primes(logn, 2);
        moduli.insert(moduli.end(), primes.begin(), primes.end());
    }
    moduli.push_back(4611686018427322369ull);  // 62-bit NTT-friendly prime
    REQUIRE(is_prime_u64(moduli.back()));
    for (u64 m : moduli) {
        for (int i = 0; i < 100000; ++i) {
            u64 a = rng() % m;
            u64 b = rng() % m;
            REQUIRE(mul_mod(a, b, m) == mulmod_oracle(a, b, m));
        }
    }
}

TEST_CASE("mod_mul of 12289 against oracle for 1000 random pairs") {
    std::mt19937_64 rng(42);
    const u64 m = 12289;
    for (int i = 0; i < 1000; ++i) {
        u64 a = rng() % m;
        u64 b = rng() % m;
        CHECK(mul_mod(a, b, m) == mulmod_oracle(a, b, m));
    }
}

TEST_CASE("shoup multiplication agrees with plain reduction") {
    std::mt19937_64 rng(3);
    auto primes = generate_ntt_primes(12, 3);
    for (u64 q : primes) {
        for (int i = 0; i < 20000; ++i) {
            u64 w = rng() % q;
            u64 ws = shoup_precompute(w, q);
            u64 x = rng() % q;
            REQUIRE(mul_mod_shoup(x, w, ws, q) == mul_mod(x, w, q));
        }
    }
}

TEST_CASE("prime generation is deterministic, ascending, NTT friendly") {
    auto a = generate_ntt_primes(12, 8);
    auto b = generate_ntt_primes(12, 8);
    REQUIRE(a == b);
    u64 prev = 0;
    for (u64 p : a) {
        CHECK(p > (1ull << 35));
        CHECK(p % (2ull << 12) == 1);
        CHECK(is_prime_u64(p));
        CHECK(p > prev);
        prev = p;
    }
}

TEST_CASE("modulus root of unity invariants") {
    for (int logn : {4, 10}) {
        auto mods = generate_moduli(logn, 2);
        for (const auto& m : mods) {
            const u64 n = m.n();
            CHECK(pow_mod(m.root(), 2 * n, m.value()) == 1);
            CHECK(pow_mod(m.root(), n, m.value()) == m.value() - 1);
        }
    }
}

TEST_CASE("non NTT-friendly modulus is rejected") {
    // 17 is prime but 17 mod 32 != 1
    CHECK_THROWS_AS(Modulus(17, 4), std::invalid_argument);
    CHECK_THROWS_AS(Modulus(12288, 4), std::invalid_argument);  // composite
}
