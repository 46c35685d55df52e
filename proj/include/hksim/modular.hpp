// Copyright (C) 2026 The hksim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <vector>

namespace hksim {

using u64 = std::uint64_t;
using u128 = unsigned __int128;

// Running tally of modular operations performed by the numeric kernels.
// bconv charges exactly N*alpha*beta multiplications (the qhat-inverse
// premultiply is setup and is not charged), NTT/INTT charge one mul and
// two adds per butterfly.
struct OpCounter {
    u64 mul = 0;
    u64 add = 0;
    void reset() { mul = 0; add = 0; }
    u64 total() const { return mul + add; }
};

inline OpCounter& op_counter() {
    thread_local OpCounter c;
    return c;
}

inline u64 mul_mod(u64 a, u64 b, u64 m) { return static_cast<u64>((u128)a * b % m); }

inline u64 add_mod(u64 a, u64 b, u64 m) {
    u64 s = a + b;
    return s >= m ? s - m : s;
}

inline u64 sub_mod(u64 a, u64 b, u64 m) { return a >= b ? a - b : a + m - b; }

inline u64 pow_mod(u64 base, u64 exp, u64 m) {
    u64 r = 1 % m;
    base %= m;
    while (exp) {
        if (exp & 1) r = mul_mod(r, base, m);
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    return r;
}

inline u64 inv_mod(u64 a, u64 m) { return pow_mod(a, m - 2, m); }  // m prime

// Deterministic Miller-Rabin, valid for all 64-bit inputs.
inline bool is_prime_u64(u64 n) {
    if (n < 2) return false;
    for (u64 p : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
        if (n % p == 0) return n == p;
    }
    u64 d = n - 1;
    int s = 0;
    while ((d & 1) == 0) { d >>= 1; ++s; }
    for (u64 a : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
        u64 x = pow_mod(a, d, n);
        if (x == 1 || x == n - 1) continue;
        bool composite = true;
        for (int i = 0; i < s - 1; ++i) {
            x = mul_mod(x, x, n);
            if (x == n - 1) { composite = false; break; }
        }
        if (composite) return false;
    }
    return true;
}

// Shoup precomputation: w_shoup = floor(w * 2^64 / m). mul_mod_shoup
// returns (x * w) mod m using one high multiply, valid for m < 2^63.
inline u64 shoup_precompute(u64 w, u64 m) { return static_cast<u64>(((u128)w << 64) / m); }

inline u64 mul_mod_shoup(u64 x, u64 w, u64 w_shoup, u64 m) {
    u64 q = static_cast<u64>(((u128)x * w_shoup) >> 64);
    u64 r = x * w - q * m;  // wraparound arithmetic, r < 2m
    return r >= m ? r - m : r;
}

// One RNS prime together with the tables needed for negacyclic NTT of
// length N = 2^degree_log2. root is a primitive 2N-th root of unity.
class Modulus {
public:
    Modulus() = default;

    Modulus(u64 value, int degree_log2) : value_(value), degree_log2_(degree_log2) {
        if (!is_prime_u64(value)) throw std::invalid_argument("modulus is not prime");
        if (value >= (1ull << 62)) throw std::invalid_argument("modulus must be < 2^62");
        const u64 two_n = 2ull << degree_log2_;
        if (value % two_n != 1) throw std::invalid_argument("modulus is not NTT friendly (q != 1 mod 2N)");
        build_tables();
    }

    u64 value() const { return value_; }
    int degree_log2() const { return degree_log2_; }
    u64 n() const { return 1ull << degree_log2_; }
    u64 root() const { return tables_->root; }

    // Twiddles in bit-reversed order, psi powers for the forward transform
    // and psi^-1 powers for the inverse. n_inv folds the 1/N scaling.
    const std::vector<u64>& fwd_tw() const { return tables_->fwd; }
    const std::vector<u64>& fwd_tw_shoup() const { return tables_->fwd_shoup; }
    const std::vector<u64>& inv_tw() const { return tables_->inv; }
    const std::vector<u64>& inv_tw_shoup() const { return tables_->inv_shoup; }
    u64 n_inv() const { return tables_->n_inv; }
    u64 n_inv_shoup() const { return tables_->n_inv_shoup; }

    bool operator==(const Modulus& o) const { return value_ == o.value_ && degree_log2_ == o.degree_log2_; }
    bool operator!=(const Modulus& o) const { return !(*this == o); }

private:
    struct Tables {
        u64 root = 0;
        std::vector<u64> fwd, fwd_shoup, inv, inv_shoup;
        u64 n_inv = 0, n_inv_shoup = 0;
    };

    static u64 bit_reverse(u64 x, int bits) {
        u64 r = 0;
        for (int i = 0; i < bits; ++i) r |= ((x >> i) & 1) << (bits - 1 - i);
        return r;
    }

    void build_tables() {
        const u64 q = value_;
        const u64 n = 1ull << degree_log2_;
        const u64 two_n = 2 * n;
        auto t = std::make_shared<Tables>();
        // Find a primitive 2N-th root: c^((q-1)/2N) has order 2N iff its
        // N-th power is -1 (2N is a power of two).
        u64 psi = 0;
        for (u64 c = 2;; ++c) {
            u64 r = pow_mod(c, (q - 1) / two_n, q);
            if (pow_mod(r, n, q) == q - 1) { psi = r; break; }
        }
        t->root = psi;
        const u64 psi_inv = inv_mod(psi, q);
        t->fwd.resize(n);
        t->inv.resize(n);
        u64 p = 1, pi = 1;
        for (u64 i = 0; i < n; ++i) {
            u64 j = bit_reverse(i, degree_log2_);
            t->fwd[j] = p;
            t->inv[j] = pi;
            p = mul_mod(p, psi, q);
            pi = mul_mod(pi, psi_inv, q);
        }
        t->fwd_shoup.resize(n);
        t->inv_shoup.resize(n);
        for (u64 i = 0; i < n; ++i) {
            t->fwd_shoup[i] = shoup_precompute(t->fwd[i], q);
            t->inv_shoup[i] = shoup_precompute(t->inv[i], q);
        }
        t->n_inv = inv_mod(n % q, q);
        t->n_inv_shoup = shoup_precompute(t->n_inv, q);
        tables_ = std::move(t);
    }

    u64 value_ = 0;
    int degree_log2_ = 0;
    std::shared_ptr<const Tables> tables_;

    void operator=(const Tables&) = delete;
};

// Smallest primes p > 2^35 with p = 1 (mod 2N), ascending, so every
// platform derives identical moduli chains.
inline std::vector<u64> generate_ntt_primes(int degree_log2, std::size_t count) {
    const u64 two_n = 2ull << degree_log2;
    std::vector<u64> primes;
    u64 candidate = ((1ull << 35) / two_n + 1) * two_n + 1;
    while (primes.size() < count) {
        if (is_prime_u64(candidate)) primes.push_back(candidate);
        candidate += two_n;
    }
    return primes;
}

inline std::vector<Modulus> generate_moduli(int degree_log2, std::size_t count) {
    std::vector<Modulus> out;
    out.reserve(count);
    for (u64 p : generate_ntt_primes(degree_log2, count)) out.emplace_back(p, degree_log2);
    return out;
}

}  // namespace hksim
