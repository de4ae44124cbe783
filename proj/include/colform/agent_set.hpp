#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <vector>

namespace colform {

// Fixed-capacity bitset over agent indices. 256 agents is comfortably above
// the largest pool the experiments touch (n = 200).
struct AgentSet {
    static constexpr int kWords = 4;
    static constexpr int kCapacity = kWords * 64;

    std::array<uint64_t, kWords> w{};

    static AgentSet full(int n) {
        AgentSet s;
        for (int i = 0; i < n; ++i) s.add(i);
        return s;
    }
    static AgentSet of(const std::vector<int>& members) {
        AgentSet s;
        for (int m : members) s.add(m);
        return s;
    }

    void add(int i) { w[i >> 6] |= (1ULL << (i & 63)); }
    void remove(int i) { w[i >> 6] &= ~(1ULL << (i & 63)); }
    bool test(int i) const { return (w[i >> 6] >> (i & 63)) & 1ULL; }

    bool empty() const {
        for (uint64_t x : w)
            if (x) return false;
        return true;
    }
    int count() const {
        int c = 0;
        for (uint64_t x : w) c += std::popcount(x);
        return c;
    }
    bool intersects(const AgentSet& o) const {
        for (int i = 0; i < kWords; ++i)
            if (w[i] & o.w[i]) return true;
        return false;
    }
    bool contains_all(const AgentSet& o) const {
        for (int i = 0; i < kWords; ++i)
            if ((w[i] & o.w[i]) != o.w[i]) return false;
        return true;
    }
    void unite(const AgentSet& o) {
        for (int i = 0; i < kWords; ++i) w[i] |= o.w[i];
    }
    void subtract(const AgentSet& o) {
        for (int i = 0; i < kWords; ++i) w[i] &= ~o.w[i];
    }
    // Lowest set bit, or -1 when empty.
    int lowest() const {
        for (int i = 0; i < kWords; ++i)
            if (w[i]) return i * 64 + std::countr_zero(w[i]);
        return -1;
    }
    std::vector<int> to_indices() const {
        std::vector<int> out;
        for (int i = 0; i < kWords; ++i) {
            uint64_t x = w[i];
            while (x) {
                out.push_back(i * 64 + std::countr_zero(x));
                x &= x - 1;
            }
        }
        return out;
    }
    friend bool operator==(const AgentSet& a, const AgentSet& b) { return a.w == b.w; }
};

}  // namespace colform
