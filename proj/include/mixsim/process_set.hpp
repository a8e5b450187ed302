#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

namespace mixsim {

using ProcessId = std::uint32_t;

// Hard ceiling imposed by the 64-bit representation; the calculators apply a
// lower, configurable cap on top of this.
inline constexpr std::size_t kMaxProcesses = 64;

/// A set of process ids in [0, 64), stored as a bitmask.
class ProcessSet {
public:
    constexpr ProcessSet() = default;
    constexpr explicit ProcessSet(std::uint64_t bits) : bits_(bits) {}
    ProcessSet(std::initializer_list<ProcessId> ids) {
        for (auto id : ids) insert(id);
    }

    static ProcessSet from_vector(const std::vector<ProcessId>& ids) {
        ProcessSet s;
        for (auto id : ids) s.insert(id);
        return s;
    }
    static constexpr ProcessSet all(std::size_t n) {
        return ProcessSet(n >= 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << n) - 1));
    }
    static constexpr ProcessSet single(ProcessId p) { return ProcessSet(std::uint64_t{1} << p); }

    constexpr std::uint64_t bits() const { return bits_; }
    constexpr bool empty() const { return bits_ == 0; }
    constexpr std::size_t size() const { return static_cast<std::size_t>(std::popcount(bits_)); }
    constexpr bool contains(ProcessId p) const { return p < 64 && ((bits_ >> p) & 1U) != 0; }
    constexpr void insert(ProcessId p) { bits_ |= std::uint64_t{1} << p; }
    constexpr void erase(ProcessId p) { bits_ &= ~(std::uint64_t{1} << p); }

    constexpr bool intersects(ProcessSet o) const { return (bits_ & o.bits_) != 0; }
    constexpr bool is_subset_of(ProcessSet o) const { return (bits_ & ~o.bits_) == 0; }

    // Largest id + 1, or 0 for the empty set.
    constexpr std::size_t extent() const { return 64 - static_cast<std::size_t>(std::countl_zero(bits_)); }

    std::vector<ProcessId> to_vector() const {
        std::vector<ProcessId> out;
        out.reserve(size());
        for (auto b = bits_; b != 0; b &= b - 1) out.push_back(static_cast<ProcessId>(std::countr_zero(b)));
        return out;
    }

    std::string to_string() const;

    friend constexpr ProcessSet operator|(ProcessSet a, ProcessSet b) { return ProcessSet(a.bits_ | b.bits_); }
    friend constexpr ProcessSet operator&(ProcessSet a, ProcessSet b) { return ProcessSet(a.bits_ & b.bits_); }
    // Set difference.
    friend constexpr ProcessSet operator-(ProcessSet a, ProcessSet b) { return ProcessSet(a.bits_ & ~b.bits_); }
    constexpr ProcessSet& operator|=(ProcessSet o) {
        bits_ |= o.bits_;
        return *this;
    }
    friend constexpr bool operator==(ProcessSet, ProcessSet) = default;

    // Lexicographic order on the sorted member lists, e.g. {0,3} < {1,2}.
    friend bool lex_less(ProcessSet a, ProcessSet b);

private:
    std::uint64_t bits_ = 0;
};

/// Enumerates the k-subsets of a universe in lexicographic order of their
/// sorted member lists. The callback returns false to stop early.
template <typename Fn>
bool for_each_subset(ProcessSet universe, std::size_t k, Fn&& fn) {
    const auto members = universe.to_vector();
    const std::size_t m = members.size();
    if (k > m) return true;
    if (k == 0) return fn(ProcessSet{});
    std::vector<std::size_t> idx(k);
    for (std::size_t i = 0; i < k; ++i) idx[i] = i;
    while (true) {
        ProcessSet s;
        for (auto i : idx) s.insert(members[i]);
        if (!fn(s)) return false;
        // advance to the next combination
        std::size_t i = k;
        while (i > 0 && idx[i - 1] == m - k + (i - 1)) --i;
        if (i == 0) return true;
        ++idx[i - 1];
        for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
}

}  // namespace mixsim
