#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <ostream>

namespace tc {

// Integer extended with -infinity. Addition saturates at -inf; finite overflow is UB-free
// for the weight ranges used (|w| < 2^60).
struct Ext {
    static constexpr std::int64_t kNegInf = std::numeric_limits<std::int64_t>::min();
    std::int64_t v = 0;

    constexpr Ext() = default;
    constexpr Ext(std::int64_t x) : v(x) {}
    static constexpr Ext neg_inf() { return Ext(kNegInf); }

    constexpr bool finite() const { return v != kNegInf; }
    friend constexpr Ext operator+(Ext a, Ext b) {
        if (!a.finite() || !b.finite()) return neg_inf();
        return Ext(a.v + b.v);
    }
    friend constexpr Ext operator-(Ext a, Ext b) {
        // only used with finite b
        if (!a.finite()) return neg_inf();
        return Ext(a.v - b.v);
    }
    friend constexpr bool operator==(Ext a, Ext b) { return a.v == b.v; }
    friend constexpr bool operator<(Ext a, Ext b) { return a.v < b.v; }
    friend constexpr bool operator>(Ext a, Ext b) { return b < a; }
    friend constexpr bool operator<=(Ext a, Ext b) { return !(b < a); }
    friend constexpr bool operator>=(Ext a, Ext b) { return !(a < b); }

    std::uint64_t word() const { return static_cast<std::uint64_t>(v); }
    static Ext from_word(std::uint64_t w) { return Ext(static_cast<std::int64_t>(w)); }

    friend std::ostream& operator<<(std::ostream& os, Ext e) {
        if (!e.finite()) return os << "-inf";
        return os << e.v;
    }
};

inline Ext emax(Ext a, Ext b) { return a < b ? b : a; }

}  // namespace tc
