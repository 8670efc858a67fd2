#ifndef CSBP_EXT_REAL_HPP
#define CSBP_EXT_REAL_HPP

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace csbp {

/// A point of the compactified half-line [0, inf]: any finite nonnegative
/// value plus the distinguished point infinity. Addition saturates
/// (z + inf = inf).
class ExtReal {
public:
    constexpr ExtReal() noexcept : v_(0.0) {}

    explicit ExtReal(double v) : v_(v) {
        if (std::isnan(v) || v < 0.0)
            throw std::domain_error("ExtReal: value must be nonnegative, got " +
                                    std::to_string(v));
    }

    static constexpr ExtReal infinity() noexcept {
        ExtReal x;
        x.v_ = std::numeric_limits<double>::infinity();
        return x;
    }

    bool is_infinite() const noexcept { return std::isinf(v_); }
    bool is_zero() const noexcept { return v_ == 0.0; }
    bool is_finite() const noexcept { return !std::isinf(v_); }

    /// Raw double; infinity maps to the IEEE infinity.
    double get() const noexcept { return v_; }

    friend bool operator==(ExtReal a, ExtReal b) noexcept { return a.v_ == b.v_; }
    friend bool operator!=(ExtReal a, ExtReal b) noexcept { return a.v_ != b.v_; }
    friend bool operator<(ExtReal a, ExtReal b) noexcept { return a.v_ < b.v_; }
    friend bool operator<=(ExtReal a, ExtReal b) noexcept { return a.v_ <= b.v_; }
    friend bool operator>(ExtReal a, ExtReal b) noexcept { return a.v_ > b.v_; }
    friend bool operator>=(ExtReal a, ExtReal b) noexcept { return a.v_ >= b.v_; }

    friend ExtReal operator+(ExtReal a, ExtReal b) noexcept {
        ExtReal r;
        r.v_ = a.v_ + b.v_;  // z + inf = inf
        return r;
    }

private:
    double v_;
};

}  // namespace csbp

#endif  // CSBP_EXT_REAL_HPP
