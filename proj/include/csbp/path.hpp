#ifndef CSBP_PATH_HPP
#define CSBP_PATH_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "csbp/ext_real.hpp"

namespace csbp {

enum class PathKind { Event, Grid };

/// A cadlag trajectory on [0, inf] absorbed at 0 and infinity.
///
/// Event kind: piecewise constant, values[i] held on [times[i], times[i+1]).
/// Grid kind: samples at uniform nodes i * step.
///
/// A path either belongs to the absorbed path space (its last value equals
/// `terminal`, which is 0 or infinity) or carries an explicit `horizon`
/// marking truncation of a simulation that had not yet been absorbed.
struct CadlagPath {
    PathKind kind = PathKind::Event;
    std::vector<double> times;   // Event breakpoints, times[0] == 0
    double step = 0.0;           // Grid spacing
    std::vector<ExtReal> values;
    ExtReal terminal{};
    std::optional<double> horizon;

    static CadlagPath event(std::vector<double> ts, std::vector<ExtReal> vs,
                            ExtReal terminal,
                            std::optional<double> horizon = std::nullopt) {
        CadlagPath p;
        p.kind = PathKind::Event;
        p.times = std::move(ts);
        p.values = std::move(vs);
        p.terminal = terminal;
        p.horizon = horizon;
        return p;
    }

    static CadlagPath grid(double step, std::vector<ExtReal> vs, ExtReal terminal,
                           std::optional<double> horizon = std::nullopt) {
        CadlagPath p;
        p.kind = PathKind::Grid;
        p.step = step;
        p.values = std::move(vs);
        p.terminal = terminal;
        p.horizon = horizon;
        return p;
    }

    /// The constant-zero path (absorbed from the start).
    static CadlagPath zero() {
        return event({0.0}, {ExtReal(0.0)}, ExtReal(0.0));
    }

    bool truncated() const noexcept { return horizon.has_value(); }

    std::size_t size() const noexcept { return values.size(); }

    /// Time of the last breakpoint / grid node.
    double last_time() const {
        if (values.empty()) throw std::logic_error("empty path");
        return kind == PathKind::Event ? times.back()
                                       : step * static_cast<double>(values.size() - 1);
    }

    /// End of the path's time domain: horizon if truncated, else +inf.
    double domain_end() const {
        return truncated() ? *horizon : std::numeric_limits<double>::infinity();
    }

    double node_time(std::size_t i) const {
        return kind == PathKind::Event ? times[i] : step * static_cast<double>(i);
    }
};

struct Violation {
    std::string message;
    std::size_t index = 0;
};

/// Checks all structural invariants; returns the first violation found.
inline std::optional<Violation> validate(const CadlagPath& p) {
    if (p.values.empty()) return Violation{"no values", 0};
    if (!(p.terminal.is_zero() || p.terminal.is_infinite()))
        return Violation{"terminal must be 0 or inf", 0};
    if (p.kind == PathKind::Event) {
        if (p.times.size() != p.values.size())
            return Violation{"breakpoint/value count mismatch", 0};
        if (p.times.front() != 0.0) return Violation{"first breakpoint must be 0", 0};
        for (std::size_t i = 1; i < p.times.size(); ++i) {
            if (!(p.times[i] > p.times[i - 1]))
                return Violation{"breakpoints not strictly increasing at index " +
                                     std::to_string(i),
                                 i};
            if (p.values[i] == p.values[i - 1])
                return Violation{"null jump at index " + std::to_string(i), i};
        }
    } else {
        if (!(p.step > 0.0)) return Violation{"grid step must be positive", 0};
    }
    // absorption scan
    bool hit0 = false, hitInf = false;
    for (std::size_t i = 0; i < p.values.size(); ++i) {
        const ExtReal v = p.values[i];
        if ((hit0 && !v.is_zero()) || (hitInf && !v.is_infinite()))
            return Violation{"absorption broken at index " + std::to_string(i), i};
        if (v.is_zero()) hit0 = true;
        if (v.is_infinite()) hitInf = true;
    }
    if (p.truncated()) {
        if (!(*p.horizon > 0.0)) return Violation{"horizon must be positive", 0};
        if (*p.horizon < p.last_time() - 1e-12)
            return Violation{"horizon before last breakpoint", p.values.size() - 1};
    } else {
        if (p.values.back() != p.terminal)
            return Violation{"terminal unreachable", p.values.size() - 1};
    }
    return std::nullopt;
}

inline void require_valid(const CadlagPath& p) {
    if (auto v = validate(p))
        throw std::invalid_argument("invalid path: " + v->message);
}

/// Right-continuous lookup f(t). Beyond the last node of a non-truncated
/// path this is the terminal value; past the horizon of a truncated path it
/// is out of domain.
inline ExtReal eval(const CadlagPath& p, double t) {
    if (t < 0.0) throw std::domain_error("eval: negative time");
    if (p.truncated() && t > *p.horizon + 1e-12)
        throw std::domain_error("eval: time " + std::to_string(t) +
                                " beyond horizon " + std::to_string(*p.horizon));
    if (p.kind == PathKind::Event) {
        // last breakpoint <= t
        auto it = std::upper_bound(p.times.begin(), p.times.end(), t);
        std::size_t i = static_cast<std::size_t>(it - p.times.begin());
        return p.values[i == 0 ? 0 : i - 1];
    }
    std::size_t i = static_cast<std::size_t>(std::floor(t / p.step));
    if (i >= p.values.size()) return p.values.back();  // == terminal if full path
    return p.values[i];
}

struct Jump {
    double time;
    double size;  // signed; +inf for a jump to infinity
};

/// All jumps of an Event path. Not defined for Grid paths.
inline std::vector<Jump> jumps(const CadlagPath& p) {
    if (p.kind != PathKind::Event)
        throw std::invalid_argument("jumps: unsupported kind (Grid)");
    std::vector<Jump> out;
    out.reserve(p.values.size());
    for (std::size_t i = 1; i < p.values.size(); ++i) {
        double sz;
        if (p.values[i].is_infinite())
            sz = std::numeric_limits<double>::infinity();
        else
            sz = p.values[i].get() - p.values[i - 1].get();
        out.push_back(Jump{p.times[i], sz});
    }
    return out;
}

}  // namespace csbp

#endif  // CSBP_PATH_HPP
