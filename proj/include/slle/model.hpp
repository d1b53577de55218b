#pragma once

// Problem data for the superprocess-in-random-environment lab: the coefficient
// triple (b, c, e) with the derivatives the schemes consume, nonnegative test
// functions used as initial conditions, initial measures, and named presets.
//
// Conventions used throughout the library:
//   a(x)      = (e(x)^2 + c(x)^2) / 2     diffusion of a single tracer
//   bar_a(x)  = e(x)^2 / 2                diffusion left after removing the
//                                         common-noise transport part
//   bar_b(x)  = b(x) - c(x) c'(x) / 2     drift in Stratonovich form

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "slle/errors.hpp"
#include "slle/rng.hpp"

namespace slle {

using RealFn = std::function<double(double)>;

/// Coefficients of the model and the derivatives the numerics need.
/// Any function slot may be left empty; operations that require a missing
/// derivative throw MissingDerivative. `k_bound` is the claimed uniform bound
/// on all supplied coefficients and derivatives, `e_min` the claimed uniform
/// lower bound on e; validate_bc probes both.
struct CoefficientSet {
    RealFn b, db;
    RealFn c, dc, d2c, d3c;
    RealFn e, de, d2e;
    double k_bound = 0.0;
    double e_min = 0.0;
    /// True when b, c, e are all spatially constant. Monte Carlo inner loops
    /// use this to hoist coefficient evaluation out of the particle loop.
    bool spatially_constant = false;
};

namespace detail {
inline double eval(const RealFn& f, double x, const char* name) {
    if (!f) throw MissingDerivative(std::string("coefficient slot missing: ") + name);
    return f(x);
}
}  // namespace detail

inline double derived_a(const CoefficientSet& cs, double x) {
    const double e = detail::eval(cs.e, x, "e");
    const double c = detail::eval(cs.c, x, "c");
    return 0.5 * (e * e + c * c);
}

inline double derived_a_prime(const CoefficientSet& cs, double x) {
    return detail::eval(cs.e, x, "e") * detail::eval(cs.de, x, "e'") +
           detail::eval(cs.c, x, "c") * detail::eval(cs.dc, x, "c'");
}

inline double derived_a_second(const CoefficientSet& cs, double x) {
    const double de = detail::eval(cs.de, x, "e'");
    const double dc = detail::eval(cs.dc, x, "c'");
    return de * de + detail::eval(cs.e, x, "e") * detail::eval(cs.d2e, x, "e''") +
           dc * dc + detail::eval(cs.c, x, "c") * detail::eval(cs.d2c, x, "c''");
}

/// Stratonovich-form drift: b - c c' / 2.
inline double bar_b(const CoefficientSet& cs, double x) {
    return detail::eval(cs.b, x, "b") -
           0.5 * detail::eval(cs.c, x, "c") * detail::eval(cs.dc, x, "c'");
}

/// Diffusion coefficient left after the common-noise transport: e^2 / 2.
inline double bar_a(const CoefficientSet& cs, double x) {
    const double e = detail::eval(cs.e, x, "e");
    return 0.5 * e * e;
}

/// Position drift of the weighted-particle system: 2a' - b - c c'.
inline double rep_position_drift(const CoefficientSet& cs, double x) {
    return 2.0 * derived_a_prime(cs, x) - detail::eval(cs.b, x, "b") -
           detail::eval(cs.c, x, "c") * detail::eval(cs.dc, x, "c'");
}

/// Weight drift of the weighted-particle system before the density feedback
/// term is subtracted: a'' - b'.
inline double rep_weight_drift(const CoefficientSet& cs, double x) {
    return derived_a_second(cs, x) - detail::eval(cs.db, x, "b'");
}

/// Measured suprema of the coefficient family over a set of probe points.
struct BcReport {
    double max_abs = 0.0;   // largest |value| seen over all supplied slots
    double min_e = 0.0;
    bool pass = false;
    std::string first_violation;  // empty when pass
};

/// Probes every supplied coefficient slot at the given points and checks the
/// claimed bounds: |value| <= k_bound for all slots, e >= e_min, e_min > 0.
inline BcReport validate_bc(const CoefficientSet& cs,
                            const std::vector<double>& probes) {
    BcReport rep;
    rep.min_e = std::numeric_limits<double>::infinity();
    const std::pair<const char*, const RealFn*> slots[] = {
        {"b", &cs.b},     {"b'", &cs.db},  {"c", &cs.c},
        {"c'", &cs.dc},   {"c''", &cs.d2c}, {"c'''", &cs.d3c},
        {"e", &cs.e},     {"e'", &cs.de},  {"e''", &cs.d2e},
    };
    for (const auto& [name, fn] : slots) {
        if (!*fn) continue;
        for (double x : probes) {
            const double v = (*fn)(x);
            rep.max_abs = std::max(rep.max_abs, std::abs(v));
            if (std::abs(v) > cs.k_bound && rep.first_violation.empty()) {
                rep.first_violation = std::string(name) + " exceeds bound at x=" +
                                      std::to_string(x);
            }
        }
    }
    if (!cs.e) {
        if (rep.first_violation.empty()) rep.first_violation = "e missing";
    } else {
        for (double x : probes) rep.min_e = std::min(rep.min_e, cs.e(x));
        if (rep.min_e < cs.e_min && rep.first_violation.empty())
            rep.first_violation = "e falls below declared floor";
        if (cs.e_min <= 0.0 && rep.first_violation.empty())
            rep.first_violation = "declared e floor is not positive";
    }
    rep.pass = rep.first_violation.empty();
    return rep;
}

/// Throwing form of validate_bc for use as an operation precondition.
inline void require_bc(const CoefficientSet& cs, const std::vector<double>& probes) {
    const BcReport rep = validate_bc(cs, probes);
    if (!rep.pass) throw ValidationFailed(rep.first_violation);
}

/// Nonnegative initial condition with known sup and numerical support.
/// Outside [-support_radius, support_radius] the values are below
/// 1e-12 * sup and all schemes may treat them as zero.
struct TestFunction {
    RealFn f, df;
    double sup = 0.0;
    double support_radius = 0.0;
};

/// Smoothed indicator of [-half_width, half_width]: shoulders are tanh ramps
/// of width `shoulder`. Peak value is tanh(half_width/shoulder), marginally
/// below 1.
inline TestFunction plateau_bump(double half_width, double shoulder) {
    if (half_width <= 0.0 || shoulder <= 0.0)
        throw ConfigError("plateau_bump: widths must be positive");
    TestFunction tf;
    tf.f = [half_width, shoulder](double x) {
        return 0.5 * (std::tanh((x + half_width) / shoulder) -
                      std::tanh((x - half_width) / shoulder));
    };
    tf.df = [half_width, shoulder](double x) {
        const double sp = std::cosh((x + half_width) / shoulder);
        const double sm = std::cosh((x - half_width) / shoulder);
        return 0.5 / shoulder * (1.0 / (sp * sp) - 1.0 / (sm * sm));
    };
    tf.sup = std::tanh(half_width / shoulder);
    // Tail decays like exp(-2(x-half_width)/shoulder); 1e-12 is reached at
    // half_width + shoulder * ln(1e12)/2.
    tf.support_radius = half_width + 0.5 * shoulder * std::log(1e12);
    return tf;
}

/// Gaussian bump amplitude * exp(-x^2 / (2 variance)).
inline TestFunction gaussian_bump(double variance, double amplitude = 1.0) {
    if (variance <= 0.0 || amplitude <= 0.0)
        throw ConfigError("gaussian_bump: variance and amplitude must be positive");
    TestFunction tf;
    tf.f = [variance, amplitude](double x) {
        return amplitude * std::exp(-x * x / (2.0 * variance));
    };
    tf.df = [variance, amplitude](double x) {
        return -x / variance * amplitude * std::exp(-x * x / (2.0 * variance));
    };
    tf.sup = amplitude;
    tf.support_radius = std::sqrt(2.0 * variance * std::log(1e12));
    return tf;
}

/// Initial measure of the population: a point mass or a uniform distribution,
/// with explicit total mass. Integration against arbitrary callables keeps
/// this type decoupled from the grid machinery.
class InitialMeasure {
  public:
    static InitialMeasure point(double x, double mass) {
        if (mass <= 0.0) throw EmptyMeasure("point measure with mass <= 0");
        InitialMeasure m;
        m.kind_ = Kind::Point;
        m.a_ = x;
        m.mass_ = mass;
        return m;
    }

    static InitialMeasure uniform(double lo, double hi, double mass) {
        if (mass <= 0.0) throw EmptyMeasure("uniform measure with mass <= 0");
        if (!(hi > lo)) throw EmptyMeasure("uniform measure with empty support");
        InitialMeasure m;
        m.kind_ = Kind::Uniform;
        m.a_ = lo;
        m.b_ = hi;
        m.mass_ = mass;
        return m;
    }

    double total_mass() const { return mass_; }

    /// One position distributed as measure / total_mass.
    double sample(Rng& rng) const {
        if (kind_ == Kind::Point) return a_;
        return a_ + (b_ - a_) * rng.uniform();
    }

    /// Integral of `fn` against the measure. The uniform variant uses a fixed
    /// 512-panel trapezoid rule, plenty for the smooth integrands seen here.
    template <typename Fn>
    double integrate(Fn&& fn) const {
        if (kind_ == Kind::Point) return mass_ * fn(a_);
        constexpr int kPanels = 512;
        const double h = (b_ - a_) / kPanels;
        double acc = 0.5 * (fn(a_) + fn(b_));
        for (int i = 1; i < kPanels; ++i) acc += fn(a_ + i * h);
        return acc * h * mass_ / (b_ - a_);
    }

  private:
    enum class Kind { Point, Uniform };
    Kind kind_ = Kind::Point;
    double a_ = 0.0, b_ = 0.0, mass_ = 1.0;
};

/// A named, ready-to-run model: coefficients, initial condition, initial
/// measure.
struct ModelPreset {
    std::string name;
    CoefficientSet coeffs;
    TestFunction initial;
    InitialMeasure mu = InitialMeasure::point(0.0, 1.0);
};

namespace detail {

inline std::map<std::string, double> parse_params(const std::string& text) {
    std::map<std::string, double> out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const std::size_t comma = text.find(',', pos);
        const std::string item =
            text.substr(pos, comma == std::string::npos ? std::string::npos
                                                        : comma - pos);
        const std::size_t eq = item.find('=');
        if (eq == std::string::npos || eq == 0)
            throw ConfigError("preset parameter must look like key=value: " + item);
        const std::string key = item.substr(0, eq);
        const std::string val = item.substr(eq + 1);
        try {
            std::size_t used = 0;
            const double v = std::stod(val, &used);
            if (used != val.size()) throw std::invalid_argument(val);
            out[key] = v;
        } catch (const std::exception&) {
            throw ConfigError("preset parameter '" + key +
                              "' has a malformed value: " + val);
        }
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

inline double take(std::map<std::string, double>& params, const std::string& key,
                   double fallback) {
    const auto it = params.find(key);
    if (it == params.end()) return fallback;
    const double v = it->second;
    params.erase(it);
    return v;
}

inline RealFn constant(double v) {
    return [v](double) { return v; };
}

}  // namespace detail

/// Builds a model from a descriptor like "CONST:c0=1.0,b0=0.5". Recognized
/// names: CONST (constant b, c, e), ZERO_C (c identically zero) and SMOOTH
/// (c(x) = c0 / (1 + x^2), constant b and e). Keys: b0, c0, e0; unknown keys
/// and malformed values raise ConfigError.
inline ModelPreset make_preset(const std::string& descriptor) {
    const std::size_t colon = descriptor.find(':');
    const std::string name = descriptor.substr(0, colon);
    auto params = colon == std::string::npos
                      ? std::map<std::string, double>{}
                      : detail::parse_params(descriptor.substr(colon + 1));

    ModelPreset preset;
    preset.name = name;
    CoefficientSet& cs = preset.coeffs;

    if (name == "CONST" || name == "ZERO_C") {
        const double b0 = detail::take(params, "b0", 0.0);
        const double c0 = name == "ZERO_C" ? 0.0
                                           : detail::take(params, "c0", 1.0);
        const double e0 = detail::take(params, "e0", 1.0);
        if (e0 <= 0.0) throw ConfigError(name + ": e0 must be positive");
        cs.b = detail::constant(b0);
        cs.db = detail::constant(0.0);
        cs.c = detail::constant(c0);
        cs.dc = detail::constant(0.0);
        cs.d2c = detail::constant(0.0);
        cs.d3c = detail::constant(0.0);
        cs.e = detail::constant(e0);
        cs.de = detail::constant(0.0);
        cs.d2e = detail::constant(0.0);
        cs.k_bound = std::max({std::abs(b0), std::abs(c0), e0});
        cs.e_min = e0;
        cs.spatially_constant = true;
        preset.initial = name == "CONST" ? plateau_bump(4.0, 0.5)
                                         : gaussian_bump(0.25);
    } else if (name == "SMOOTH") {
        const double b0 = detail::take(params, "b0", 0.0);
        const double c0 = detail::take(params, "c0", 0.5);
        const double e0 = detail::take(params, "e0", 1.0);
        if (e0 <= 0.0) throw ConfigError("SMOOTH: e0 must be positive");
        cs.b = detail::constant(b0);
        cs.db = detail::constant(0.0);
        cs.c = [c0](double x) { return c0 / (1.0 + x * x); };
        cs.dc = [c0](double x) {
            const double d = 1.0 + x * x;
            return -2.0 * c0 * x / (d * d);
        };
        cs.d2c = [c0](double x) {
            const double d = 1.0 + x * x;
            return c0 * (6.0 * x * x - 2.0) / (d * d * d);
        };
        cs.d3c = [c0](double x) {
            const double d = 1.0 + x * x;
            return 24.0 * c0 * x * (1.0 - x * x) / (d * d * d * d);
        };
        cs.e = detail::constant(e0);
        cs.de = detail::constant(0.0);
        cs.d2e = detail::constant(0.0);
        // |c'''| peaks at about 4.67 c0; that dominates the family.
        cs.k_bound = std::max({std::abs(b0), 4.7 * std::abs(c0), e0});
        cs.e_min = e0;
        cs.spatially_constant = false;
        preset.initial = gaussian_bump(0.25);
    } else {
        throw ConfigError("unknown model preset: " + name);
    }

    if (!params.empty())
        throw ConfigError("unknown preset parameter: " + params.begin()->first);
    preset.mu = InitialMeasure::point(0.0, 1.0);
    return preset;
}

}  // namespace slle
