#pragma once

// Experiment results roll up into rows of (measured value, reference,
// tolerance). A row passes when the value sits within tolerance of the
// reference; it is declared underpowered instead when the Monte Carlo error
// is too large for the comparison to mean anything (3 standard errors
// exceeding a quarter of the reference). Underpowered rows do not fail a
// report; they flag that `reps` was too small for the machine budget.

#include <cmath>
#include <iomanip>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "slle/config.hpp"

namespace slle {

enum class Verdict { pass, fail, underpowered };

inline const char* verdict_name(Verdict v) {
    switch (v) {
        case Verdict::pass: return "PASS";
        case Verdict::fail: return "FAIL";
        default: return "UNDERPOWERED";
    }
}

struct Row {
    std::string name;
    double value = 0.0;
    double std_err = 0.0;
    double reference = 0.0;
    double tolerance = 0.0;
    std::size_t n_samples = 0;  // 0 when the value is deterministic
    Verdict verdict = Verdict::fail;
    std::string note;
};

inline Verdict judge(double value, double reference, double tolerance,
                     double std_err) {
    if (reference != 0.0 && 3.0 * std_err > 0.25 * std::abs(reference))
        return Verdict::underpowered;
    return std::abs(value - reference) <= tolerance ? Verdict::pass
                                                    : Verdict::fail;
}

inline Row make_row(std::string name, double value, double reference,
                    double tolerance, double std_err = 0.0,
                    std::string note = "", std::size_t n_samples = 0) {
    Row r;
    r.name = std::move(name);
    r.value = value;
    r.std_err = std_err;
    r.reference = reference;
    r.tolerance = tolerance;
    r.n_samples = n_samples;
    r.verdict = judge(value, reference, tolerance, std_err);
    r.note = std::move(note);
    return r;
}

struct RunReport {
    std::string title;
    std::string config_hash;
    double wall_clock_s = 0.0;
    std::vector<Row> rows;

    bool any_fail() const {
        for (const Row& r : rows)
            if (r.verdict == Verdict::fail) return true;
        return false;
    }
    bool any_underpowered() const {
        for (const Row& r : rows)
            if (r.verdict == Verdict::underpowered) return true;
        return false;
    }
};

inline nlohmann::ordered_json report_json(const RunReport& rep) {
    nlohmann::ordered_json j;
    j["title"] = rep.title;
    j["config_hash"] = rep.config_hash;
    j["wall_clock_s"] = rep.wall_clock_s;
    j["rows"] = nlohmann::ordered_json::array();
    for (const Row& r : rep.rows) {
        nlohmann::ordered_json row;
        row["name"] = r.name;
        row["value"] = r.value;
        row["std_err"] = r.std_err;
        row["reference"] = r.reference;
        row["tolerance"] = r.tolerance;
        row["n_samples"] = r.n_samples;
        row["verdict"] = verdict_name(r.verdict);
        if (!r.note.empty()) row["note"] = r.note;
        j["rows"].push_back(row);
    }
    return j;
}

inline void print_report(const RunReport& rep, std::ostream& os) {
    os << "== " << rep.title << " (config " << rep.config_hash << ") ==\n";
    for (const Row& r : rep.rows) {
        os << "  " << std::left << std::setw(28) << r.name << std::right
           << verdict_name(r.verdict) << "  value=" << format_g17(r.value)
           << "  ref=" << format_g17(r.reference)
           << "  tol=" << format_g17(r.tolerance);
        if (r.std_err > 0.0) os << "  se=" << format_g17(r.std_err);
        if (!r.note.empty()) os << "  (" << r.note << ")";
        os << "\n";
    }
}

}  // namespace slle
