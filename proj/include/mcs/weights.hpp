#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>

namespace mcs {

// Composite weights over (IC, SpC, SC) with an optional manual DC term.
// Invariant: every weight >= 0 and the four sum to 1 within 1e-9.
class WeightVector {
public:
    static constexpr double kSumTolerance = 1e-9;

    // Throws Error{InvalidArgument} when the invariant does not hold.
    static WeightVector make(double ic, double spc, double sc, double dc = 0.0);
    static WeightVector equal() { return make(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0); }

    double ic() const noexcept { return ic_; }
    double spc() const noexcept { return spc_; }
    double sc() const noexcept { return sc_; }
    double dc() const noexcept { return dc_; }

    bool operator==(const WeightVector&) const = default;

private:
    WeightVector(double ic, double spc, double sc, double dc) : ic_(ic), spc_(spc), sc_(sc), dc_(dc) {}
    double ic_, spc_, sc_, dc_;
};

// Learned weights plus the provenance written alongside them.
struct WeightsDocument {
    WeightVector weights = WeightVector::equal();
    std::optional<double> rho;
    std::optional<std::size_t> n_events;
    std::optional<unsigned long long> seed;
};

// {w_ic, w_spc, w_sc, rho, n_events, seed}; w_dc is written only when non-zero.
void write_weights(const WeightsDocument& doc, std::ostream& out);
WeightsDocument read_weights(std::istream& in);

// Accepts "a,b,c" or "a,b,c,d".
WeightVector parse_inline_weights(const std::string& text);

} // namespace mcs
