#include "mcs/weights.hpp"

#include "mcs/error.hpp"

#include <json.hpp>

#include <cctype>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

namespace mcs {

WeightVector WeightVector::make(double ic, double spc, double sc, double dc) {
    for (double w : {ic, spc, sc, dc}) {
        if (!std::isfinite(w) || w < 0.0) {
            throw Error(ErrorCode::InvalidArgument, "weights must be finite and non-negative");
        }
    }
    const double sum = ic + spc + sc + dc;
    if (std::abs(sum - 1.0) > kSumTolerance) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "weights must sum to 1 (got " << sum << ")";
        throw Error(ErrorCode::InvalidArgument, msg.str());
    }
    return WeightVector(ic, spc, sc, dc);
}

void write_weights(const WeightsDocument& doc, std::ostream& out) {
    nlohmann::ordered_json j;
    j["w_ic"] = doc.weights.ic();
    j["w_spc"] = doc.weights.spc();
    j["w_sc"] = doc.weights.sc();
    if (doc.weights.dc() != 0.0) j["w_dc"] = doc.weights.dc();
    j["rho"] = doc.rho ? nlohmann::ordered_json(*doc.rho) : nlohmann::ordered_json(nullptr);
    j["n_events"] = doc.n_events ? nlohmann::ordered_json(*doc.n_events) : nlohmann::ordered_json(nullptr);
    j["seed"] = doc.seed ? nlohmann::ordered_json(*doc.seed) : nlohmann::ordered_json(nullptr);
    out << j.dump(2) << '\n';
}

WeightsDocument read_weights(std::istream& in) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::Schema, std::string("malformed weights document: ") + e.what());
    }
    auto real = [&](const char* key, bool required) -> double {
        auto it = j.find(key);
        if (it == j.end() || it->is_null()) {
            if (required) throw Error(ErrorCode::Schema, std::string("weights document missing '") + key + "'");
            return 0.0;
        }
        if (!it->is_number()) throw Error(ErrorCode::Schema, std::string("'") + key + "' must be a number");
        return it->get<double>();
    };
    if (!j.is_object()) throw Error(ErrorCode::Schema, "weights document must be a JSON object");
    WeightsDocument doc;
    doc.weights = WeightVector::make(real("w_ic", true), real("w_spc", true), real("w_sc", true), real("w_dc", false));
    if (auto it = j.find("rho"); it != j.end() && it->is_number()) doc.rho = it->get<double>();
    if (auto it = j.find("n_events"); it != j.end() && it->is_number_unsigned()) doc.n_events = it->get<std::size_t>();
    if (auto it = j.find("seed"); it != j.end() && it->is_number_unsigned()) doc.seed = it->get<unsigned long long>();
    return doc;
}

WeightVector parse_inline_weights(const std::string& text) {
    std::vector<double> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            parts.push_back(std::stod(item, &used));
            while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw Error(ErrorCode::InvalidArgument, "cannot parse weight '" + item + "'");
        }
    }
    if (parts.size() == 3) return WeightVector::make(parts[0], parts[1], parts[2]);
    if (parts.size() == 4) return WeightVector::make(parts[0], parts[1], parts[2], parts[3]);
    throw Error(ErrorCode::InvalidArgument, "inline weights need 3 or 4 comma-separated values");
}

} // namespace mcs
