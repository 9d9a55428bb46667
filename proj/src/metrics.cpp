#include "vlm/metrics.hpp"

#include <algorithm>
#include <cctype>

namespace vlm {

std::string normalize_answer(const std::string& s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    std::string out = s.substr(b, e - b);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

double exact_match_accuracy(const std::vector<std::string>& predictions,
                            const std::vector<std::string>& references) {
    if (predictions.size() != references.size())
        throw ContractError("exact_match_accuracy: " + std::to_string(predictions.size()) +
                            " predictions vs " + std::to_string(references.size()) + " references");
    if (predictions.empty()) return 0.0;
    int64_t hits = 0;
    for (size_t i = 0; i < predictions.size(); ++i)
        if (normalize_answer(predictions[i]) == normalize_answer(references[i])) ++hits;
    return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

namespace {

bool parse_yes_no(const std::string& raw) {
    std::string s = normalize_answer(raw);
    if (s == "yes" || s == "y") return true;
    if (s == "no" || s == "n") return false;
    throw ContractError("binary_prf: non-binary label '" + raw + "'");
}

} // namespace

PrfScores binary_prf(const std::vector<std::string>& predictions,
                     const std::vector<std::string>& references) {
    if (predictions.size() != references.size())
        throw ContractError("binary_prf: " + std::to_string(predictions.size()) +
                            " predictions vs " + std::to_string(references.size()) + " references");
    int64_t tp = 0, fp = 0, fn = 0;
    for (size_t i = 0; i < predictions.size(); ++i) {
        bool p = parse_yes_no(predictions[i]);
        bool r = parse_yes_no(references[i]);
        if (p && r) ++tp;
        else if (p && !r) ++fp;
        else if (!p && r) ++fn;
    }
    PrfScores s;
    s.precision = (tp + fp) > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
    s.recall = (tp + fn) > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
    s.f1 = (s.precision + s.recall) > 0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    return s;
}

double pope_aggregate(double random_f1, double popular_f1, double adversarial_f1) {
    return (random_f1 + popular_f1 + adversarial_f1) / 3.0;
}

} // namespace vlm
