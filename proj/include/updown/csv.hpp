#pragma once

// CSV plumbing shared by the trial, fit and summary files. Doubles are written
// with %.17g so that a write/read cycle is field-exact.

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "updown/error.hpp"
#include "updown/sim.hpp"

namespace updown {

inline std::string format_double(double x) {
    if (std::isnan(x)) return "NA";
    if (std::isinf(x)) return x > 0 ? "Inf" : "-Inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline std::vector<std::string> split(std::string_view line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        out.emplace_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline double parse_double(std::string_view text, const std::string& context) {
    const std::string s(trim(text));
    if (s == "NA") return std::nan("");
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE)
        throw ContractViolation(context + ": expected a number, got '" + s + "'");
    return v;
}

template <typename Int>
Int parse_int(std::string_view text, const std::string& context) {
    const auto s = trim(text);
    Int v{};
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size())
        throw ContractViolation(context + ": expected an integer, got '" + std::string(s) + "'");
    return v;
}

inline constexpr std::string_view kTrialHeader = "subject,t,level,intensity,response";

inline void write_trials(std::ostream& out, const Dataset& data, bool with_alpha = false) {
    out << kTrialHeader << (with_alpha ? ",alpha" : "") << '\n';
    for (const auto& subject : data) {
        for (const auto& r : subject.records) {
            out << r.subject << ',' << r.t << ',' << r.level << ',' << format_double(r.intensity) << ','
                << r.response;
            if (with_alpha) out << ',' << format_double(subject.effect.value);
            out << '\n';
        }
    }
}

// Reads a trial file into subjects ordered by first appearance; records within
// a subject are sorted by t. An `alpha` column, when present, is kept in
// SubjectData::effect.value.
inline Dataset read_trials(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ContractViolation("trial csv: empty input");
    const std::string header(trim(line));
    const bool with_alpha = header == std::string(kTrialHeader) + ",alpha";
    if (header != kTrialHeader && !with_alpha)
        throw ContractViolation("trial csv: unexpected header '" + header + "'");

    Dataset data;
    std::map<int, std::size_t> index;  // subject id -> position
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split(line, ',');
        const std::string ctx = "trial csv line " + std::to_string(line_no);
        if (fields.size() != (with_alpha ? 6u : 5u)) throw ContractViolation(ctx + ": wrong field count");
        TrialRecord r;
        r.subject = parse_int<int>(fields[0], ctx);
        r.t = parse_int<int>(fields[1], ctx);
        r.level = parse_int<int>(fields[2], ctx);
        r.intensity = parse_double(fields[3], ctx);
        r.response = parse_int<int>(fields[4], ctx);
        if (r.response != 0 && r.response != 1) throw ContractViolation(ctx + ": response must be 0 or 1");
        if (r.level < 1) throw ContractViolation(ctx + ": level must be >= 1");

        const auto [it, inserted] = index.try_emplace(r.subject, data.size());
        const std::size_t pos = it->second;
        if (inserted) {
            data.push_back({});
            data.back().subject = r.subject;
        }
        if (with_alpha) data[pos].effect.value = parse_double(fields[5], ctx);
        data[pos].records.push_back(r);
    }
    for (auto& s : data)
        std::stable_sort(s.records.begin(), s.records.end(),
                         [](const TrialRecord& x, const TrialRecord& y) { return x.t < y.t; });
    return data;
}

}  // namespace updown
