#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "updown/csv.hpp"

using namespace updown;

namespace {

Dataset sample(Scheme scheme) {
    ScenarioConfig c;
    c.scheme = scheme;
    c.effect = has_random_effect(scheme) ? EffectKind::gaussian : EffectKind::none;
    c.N = 7;
    c.T = 9;
    return simulate_dataset(c, {31, 2});
}

}  // namespace

TEST(FormatDouble, RoundTripsAndSpecialValues) {
    for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 0.12000000000000002, 1e300}) EXPECT_EQ(parse_double(format_double(x), "x"), x);
    EXPECT_EQ(format_double(std::nan("")), "NA");
    EXPECT_TRUE(std::isnan(parse_double("NA", "x")));
}

TEST(TrialCsv, RoundTripIsFieldExact) {
    for (auto scheme : {Scheme::FD, Scheme::UDr}) {
        const Dataset data = sample(scheme);
        std::stringstream buf;
        write_trials(buf, data);
        const std::string first = buf.str();
        EXPECT_EQ(first.substr(0, first.find('\n')), kTrialHeader);
        const Dataset back = read_trials(buf);
        ASSERT_EQ(back.size(), data.size());
        for (std::size_t i = 0; i < data.size(); ++i) {
            ASSERT_EQ(back[i].records.size(), data[i].records.size());
            for (std::size_t t = 0; t < data[i].records.size(); ++t) {
                const auto& a = data[i].records[t];
                const auto& b = back[i].records[t];
                EXPECT_EQ(a.subject, b.subject);
                EXPECT_EQ(a.t, b.t);
                EXPECT_EQ(a.level, b.level);
                EXPECT_EQ(a.intensity, b.intensity);
                EXPECT_EQ(a.response, b.response);
            }
        }
        std::stringstream again;
        write_trials(again, back);
        EXPECT_EQ(again.str(), first);
    }
}

TEST(TrialCsv, AlphaColumnOnlyOnRequest) {
    const Dataset data = sample(Scheme::FDr);
    std::stringstream plain, oracle;
    write_trials(plain, data);
    write_trials(oracle, data, true);
    EXPECT_EQ(plain.str().find("alpha"), std::string::npos);
    EXPECT_EQ(oracle.str().substr(0, oracle.str().find('\n')), std::string(kTrialHeader) + ",alpha");
    const Dataset back = read_trials(oracle);
    for (std::size_t i = 0; i < data.size(); ++i) EXPECT_EQ(back[i].effect.value, data[i].effect.value);
}

TEST(TrialCsv, SortsByTrialWithinSubject) {
    std::stringstream in("subject,t,level,intensity,response\n2,2,1,0.1,1\n1,1,2,0.2,0\n2,1,3,0.3,0\n");
    const Dataset d = read_trials(in);
    ASSERT_EQ(d.size(), 2u);
    EXPECT_EQ(d[0].subject, 2);
    EXPECT_EQ(d[0].records[0].t, 1);
    EXPECT_EQ(d[0].records[1].t, 2);
}

TEST(TrialCsv, ErrorsNameTheLine) {
    auto message = [](const std::string& text) {
        std::stringstream in(text);
        try {
            read_trials(in);
        } catch (const ContractViolation& e) {
            return std::string(e.what());
        }
        return std::string("no error");
    };
    EXPECT_NE(message("subject,t,level,intensity,response\n1,1,1,0.1,1\n1,2,1,0.1,2\n").find("line 3"),
              std::string::npos);
    EXPECT_NE(message("subject,t,level,intensity,response\n1,1,1,zz,1\n").find("line 2"), std::string::npos);
    EXPECT_NE(message("subject,t,level,intensity,response\n1,1,1\n").find("field count"), std::string::npos);
    EXPECT_NE(message("a,b,c\n").find("header"), std::string::npos);
    EXPECT_NE(message("").find("empty"), std::string::npos);
}
