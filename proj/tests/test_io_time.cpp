#include <gtest/gtest.h>

#include <filesystem>
#include <random>
#include <sstream>

#include "scalarforge/sfld.hpp"
#include "scalarforge/time_series.hpp"

using namespace sf;

TEST(Sfld, RoundTripSeries) {
    Grid g(16);
    std::mt19937_64 rng(4);
    std::normal_distribution<double> nd;
    std::vector<Field> rec;
    for (int k = 0; k < 3; ++k) {
        Field f(g);
        for (auto& x : f.v) x = nd(rng);
        rec.push_back(f);
    }
    auto path = (std::filesystem::temp_directory_path() / "sf_roundtrip.sfld").string();
    sfld::save(path, rec);
    auto back = sfld::load(path);
    ASSERT_EQ(back.size(), 3u);
    for (int k = 0; k < 3; ++k) EXPECT_EQ(back[k].v, rec[k].v);
    EXPECT_EQ(std::filesystem::file_size(path), 3 * (16 + 16 * 16 * 8));
    std::filesystem::remove(path);
}

TEST(Sfld, HeaderLayout) {
    std::ostringstream os;
    sfld::write(os, Field(Grid(8), 1.5));
    std::string s = os.str();
    ASSERT_EQ(s.size(), 16u + 64 * 8);
    EXPECT_EQ(s.substr(0, 4), "SFLD");
    EXPECT_EQ(s[4], 1);
    EXPECT_EQ(s[8], 8);
    EXPECT_EQ(s[12], 2);
}

TEST(Sfld, RejectsBadInput) {
    std::istringstream bad("XXXX0000");
    Field f;
    EXPECT_THROW(sfld::read(bad, f), IoError);
    std::ostringstream os;
    sfld::write(os, Field(Grid(8), 1.0));
    std::string s = os.str();
    std::istringstream cut(s.substr(0, s.size() - 5));
    EXPECT_THROW(sfld::read(cut, f), IoError);
    std::string v2 = s;
    v2[4] = 2;
    std::istringstream ver(v2);
    EXPECT_THROW(sfld::read(ver, f), IoError);
    EXPECT_THROW(sfld::load("/nonexistent/dir/x.sfld"), IoError);
}

TEST(TimeDerivative, FourthOrderOnSine) {
    std::vector<double> errs;
    for (int m : {20, 40}) {
        TimeAxis ax = TimeAxis::covering(0.0, 1.0, m + 1);
        std::vector<double> v(ax.count);
        for (int i = 0; i < ax.count; ++i) v[i] = std::sin(3 * ax.t(i));
        double e = 0;
        for (int i = 0; i < ax.count; ++i) e = std::max(e, std::abs(ddt(v, ax, i) - 3 * std::cos(3 * ax.t(i))));
        errs.push_back(e);
    }
    EXPECT_NEAR(std::log2(errs[0] / errs[1]), 4.0, 0.35);
}

TEST(TimeDerivative, ExactOnQuartics) {
    TimeAxis ax{0.3, 0.1, 7};
    std::vector<double> v(ax.count);
    for (int i = 0; i < ax.count; ++i) v[i] = std::pow(ax.t(i), 4) - ax.t(i);
    for (int i = 0; i < ax.count; ++i) EXPECT_NEAR(ddt(v, ax, i), 4 * std::pow(ax.t(i), 3) - 1, 1e-11);
}

TEST(TimeDerivative, ShortAxes) {
    TimeAxis three{0, 0.5, 3};
    std::vector<double> v{0, 0.25, 1.0};  // t^2
    EXPECT_NEAR(ddt(v, three, 0), 0.0, 1e-14);
    EXPECT_NEAR(ddt(v, three, 1), 1.0, 1e-14);
    EXPECT_NEAR(ddt(v, three, 2), 2.0, 1e-14);
    EXPECT_THROW(ddt_stencil(TimeAxis{0, 1, 2}, 0), TimeRange);
    EXPECT_THROW(TimeAxis::covering(1, 0, 5), TimeRange);
}

TEST(TimeDerivative, FieldsUseSameWeights) {
    Grid g(8);
    TimeAxis ax{0, 0.25, 6};
    std::vector<Field> s;
    std::vector<double> v;
    for (int i = 0; i < ax.count; ++i) {
        s.push_back(Field(g, std::exp(ax.t(i))));
        v.push_back(std::exp(ax.t(i)));
    }
    for (int i = 0; i < ax.count; ++i) EXPECT_EQ(ddt(s, ax, i).v[5], ddt(v, ax, i));
}
