#include "caa/error.hpp"
#include "caa/report.hpp"

#include <gtest/gtest.h>

using namespace caa;

namespace {

auto count(std::string const& s, std::string const& needle) -> std::size_t
{
    std::size_t n = 0;
    for (auto p = s.find(needle); p != std::string::npos; p = s.find(needle, p + 1)) {
        ++n;
    }
    return n;
}

} // namespace

TEST(Csv, ParsesAndReportsRaggedLines)
{
    auto const t = parse_csv("a,b\r\n1,2\n\n3,4\n");
    EXPECT_EQ(t.header, (std::vector<std::string> { "a", "b" }));
    EXPECT_EQ(t.rows.size(), 2U);
    EXPECT_EQ(t.lines, (std::vector<std::size_t> { 2, 4 }));
    EXPECT_EQ(t.column("b"), 1);
    EXPECT_EQ(t.column("z"), -1);
    try {
        (void)parse_csv("a,b\n1,2\n3\n");
        FAIL();
    } catch (ParseError const& e) {
        EXPECT_EQ(e.position(), "line 3");
    }
}

TEST(Front, ReadsLastGenerationOnly)
{
    auto const pts = read_front("generation,robust_accuracy,complexity,genome\n0,0.5,10,1:0:0\n1,0.4,20,2:0:0\n1,0.6,0,6:0:0\n");
    ASSERT_EQ(pts.size(), 2U);
    EXPECT_DOUBLE_EQ(pts[0].robust_accuracy, 0.4);
    EXPECT_DOUBLE_EQ(pts[1].complexity, 0.0);
    auto const summary = read_front("robust_accuracy,clean_accuracy,examples,restarts,complexity,gradient_evals,queries\n0.3,0.8,10,1,5,5,0\n");
    ASSERT_EQ(summary.size(), 1U);
    EXPECT_TRUE(read_front("").empty());
    try {
        (void)read_front("robust_accuracy,complexity\n0.1,2\n1.2,3\n");
        FAIL();
    } catch (ParseError const& e) {
        EXPECT_EQ(e.position(), "line 3");
    }
    try {
        (void)read_front("robust_accuracy,complexity\nabc,2\n");
        FAIL();
    } catch (ParseError const& e) {
        EXPECT_EQ(e.position(), "line 2");
    }
    EXPECT_THROW((void)read_front("ra,cx\n0.1,2\n"), ParseError);
}

TEST(Svg, EmptyFrontHasAxesAndNoPoints)
{
    auto const svg = render_front_svg({});
    EXPECT_EQ(svg.rfind("<svg", 0), 0U);
    EXPECT_NE(svg.find("</svg>"), std::string::npos);
    EXPECT_EQ(count(svg, "<circle"), 0U);
    EXPECT_EQ(count(svg, "id=\"axes\""), 1U);
}

// Default canvas: plot area x in [70, 610], y in [30, 420].
TEST(Svg, TwoPointsLandOnHandScaledPixels)
{
    std::vector<FrontPoint> const pts { { 0.5, 100.0 }, { 1.0, 0.0 } };
    auto const svg = render_front_svg(pts);
    EXPECT_EQ(count(svg, "<circle"), 2U);
    EXPECT_NE(svg.find("<circle cx=\"610.00\" cy=\"225.00\""), std::string::npos);
    EXPECT_NE(svg.find("<circle cx=\"70.00\" cy=\"30.00\""), std::string::npos);
    auto const [x, y] = plot_position({ 0.0, 25.0 }, 100.0);
    EXPECT_DOUBLE_EQ(x, 205.0);
    EXPECT_DOUBLE_EQ(y, 420.0);
    EXPECT_EQ(render_front_svg(pts), svg);
}

TEST(Summary, FixedLayout)
{
    AttackSummary s;
    s.robust_accuracy = 0.25;
    s.clean_accuracy = 0.75;
    s.examples = 8;
    s.restarts = 2;
    s.complexity = 100;
    s.gradient_evals = 1600;
    s.queries = 0;
    EXPECT_EQ(attack_summary_csv(s),
        "robust_accuracy,clean_accuracy,examples,restarts,complexity,gradient_evals,queries\n0.250000,0.750000,8,2,100,1600,0\n");
}
