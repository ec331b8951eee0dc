#include <doctest.h>

#include <Eigen/Sparse>

#include "flex/conic.hpp"

using namespace flex::conic;

namespace {

ConeProblem lp_problem(int n, int m, const std::vector<Eigen::Triplet<double>>& g,
                       const std::vector<double>& h, const std::vector<double>& c) {
    ConeProblem p;
    p.n = n;
    p.n_lp = m;
    p.A.resize(0, n);
    p.G.resize(m, n);
    p.G.setFromTriplets(g.begin(), g.end());
    p.h = Eigen::Map<const Eigen::VectorXd>(h.data(), m);
    p.c = Eigen::Map<const Eigen::VectorXd>(c.data(), n);
    p.b.resize(0);
    return p;
}

}  // namespace

TEST_CASE("one-variable LP: maximize x subject to x <= 2") {
    // min -x s.t. x <= 2
    auto p = lp_problem(1, 1, {{0, 0, 1.0}}, {2.0}, {-1.0});
    const ConeSolution sol = solve_cone_program(p);
    REQUIRE(sol.status == ConeStatus::Optimal);
    CHECK(sol.x(0) == doctest::Approx(2.0).epsilon(1e-7));
}

TEST_CASE("unit disk: maximize x subject to ||(x,y)|| <= 1") {
    ConeProblem p;
    p.n = 2;
    p.n_lp = 0;
    p.soc_dims = {3};
    p.A.resize(0, 2);
    p.b.resize(0);
    std::vector<Eigen::Triplet<double>> g{{1, 0, -1.0}, {2, 1, -1.0}};
    p.G.resize(3, 2);
    p.G.setFromTriplets(g.begin(), g.end());
    p.h.resize(3);
    p.h << 1.0, 0.0, 0.0;
    p.c.resize(2);
    p.c << -1.0, 0.0;
    const ConeSolution sol = solve_cone_program(p);
    REQUIRE(sol.status == ConeStatus::Optimal);
    CHECK(sol.x(0) == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(sol.x(1) == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("equality plus nonnegativity") {
    // max x + y s.t. x + y = 1, x >= 0, y >= 0  ->  objective 1
    ConeProblem p;
    p.n = 2;
    p.n_lp = 2;
    std::vector<Eigen::Triplet<double>> a{{0, 0, 1.0}, {0, 1, 1.0}};
    p.A.resize(1, 2);
    p.A.setFromTriplets(a.begin(), a.end());
    p.b.resize(1);
    p.b << 1.0;
    std::vector<Eigen::Triplet<double>> g{{0, 0, -1.0}, {1, 1, -1.0}};
    p.G.resize(2, 2);
    p.G.setFromTriplets(g.begin(), g.end());
    p.h.resize(2);
    p.h << 0.0, 0.0;
    p.c.resize(2);
    p.c << -1.0, -1.0;
    const ConeSolution sol = solve_cone_program(p);
    REQUIRE(sol.status == ConeStatus::Optimal);
    CHECK(-sol.objective == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("infeasible bounds produce a Farkas verdict") {
    // x <= 1 and -x <= -2
    auto p = lp_problem(1, 2, {{0, 0, 1.0}, {1, 0, -1.0}}, {1.0, -2.0}, {0.0});
    const ConeSolution sol = solve_cone_program(p);
    CHECK(sol.status == ConeStatus::PrimalInfeasible);
}

TEST_CASE("unbounded objective is flagged dual-infeasible") {
    // max x s.t. x >= 0
    auto p = lp_problem(1, 1, {{0, 0, -1.0}}, {0.0}, {-1.0});
    const ConeSolution sol = solve_cone_program(p);
    CHECK(sol.status == ConeStatus::DualInfeasible);
}

TEST_CASE("rotated-cone feasibility via SOC rows") {
    // max p s.t. (l+v, l-v, 2p) in SOC, l = 4, v = 1  ->  p = 2
    ConeProblem p;
    p.n = 3;  // l, v, p
    p.n_lp = 0;
    p.soc_dims = {3};
    std::vector<Eigen::Triplet<double>> a{{0, 0, 1.0}, {1, 1, 1.0}};
    p.A.resize(2, 3);
    p.A.setFromTriplets(a.begin(), a.end());
    p.b.resize(2);
    p.b << 4.0, 1.0;
    std::vector<Eigen::Triplet<double>> g{
        {0, 0, -1.0}, {0, 1, -1.0}, {1, 0, -1.0}, {1, 1, 1.0}, {2, 2, -2.0}};
    p.G.resize(3, 3);
    p.G.setFromTriplets(g.begin(), g.end());
    p.h.setZero(3);
    p.c.resize(3);
    p.c << 0.0, 0.0, -1.0;
    const ConeSolution sol = solve_cone_program(p);
    REQUIRE(sol.status == ConeStatus::Optimal);
    CHECK(sol.x(2) == doctest::Approx(2.0).epsilon(1e-7));
}

TEST_CASE("determinism: identical problems give identical results") {
    ConeProblem p;
    p.n = 2;
    p.n_lp = 1;
    p.soc_dims = {3};
    std::vector<Eigen::Triplet<double>> g{
        {0, 1, -1.0}, {2, 0, -1.0}, {3, 1, -1.0}};
    p.G.resize(4, 2);
    p.G.setFromTriplets(g.begin(), g.end());
    p.h.resize(4);
    p.h << 0.7, 1.0, 0.0, 0.0;
    p.A.resize(0, 2);
    p.b.resize(0);
    p.c.resize(2);
    p.c << -1.0, -0.3;
    const ConeSolution a = solve_cone_program(p);
    const ConeSolution b = solve_cone_program(p);
    REQUIRE(a.status == ConeStatus::Optimal);
    CHECK(a.objective == b.objective);  // bitwise: same fixed iteration path
    CHECK(a.iterations == b.iterations);
    CHECK(a.x(0) == b.x(0));
}
