#include <catch_amalgamated.hpp>

#include <numbers>
#include <set>

#include "oracles.hpp"
#include "otevs/pauli.hpp"

using namespace otevs;
using Catch::Matchers::WithinAbs;

namespace {

auto binomial(std::size_t n, std::size_t k) -> std::size_t {
    std::size_t r = 1;
    for (std::size_t i = 1; i <= k; ++i) {
        r = r * (n - k + i) / i;
    }
    return r;
}

} // namespace

TEST_CASE("k-local counts follow the closed form") {
    for (std::size_t n = 1; n <= 12; ++n) {
        for (std::size_t k = 0; k <= std::min<std::size_t>(3, n); ++k) {
            std::size_t expect = 0;
            for (std::size_t j = 0; j <= k; ++j) {
                expect += binomial(n, j) * static_cast<std::size_t>(std::pow(3, j));
            }
            const auto basis = enumerate_klocal(n, k);
            CHECK(basis.size() == expect);
            CHECK(klocal_count(n, k) == expect);
        }
    }
    CHECK(enumerate_klocal(8, 1).size() == 25);
    CHECK(enumerate_klocal(11, 2).size() == 529);
    CHECK(enumerate_klocal(1, 0).size() == 1);
    CHECK(enumerate_klocal(1, 0)[0].is_identity());
}

TEST_CASE("enumeration is unique, bounded in weight and ordered") {
    const auto basis = enumerate_klocal(4, 2);
    std::set<std::string> seen;
    std::size_t last_weight = 0;
    for (const auto &p : basis.strings()) {
        CHECK(p.weight() <= 2);
        CHECK(p.weight() >= last_weight);
        last_weight = p.weight();
        CHECK(seen.insert(p.str()).second);
    }
    CHECK(basis[0].is_identity());
    CHECK(basis[1].str() == "XIII");
    CHECK(basis[2].str() == "YIII");
    CHECK(basis[3].str() == "ZIII");
    CHECK(basis[4].str() == "IXII");
    CHECK(basis[13].str() == "XXII");
    CHECK(basis[14].str() == "XYII");
    CHECK(enumerate_klocal(4, 2).strings().size() == basis.size());
    CHECK_THROWS_AS(enumerate_klocal(2, 3), std::invalid_argument);
}

TEST_CASE("string parsing, support and masks") {
    const auto p = PauliString::parse("IXZY");
    CHECK(p.str() == "IXZY");
    CHECK(p.weight() == 3);
    CHECK(p.support() == std::vector<std::size_t>{1, 2, 3});
    CHECK(p.x_mask() == 0b1010);
    CHECK(p.z_mask() == 0b1100);
    CHECK(p.y_count() == 1);
    CHECK(PauliString::parse("IIII").is_identity());
    CHECK_THROWS(PauliString::parse("IXQ"));
}

TEST_CASE("expectation basics") {
    const StateVector zero(3);
    CHECK(expectation(zero, PauliString::parse("ZIZ")) == 1.0);
    CHECK(expectation(zero, PauliString::parse("ZZZ")) == 1.0);
    CHECK(expectation(zero, PauliString::parse("XII")) == 0.0);
    CHECK(expectation(zero, PauliString::parse("IYZ")) == 0.0);
    CHECK(expectation(zero, PauliString::identity(3)) == 1.0);
    CHECK_THROWS_AS(expectation(zero, PauliString::parse("ZZ")), std::invalid_argument);
}

TEST_CASE("product-state closed form: <X> after RY(t + z) is sin(t + z)") {
    const double t1 = 0.3, t2 = -1.1, z1 = 0.9, z2 = 2.0;
    StateVector s(2);
    apply_gate_inplace(s, Gate::ry(0, z1 + t1));
    apply_gate_inplace(s, Gate::ry(1, z2 + t2));
    CHECK_THAT(expectation(s, PauliString::parse("XI")), WithinAbs(std::sin(t1 + z1), 1e-14));
    CHECK_THAT(expectation(s, PauliString::parse("IX")), WithinAbs(std::sin(t2 + z2), 1e-14));
    // product state: <XX> = <XI><IX>
    CHECK_THAT(expectation(s, PauliString::parse("XX")), WithinAbs(std::sin(t1 + z1) * std::sin(t2 + z2), 1e-14));
}

TEST_CASE("expectation agrees with the dense-matrix oracle") {
    auto rng = make_stream(11);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t n = 1 + static_cast<std::size_t>(trial % 4);
        const auto s = oracle::random_state(n, rng);
        const auto p = oracle::random_pauli(n, rng);
        CHECK_THAT(expectation(s, p), WithinAbs(oracle::dense_expectation(s, p), 1e-12));
    }
}

TEST_CASE("expectations are bounded by one") {
    auto rng = make_stream(12);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + static_cast<std::size_t>(trial % 5);
        const auto s = oracle::random_state(n, rng);
        CHECK(std::abs(expectation(s, oracle::random_pauli(n, rng))) <= 1.0 + 1e-12);
    }
}

TEST_CASE("single-qubit and disjoint products") {
    const auto xx = pauli_product(PauliString::parse("X"), PauliString::parse("X"));
    CHECK(xx.phase() == Complex(1, 0));
    CHECK(xx.string.is_identity());
    const auto xy = pauli_product(PauliString::parse("X"), PauliString::parse("Y"));
    CHECK(xy.phase() == Complex(0, 1));
    CHECK(xy.string.str() == "Z");
    const auto yx = pauli_product(PauliString::parse("Y"), PauliString::parse("X"));
    CHECK(yx.phase() == Complex(0, -1));
    const auto disjoint = pauli_product(PauliString::parse("XI"), PauliString::parse("IZ"));
    CHECK(disjoint.phase() == Complex(1, 0));
    CHECK(disjoint.string.str() == "XZ");
}

TEST_CASE("products agree with dense matrix multiplication") {
    auto rng = make_stream(13);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + static_cast<std::size_t>(trial % 3);
        const auto a = oracle::random_pauli(n, rng);
        const auto b = oracle::random_pauli(n, rng);
        const auto prod = pauli_product(a, b);
        const oracle::CMat expect = oracle::dense_pauli(a) * oracle::dense_pauli(b);
        const oracle::CMat got = prod.phase() * oracle::dense_pauli(prod.string);
        CHECK((expect - got).cwiseAbs().maxCoeff() < 1e-15);
    }
}

TEST_CASE("pair expectations") {
    auto rng = make_stream(14);
    const auto s = oracle::random_state(3, rng);
    const auto p = PauliString::parse("XZI");
    CHECK_THAT(pair_expectation(s, p, p), WithinAbs(1.0, 1e-14));
    CHECK_THAT(pair_expectation(s, PauliString::identity(3), p), WithinAbs(expectation(s, p), 1e-15));

    // disjoint support against an explicit dense product
    const auto a = PauliString::parse("XII");
    const auto b = PauliString::parse("IYZ");
    const oracle::CVec v = oracle::to_eigen(s);
    const double dense = (v.adjoint() * oracle::dense_pauli(a) * oracle::dense_pauli(b) * v)(0, 0).real();
    CHECK_THAT(pair_expectation(s, a, b), WithinAbs(dense, 1e-12));

    CHECK_THROWS_AS(pair_expectation(s, PauliString::parse("XII"), PauliString::parse("YII")), std::domain_error);
}
