#include "rsgnet/networks.hpp"

#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "test_util.hpp"

using namespace rsgnet;
using namespace rsgnet::testutil;

TEST_CASE("sigmoid values and symmetry") {
    CHECK(sigmoid(0.0) == 0.5);
    CHECK(sigmoid(1.0) == doctest::Approx(0.7310585786300049).epsilon(1e-14));
    Rng rng(7);
    for (int i = 0; i < 200; ++i) {
        // strict interior holds on the range doubles can resolve (~|t| < 36.7)
        const double t = uniform_range(rng, -30.0, 30.0);
        CHECK(sigmoid(t) + sigmoid(-t) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(sigmoid(t) > 0.0);
        CHECK(sigmoid(t) < 1.0);
    }
    // graceful saturation: clamps to the endpoints, never overflows
    CHECK(sigmoid(800.0) == 1.0);
    CHECK(sigmoid(-800.0) == 0.0);
    CHECK(std::isfinite(sigmoid(1e308)));
    CHECK(std::isfinite(sigmoid(-1e308)));
    Vector v(2);
    v << -3.0, 3.0;
    const Vector s = sigmoid(v);
    CHECK(s[0] == doctest::Approx(1.0 - s[1]).epsilon(1e-14));
}

TEST_CASE("single-layer loss and gradient") {
    SUBCASE("zero weights match the half target exactly") {
        WeightMatrix w{Matrix::Zero(3, 4), std::nullopt};
        Sample s{Vector::Constant(4, 0.3), Vector::Constant(3, 0.5)};
        const auto lg = loss_and_grad_1nn(w, s);
        CHECK(lg.loss == 0.0);
        CHECK(lg.grad.isZero(0.0));
    }
    SUBCASE("zero weights against target one give d_y/4") {
        WeightMatrix w{Matrix::Zero(3, 5), std::nullopt};
        Sample s{Vector::Constant(5, 0.9), Vector::Ones(3)};
        const auto lg = loss_and_grad_1nn(w, s);
        CHECK(lg.loss == doctest::Approx(0.25 * 3).epsilon(1e-15));
    }
    SUBCASE("matches finite differences") {
        Rng rng(11);
        WeightMatrix w{random_matrix(3, 6, 1.0, rng), std::nullopt};
        Sample s{random_unit_vector(6, rng), random_unit_vector(3, rng)};
        const auto lg = loss_and_grad_1nn(w, s);
        const Matrix fd = fd_gradient(w.entries, [&](const Matrix& m) {
            return loss_and_grad_1nn(WeightMatrix{m, std::nullopt}, s).loss;
        });
        CHECK(rel_error(lg.grad, fd) < 1e-5);
    }
    SUBCASE("shape mismatch throws") {
        WeightMatrix w{Matrix::Zero(3, 4), std::nullopt};
        Sample s{Vector::Zero(5), Vector::Zero(3)};
        CHECK_THROWS_AS(loss_and_grad_1nn(w, s), std::invalid_argument);
    }
}

TEST_CASE("corrupt draws reproducible Bernoulli masks") {
    Rng rng(21);
    const Vector x = random_unit_vector(12, rng);

    SUBCASE("keep_prob 1 returns x and consumes no randomness") {
        Rng a(5), b(5);
        const auto [xt, mask] = corrupt(x, 1.0, a);
        CHECK(xt == x);
        CHECK(mask.bits.isOnes());
        CHECK(a() == b());  // stream untouched
    }
    SUBCASE("mask mean near keep_prob") {
        Rng r(123);
        long long kept = 0;
        const int draws = 100000;
        for (int i = 0; i < draws; ++i) {
            const auto m = sample_mask(1, 0.5, r);
            kept += m.bits[0] > 0.5 ? 1 : 0;
        }
        const double mean = static_cast<double>(kept) / draws;
        CHECK(mean > 0.495);
        CHECK(mean < 0.505);
    }
    SUBCASE("same seed gives identical masks") {
        Rng a(9), b(9);
        const auto ma = corrupt(x, 0.4, a).second;
        const auto mb = corrupt(x, 0.4, b).second;
        CHECK(ma.bits == mb.bits);
    }
    SUBCASE("keep_prob outside (0,1] is rejected") {
        Rng r(1);
        CHECK_THROWS_AS(corrupt(x, 0.0, r), std::invalid_argument);
        CHECK_THROWS_AS(corrupt(x, 1.2, r), std::invalid_argument);
    }
}

TEST_CASE("denoising autoencoder loss and gradient") {
    Rng rng(31);
    SUBCASE("zero weights reconstruct 0.5 everywhere") {
        WeightMatrix w{Matrix::Zero(4, 6), 0.5};
        const Vector x = random_unit_vector(6, rng);
        const auto lg = loss_and_grad_da(w, x, ones_mask(6));
        double expected = 0.0;
        for (int j = 0; j < 6; ++j) expected += (x[j] - 0.5) * (x[j] - 0.5);
        CHECK(lg.loss == doctest::Approx(expected).epsilon(1e-14));
    }
    SUBCASE("zero input evaluates analytically") {
        WeightMatrix w{random_matrix(4, 6, 0.3, rng), 0.5};
        const auto lg = loss_and_grad_da(w, Vector::Zero(6), ones_mask(6));
        const Vector h = sigmoid(Vector(w.entries * Vector::Zero(6)));
        const Vector p = sigmoid(Vector(w.entries.transpose() * h));
        CHECK(lg.loss == doctest::Approx(p.squaredNorm()).epsilon(1e-14));
    }
    SUBCASE("tied-weight gradient matches finite differences") {
        Rng mrng(77);
        const Vector x = random_unit_vector(6, rng);
        const DropoutMask mask = sample_mask(6, 0.5, mrng);
        WeightMatrix w{random_matrix(4, 6, 0.8, rng), 2.0};
        const auto lg = loss_and_grad_da(w, x, mask);
        const Matrix fd = fd_gradient(w.entries, [&](const Matrix& m) {
            return loss_and_grad_da(WeightMatrix{m, 2.0}, x, mask).loss;
        });
        CHECK(rel_error(lg.grad, fd) < 1e-5);
    }
    SUBCASE("missing box limit is a configuration error") {
        WeightMatrix w{Matrix::Zero(4, 6), std::nullopt};
        CHECK_THROWS_AS(loss_and_grad_da(w, Vector::Zero(6), ones_mask(6)),
                        std::invalid_argument);
    }
}

TEST_CASE("multi-layer loss and gradient") {
    Rng rng(41);
    SUBCASE("L=1 with explicit ones mask equals the single-layer op bitwise") {
        WeightMatrix w{random_matrix(3, 5, 1.0, rng), std::nullopt};
        Sample s{random_unit_vector(5, rng), random_unit_vector(3, rng)};
        const auto single = loss_and_grad_1nn(w, s);
        const auto layered = loss_and_grad_lnn({w}, s, {ones_mask(5)});
        CHECK(single.loss == layered.loss);
        CHECK(single.grad == layered.grads[0]);
    }
    SUBCASE("dropped input units receive exactly zero gradient columns") {
        std::vector<WeightMatrix> params;
        params.push_back({random_matrix(4, 5, 1.0, rng), std::nullopt});
        params.push_back({random_matrix(2, 4, 1.0, rng), std::nullopt});
        Sample s{random_unit_vector(5, rng, 0.1, 0.9), random_unit_vector(2, rng, 0.1, 0.9)};
        Rng mrng(3);
        std::vector<DropoutMask> masks{sample_mask(5, 0.5, mrng), sample_mask(4, 0.5, mrng)};
        const auto lg = loss_and_grad_lnn(params, s, masks);
        for (std::size_t l = 0; l < masks.size(); ++l)
            for (Eigen::Index j = 0; j < masks[l].bits.size(); ++j) {
                if (masks[l].bits[j] == 0.0)
                    CHECK(lg.grads[l].col(j).isZero(0.0));
                else
                    CHECK(lg.grads[l].col(j).norm() > 0.0);
            }
    }
    SUBCASE("three-layer gradients match finite differences") {
        const std::vector<int> widths{5, 4, 4, 2};
        std::vector<WeightMatrix> params;
        for (std::size_t l = 0; l + 1 < widths.size(); ++l)
            params.push_back({random_matrix(widths[l + 1], widths[l], 1.0, rng), std::nullopt});
        Sample s{random_unit_vector(5, rng), random_unit_vector(2, rng)};
        Rng mrng(13);
        std::vector<DropoutMask> masks;
        for (std::size_t l = 0; l + 1 < widths.size(); ++l)
            masks.push_back(sample_mask(widths[l], 0.7, mrng));
        const auto lg = loss_and_grad_lnn(params, s, masks);
        for (std::size_t l = 0; l < params.size(); ++l) {
            const Matrix fd = fd_gradient(params[l].entries, [&](const Matrix& m) {
                auto probe = params;
                probe[l].entries = m;
                return loss_and_grad_lnn(probe, s, masks).loss;
            });
            CHECK(rel_error(lg.grads[l], fd) < 1e-5);
        }
    }
    SUBCASE("keep-everything masks match the unmasked path bitwise") {
        std::vector<WeightMatrix> params;
        params.push_back({random_matrix(4, 5, 1.0, rng), std::nullopt});
        params.push_back({random_matrix(2, 4, 1.0, rng), std::nullopt});
        Sample s{random_unit_vector(5, rng), random_unit_vector(2, rng)};
        const auto masked = loss_and_grad_lnn(params, s, {ones_mask(5), ones_mask(4)});
        const auto plain = loss_and_grad_lnn(params, s, {});
        CHECK(masked.loss == plain.loss);
        for (std::size_t l = 0; l < params.size(); ++l) CHECK(masked.grads[l] == plain.grads[l]);
    }
    SUBCASE("mask length mismatch throws") {
        std::vector<WeightMatrix> params{{random_matrix(3, 5, 1.0, rng), std::nullopt}};
        Sample s{random_unit_vector(5, rng), random_unit_vector(3, rng)};
        CHECK_THROWS_AS(loss_and_grad_lnn(params, s, {ones_mask(4)}), std::invalid_argument);
    }
}

TEST_CASE("box projection and gradient mapping") {
    Rng rng(51);
    SUBCASE("clipping") {
        WeightMatrix w{Matrix::Constant(1, 1, 0.5), 0.1};
        CHECK(project_box(w).entries(0, 0) == 0.1);
    }
    SUBCASE("identity inside the box and idempotence") {
        WeightMatrix w{random_matrix(4, 4, 0.09, rng), 0.1};
        CHECK(project_box(w).entries == w.entries);
        WeightMatrix wide{random_matrix(4, 4, 3.0, rng), 0.25};
        const auto once = project_box(wide);
        const auto twice = project_box(once);
        CHECK(once.entries == twice.entries);
        CHECK(once.entries.cwiseAbs().maxCoeff() <= 0.25);
    }
    SUBCASE("mapping equals the gradient on interior points") {
        WeightMatrix w{random_matrix(3, 3, 0.01, rng), 1.0};
        const Matrix g = random_matrix(3, 3, 0.5, rng);
        const Matrix mapped = gradient_mapping(w, g, 0.01);
        CHECK(rel_error(mapped, g) < 1e-12);
    }
    SUBCASE("boundary step pointing inward keeps the gradient") {
        WeightMatrix w{Matrix::Constant(2, 2, 0.1), 0.1};
        const Matrix g = Matrix::Constant(2, 2, 0.3);  // descent moves inward
        const Matrix mapped = gradient_mapping(w, g, 0.05);
        CHECK(rel_error(mapped, g) < 1e-12);
    }
    SUBCASE("fully clipped step yields a zero mapping entry") {
        WeightMatrix w{Matrix::Constant(1, 1, 0.1), 0.1};
        const Matrix g = Matrix::Constant(1, 1, -2.0);  // step exits through +w_m
        const Matrix mapped = gradient_mapping(w, g, 0.5);
        CHECK(mapped(0, 0) == 0.0);
    }
    SUBCASE("parameter errors") {
        WeightMatrix w{Matrix::Zero(1, 1), 0.1};
        CHECK_THROWS_AS(gradient_mapping(w, Matrix::Zero(1, 1), 0.0), std::invalid_argument);
        WeightMatrix unbounded{Matrix::Zero(1, 1), std::nullopt};
        CHECK_THROWS_AS(gradient_mapping(unbounded, Matrix::Zero(1, 1), 0.1),
                        std::invalid_argument);
        CHECK_THROWS_AS(project_box(unbounded), std::invalid_argument);
    }
    SUBCASE("entrywise clipping") {
        Matrix g(1, 3);
        g << -0.4, 0.02, 0.4;
        const Matrix clipped = clip_entries(g, 0.1);
        CHECK(clipped(0, 0) == -0.1);
        CHECK(clipped(0, 1) == 0.02);
        CHECK(clipped(0, 2) == 0.1);
    }
}

TEST_CASE("gradient checks across widths stay within tolerance") {
    // smaller version of the acceptance sweep, all three loss families
    Rng rng(61);
    for (int rep = 0; rep < 20; ++rep) {
        const int d_x = 1 + uniform_index(rng, 8);
        const int d_y = 1 + uniform_index(rng, 8);
        const int d_h = 1 + uniform_index(rng, 8);
        WeightMatrix w{random_matrix(d_y, d_x, 1.2, rng), std::nullopt};
        Sample s{random_unit_vector(d_x, rng), random_unit_vector(d_y, rng)};
        const auto lg = loss_and_grad_1nn(w, s);
        const Matrix fd = fd_gradient(w.entries, [&](const Matrix& m) {
            return loss_and_grad_1nn(WeightMatrix{m, std::nullopt}, s).loss;
        });
        CHECK(rel_error(lg.grad, fd) < 1e-4);

        WeightMatrix da{random_matrix(d_h, d_x, 1.2, rng), 5.0};
        Rng mrng(rep);
        const DropoutMask mask = sample_mask(d_x, 0.6, mrng);
        const auto dg = loss_and_grad_da(da, s.x, mask);
        const Matrix dfd = fd_gradient(da.entries, [&](const Matrix& m) {
            return loss_and_grad_da(WeightMatrix{m, 5.0}, s.x, mask).loss;
        });
        CHECK(rel_error(dg.grad, dfd) < 1e-4);
    }
}
