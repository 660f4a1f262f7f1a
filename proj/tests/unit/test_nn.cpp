#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "relsynth/nn.hpp"

using namespace relsynth;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, RandomStream& rng, double lo = -1.0,
                     double hi = 1.0) {
    Matrix m(r, c);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = lo + (hi - lo) * rng.uniform();
    return m;
}

/// KL(N(mu, sigma^2) || N(0, 1)) by composite Simpson quadrature over a wide
/// bracket; independent of the closed form under test.
double kl_quadrature(double mu, double logvar) {
    const double sigma = std::exp(0.5 * logvar);
    const double lo = mu - 14.0 * sigma - 14.0;
    const double hi = mu + 14.0 * sigma + 14.0;
    const int n = 1 << 15;  // intervals, even
    const double h = (hi - lo) / n;
    auto integrand = [&](double x) {
        const double p = std::exp(-0.5 * (x - mu) * (x - mu) / (sigma * sigma)) /
                         (sigma * std::sqrt(2.0 * M_PI));
        if (p <= 0.0) return 0.0;
        const double log_p = -0.5 * (x - mu) * (x - mu) / (sigma * sigma) - std::log(sigma) -
                             0.5 * std::log(2.0 * M_PI);
        const double log_q = -0.5 * x * x - 0.5 * std::log(2.0 * M_PI);
        return p * (log_p - log_q);
    };
    double acc = integrand(lo) + integrand(hi);
    for (int i = 1; i < n; ++i) acc += integrand(lo + i * h) * (i % 2 ? 4.0 : 2.0);
    return acc * h / 3.0;
}

}  // namespace

TEST_CASE("closed-form kl matches quadrature on 50 random gaussian heads") {
    RandomStream rng(404);
    for (int i = 0; i < 50; ++i) {
        const double mu = -3.0 + 6.0 * rng.uniform();
        const double logvar = -2.0 + 4.0 * rng.uniform();
        Matrix m(1, 1, mu), lv(1, 1, logvar);
        const double closed = kl_to_standard_normal(m, lv);
        const double numeric = kl_quadrature(mu, logvar);
        CHECK(std::fabs(closed - numeric) <= 1e-6);

        Tape tape;
        const double on_tape =
            tape.value(tape.kl_standard_normal(tape.leaf(m), tape.leaf(lv)))(0, 0);
        CHECK(on_tape == closed);
    }
}

TEST_CASE("kl of the standard normal is exactly zero") {
    CHECK(kl_to_standard_normal(Matrix(3, 2), Matrix(3, 2)) == 0.0);
}

TEST_CASE("reparameterized samples have the head's moments") {
    Matrix mu(1, 1, 0.7);
    Matrix logvar(1, 1, std::log(0.25));
    RandomStream rng(555);
    const int n = 100000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = sample_reparameterized(mu, logvar, rng)(0, 0);
        sum += z;
        sq += z * z;
    }
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    CHECK(std::fabs(mean - 0.7) < 0.01);
    CHECK(std::fabs(var - 0.25) < 0.01);
}

TEST_CASE("a gru cell with zero parameters halves its state") {
    ParamSet params;
    RandomStream rng(66);
    GruCell cell = make_gru(params, "g", 3, 3, rng);
    for (std::size_t i = 0; i < params.count(); ++i) params.value(i).fill(0.0);

    Matrix x = random_matrix(4, 3, rng);
    Matrix h = random_matrix(4, 3, rng);
    Tape tape;
    std::vector<Tape::NodeId> bound = bind_params(tape, params);
    Matrix out = tape.value(gru_forward(tape, bound, cell, tape.leaf(x), tape.leaf(h)));
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out.data()[i] == 0.5 * h.data()[i]);
}

TEST_CASE("an identity linear layer reproduces its input") {
    ParamSet params;
    RandomStream rng(67);
    LinearLayer layer = make_linear(params, "lin", 3, 3, rng);
    Matrix& w = params.value(layer.w);
    w.fill(0.0);
    for (std::size_t i = 0; i < 3; ++i) w(i, i) = 1.0;
    params.value(layer.b).fill(0.0);

    Matrix x = random_matrix(5, 3, rng);
    Tape tape;
    std::vector<Tape::NodeId> bound = bind_params(tape, params);
    Matrix out = tape.value(linear_forward(tape, bound, layer, tape.leaf(x)));
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out.data()[i] == x.data()[i]);
}

TEST_CASE("linear and gru layers pass finite-difference checks") {
    ParamSet params;
    RandomStream rng(68);
    LinearLayer lin = make_linear(params, "lin", 3, 2, rng);
    GruCell gru = make_gru(params, "gru", 2, 2, rng);
    Matrix x = random_matrix(4, 3, rng);
    Matrix h0 = random_matrix(4, 2, rng);

    auto loss_value = [&]() {
        Tape tape;
        std::vector<Tape::NodeId> bound = bind_params(tape, params);
        Tape::NodeId xin = tape.tanh(linear_forward(tape, bound, lin, tape.leaf(x)));
        Tape::NodeId out = gru_forward(tape, bound, gru, xin, tape.leaf(h0));
        return tape.value(tape.sum_all(tape.hadamard(out, out)))(0, 0);
    };

    Tape tape;
    std::vector<Tape::NodeId> bound = bind_params(tape, params);
    Tape::NodeId xin = tape.tanh(linear_forward(tape, bound, lin, tape.leaf(x)));
    Tape::NodeId out = gru_forward(tape, bound, gru, xin, tape.leaf(h0));
    tape.backward(tape.sum_all(tape.hadamard(out, out)));

    const double hstep = 1e-5;
    for (std::size_t p = 0; p < params.count(); ++p) {
        const Matrix analytic = tape.grad(bound[p]);
        for (std::size_t i = 0; i < params.value(p).size(); ++i) {
            double& entry = params.value(p).data()[i];
            const double keep = entry;
            entry = keep + hstep;
            const double up = loss_value();
            entry = keep - hstep;
            const double down = loss_value();
            entry = keep;
            const double fd = (up - down) / (2.0 * hstep);
            const double got = analytic.data()[i];
            const double scale = std::max({1.0, std::fabs(fd), std::fabs(got)});
            INFO(params.name(p), " entry ", i);
            CHECK(std::fabs(fd - got) / scale < 1e-4);
        }
    }
}

TEST_CASE("adam walks a quadratic bowl to its bottom") {
    ParamSet params;
    Matrix start(2, 3);
    for (std::size_t i = 0; i < start.size(); ++i) start.data()[i] = 1.5 - 0.4 * i;
    params.add("x", start);

    Matrix target(2, 3);
    for (std::size_t i = 0; i < target.size(); ++i) target.data()[i] = 0.3 * i - 0.8;
    Matrix ones(1, 3, 1.0);

    AdamOptimizer opt(0.01);
    for (int step = 0; step < 2000; ++step) {
        Tape tape;
        std::vector<Tape::NodeId> bound = bind_params(tape, params);
        tape.backward(tape.weighted_squared_error(bound[0], target, ones));
        opt.step(params, tape, bound);
    }
    for (std::size_t i = 0; i < target.size(); ++i)
        CHECK(std::fabs(params.value(0).data()[i] - target.data()[i]) < 1e-3);
}

TEST_CASE("adam refuses non-finite gradients before touching parameters") {
    ParamSet params;
    params.add("logvar", Matrix(1, 1, 710.0));  // exp overflows to inf
    const double before = params.value(0)(0, 0);

    Tape tape;
    std::vector<Tape::NodeId> bound = bind_params(tape, params);
    Tape::NodeId loss = tape.kl_standard_normal(tape.leaf(Matrix(1, 1, 0.0)), bound[0]);
    tape.backward(loss);

    AdamOptimizer opt;
    CHECK_THROWS_AS(opt.step(params, tape, bound), NonFiniteGradient);
    CHECK(params.value(0)(0, 0) == before);
}

TEST_CASE("param sets keep names, order, and scalar counts") {
    ParamSet params;
    const std::size_t a = params.add("alpha", Matrix(2, 3));
    const std::size_t b = params.add("beta", Matrix(1, 4));
    CHECK(a == 0);
    CHECK(b == 1);
    CHECK(params.count() == 2);
    CHECK(params.name(0) == "alpha");
    CHECK(params.name(1) == "beta");
    CHECK(params.scalar_count() == 10);
}
