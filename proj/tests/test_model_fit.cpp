#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "doseadapt/model_fit.hpp"
#include "doseadapt/rng.hpp"

using namespace doseadapt;

namespace {

const std::vector<double> kEvoDoses = {0.0, 0.5, 1.0, 2.0};
const std::vector<double> kEvoMeans = {5.44, -8.40, -10.56, -20.16};

const std::vector<double> kBiomDoses = {0.0, 0.05, 0.2, 0.6, 1.0};
const std::vector<double> kBiomMeans = {0.345, 0.457, 0.810, 0.934, 0.949};

ModelAnchors evo_anchors() {
    return anchors_from_means(kEvoMeans, Direction::Decreasing);
}

// Closed-form least-squares slope for the models linear in theta:
// theta = sum(x*(y - e0)) / sum(x^2) with x = d or ln(d + 1).
double ls_slope(const std::vector<double>& doses, const std::vector<double>& means,
                double e0, bool log_dose) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < doses.size(); ++i) {
        const double x = log_dose ? std::log(doses[i] + 1.0) : doses[i];
        num += x * (means[i] - e0);
        den += x * x;
    }
    return num / den;
}

double aic_from_rss(double rss, int k, int p) {
    const double sigma2 = rss / k;
    const double loglik = -0.5 * k * std::log(2.0 * M_PI * sigma2) - 0.5 * k;
    return -2.0 * loglik + 2.0 * p;
}

std::vector<FitResult> fit_all(const std::vector<double>& doses,
                               const std::vector<double>& means, Direction direction) {
    auto anchors = anchors_from_means(means, direction);
    std::vector<FitResult> fits;
    for (ModelKind kind : {ModelKind::Emax, ModelKind::LinearLog, ModelKind::Linear,
                           ModelKind::Exponential, ModelKind::Quadratic, ModelKind::Logistic})
        fits.push_back(fit_model(kind, doses, means, anchors));
    return fits;
}

}  // namespace

TEST_CASE("anchors from means") {
    auto a = evo_anchors();
    CHECK(a.e0 == doctest::Approx(5.44));
    CHECK(a.emax_effect == doctest::Approx(-25.60));
    auto b = anchors_from_means(kBiomMeans, Direction::Increasing);
    CHECK(b.e0 == doctest::Approx(0.345));
    CHECK(b.emax_effect == doctest::Approx(0.604));
}

TEST_CASE("predict goldens") {
    ModelAnchors a{5.44, -25.6};
    std::vector<double> theta{-24.21};
    CHECK(predict(ModelKind::LinearLog, a, theta, 0.0) == doctest::Approx(5.44));
    CHECK(std::fabs(predict(ModelKind::LinearLog, a, theta, 1.0) - (-11.34)) < 0.01);
    std::vector<double> ed50{0.40};
    CHECK(predict(ModelKind::Emax, a, ed50, 2.0) ==
          doctest::Approx(5.44 - 25.6 * 2.0 / 2.4).epsilon(1e-12));
    CHECK(std::fabs(predict(ModelKind::Emax, a, ed50, 2.0) - (-15.89)) < 0.01);
}

TEST_CASE("predict anchors at dose zero") {
    ModelAnchors a{3.5, 2.0};
    CHECK(predict(ModelKind::Emax, a, std::vector<double>{0.7}, 0.0) == doctest::Approx(3.5));
    CHECK(predict(ModelKind::LinearLog, a, std::vector<double>{1.3}, 0.0) == doctest::Approx(3.5));
    CHECK(predict(ModelKind::Linear, a, std::vector<double>{1.3}, 0.0) == doctest::Approx(3.5));
    CHECK(predict(ModelKind::Quadratic, a, std::vector<double>{1.0, -0.5}, 0.0) ==
          doctest::Approx(3.5));
}

TEST_CASE("predict rejects out-of-domain parameters") {
    ModelAnchors a{0.0, 1.0};
    CHECK_THROWS_AS(predict(ModelKind::Emax, a, std::vector<double>{0.0}, 1.0),
                    std::domain_error);
    CHECK_THROWS_AS(predict(ModelKind::Exponential, a, std::vector<double>{1.0, 0.0}, 1.0),
                    std::domain_error);
    CHECK_THROWS_AS(predict(ModelKind::Logistic, a, std::vector<double>{0.5, -0.1}, 1.0),
                    std::domain_error);
}

TEST_CASE("model name round trip") {
    for (ModelKind kind : {ModelKind::Emax, ModelKind::LinearLog, ModelKind::Linear,
                           ModelKind::Exponential, ModelKind::Quadratic, ModelKind::Logistic}) {
        auto back = model_from_name(model_name(kind));
        REQUIRE(back.has_value());
        CHECK(*back == kind);
        CHECK(static_cast<int>(parameter_names(kind).size()) + 1 == parameter_count(kind));
    }
    CHECK(!model_from_name("spline").has_value());
}

TEST_CASE("evocalcet fit goldens") {
    auto a = evo_anchors();

    auto linlog = fit_model(ModelKind::LinearLog, kEvoDoses, kEvoMeans, a);
    CHECK(linlog.converged);
    CHECK(std::fabs(linlog.params[0] - (-24.21)) < 0.02);
    CHECK(std::fabs(linlog.aic - 21.3) < 0.1);
    CHECK(linlog.rss == doctest::Approx(17.80).epsilon(1e-2));

    auto emax = fit_model(ModelKind::Emax, kEvoDoses, kEvoMeans, a);
    CHECK(emax.converged);
    CHECK(std::fabs(emax.params[0] - 0.40) < 0.05);
    CHECK(std::fabs(emax.aic - 22.4) < 0.2);

    auto lin = fit_model(ModelKind::Linear, kEvoDoses, kEvoMeans, a);
    CHECK(std::fabs(lin.params[0] - (-14.12)) < 0.5);
    CHECK(std::fabs(lin.aic - 25.9) < 0.3);

    auto quad = fit_model(ModelKind::Quadratic, kEvoDoses, kEvoMeans, a);
    CHECK(std::fabs(quad.aic - 22.9) < 0.5);

    auto logi = fit_model(ModelKind::Logistic, kEvoDoses, kEvoMeans, a);
    CHECK(std::fabs(logi.aic - 25.8) < 0.5);
}

TEST_CASE("linear-in-theta fits match the closed-form least-squares oracle") {
    rng::Stream stream(21);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<double> doses{0.0, 0.25, 0.5, 1.0, 2.0};
        std::vector<double> means;
        const double e0 = stream.next_normal(0.0, 3.0);
        const double slope = stream.next_normal(0.0, 5.0);
        for (double d : doses) means.push_back(e0 + slope * d + stream.next_normal(0.0, 0.5));
        ModelAnchors a{means[0], 0.0};
        for (bool log_dose : {false, true}) {
            auto fit = fit_model(log_dose ? ModelKind::LinearLog : ModelKind::Linear,
                                 doses, means, a);
            const double oracle = ls_slope(doses, means, a.e0, log_dose);
            CHECK(fit.params[0] ==
                  doctest::Approx(oracle).epsilon(1e-6));
        }
    }
}

TEST_CASE("AIC recomputed from RSS matches the stored value") {
    for (const auto& fit : fit_all(kEvoDoses, kEvoMeans, Direction::Decreasing)) {
        if (fit.aic_unreliable) continue;
        CHECK(fit.aic ==
              doctest::Approx(aic_from_rss(fit.rss, 4, parameter_count(fit.kind)))
                  .epsilon(1e-9));
    }
}

TEST_CASE("select_best: evocalcet picks LinearLog, biom picks Emax") {
    auto evo = fit_all(kEvoDoses, kEvoMeans, Direction::Decreasing);
    CHECK(select_best(evo).kind == ModelKind::LinearLog);

    auto biom = fit_all(kBiomDoses, kBiomMeans, Direction::Increasing);
    CHECK(select_best(biom).kind == ModelKind::Emax);
}

TEST_CASE("select_best: singleton, reorder invariance, no-converged error") {
    auto fits = fit_all(kEvoDoses, kEvoMeans, Direction::Decreasing);
    CHECK(select_best({fits[2]}).kind == fits[2].kind);

    auto shuffled = fits;
    std::reverse(shuffled.begin(), shuffled.end());
    CHECK(select_best(shuffled).kind == select_best(fits).kind);

    for (auto& f : fits) f.converged = false;
    CHECK_THROWS_AS(select_best(fits), std::runtime_error);
}

TEST_CASE("two-point exact interpolation clamps sigma") {
    std::vector<double> doses{0.0, 1.0};
    std::vector<double> means{0.0, 1.0};
    ModelAnchors a{0.0, 1.0};
    auto fit = fit_model(ModelKind::Linear, doses, means, a);
    CHECK(fit.params[0] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(fit.rss == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(fit.sigma == doctest::Approx(1e-6));
    CHECK(fit.aic_unreliable);
}

TEST_CASE("recommend_dose goldens on the evocalcet LinearLog fit") {
    auto a = evo_anchors();
    auto fit = fit_model(ModelKind::LinearLog, kEvoDoses, kEvoMeans, a);

    auto cfb = recommend_dose(fit, a, DoseCriterion::ChangeFromBaseline, -10.0, 2.0,
                              Direction::Decreasing);
    REQUIRE(cfb.has_value());
    CHECK(std::fabs(*cfb - 0.893) < 0.005);

    auto dfp = recommend_dose(fit, a, DoseCriterion::DiffFromPlacebo, -10.0, 2.0,
                              Direction::Decreasing);
    REQUIRE(dfp.has_value());
    CHECK(std::fabs(*dfp - 0.511) < 0.005);
}

TEST_CASE("recommend_dose: flat model yields no dose") {
    ModelAnchors a{5.44, 0.0};
    FitResult flat;
    flat.kind = ModelKind::Linear;
    flat.params = {0.0};
    flat.converged = true;
    CHECK(!recommend_dose(flat, a, DoseCriterion::DiffFromPlacebo, -10.0, 2.0,
                          Direction::Decreasing)
               .has_value());
}

TEST_CASE("recommend_dose is monotone in delta") {
    auto a = evo_anchors();
    auto fit = fit_model(ModelKind::LinearLog, kEvoDoses, kEvoMeans, a);
    double previous = 0.0;
    for (double delta : {-2.0, -5.0, -10.0, -15.0, -20.0}) {
        auto d = recommend_dose(fit, a, DoseCriterion::DiffFromPlacebo, delta, 2.0,
                                Direction::Decreasing);
        REQUIRE(d.has_value());
        CHECK(*d >= previous);
        previous = *d;
    }
}
