#include "ivim/multiplier.hpp"

#include "ivim/error.hpp"

#include <cmath>
#include <string>

namespace ivim {

namespace {

double exponent_guarded(double alpha, double s, double t)
{
    const double x = alpha * (s - t);
    if (!(std::abs(x) <= kMaxExponent)) {
        throw Error(ErrorKind::Overflow, "multiplier exponent alpha*(s-t) = " + std::to_string(x) +
                                             " exceeds the overflow guard");
    }
    return std::exp(x);
}

double checked(double v, const char* what)
{
    if (!std::isfinite(v)) {
        throw Error(ErrorKind::Overflow, std::string("custom ") + what + " returned a non-finite value");
    }
    return v;
}

}  // namespace

Multiplier Multiplier::exponential(double alpha)
{
    if (!std::isfinite(alpha)) {
        throw Error(ErrorKind::NonFinite, "multiplier alpha must be finite");
    }
    Multiplier m;
    m.alpha_ = alpha;
    return m;
}

Multiplier Multiplier::custom(Kernel lambda, Kernel dlambda_ds)
{
    if (!lambda || !dlambda_ds) {
        throw Error(ErrorKind::ConfigInvalid, "custom multipliers need both lambda and d lambda/ds");
    }
    Multiplier m;
    m.lambda_ = std::move(lambda);
    m.dlambda_ds_ = std::move(dlambda_ds);
    return m;
}

double Multiplier::lambda(double s, double t) const
{
    if (alpha_) {
        if (s == t) {
            return -1.0;
        }
        return -exponent_guarded(*alpha_, s, t);
    }
    return checked(lambda_(s, t), "lambda");
}

double Multiplier::dlambda_ds(double s, double t) const
{
    if (alpha_) {
        return *alpha_ * lambda(s, t);
    }
    return checked(dlambda_ds_(s, t), "d lambda/ds");
}

Multiplier exp_multiplier(double alpha) { return Multiplier::exponential(alpha); }

double lambda_eval(const Multiplier& m, double s, double t) { return m.lambda(s, t); }

double dlambda_ds_eval(const Multiplier& m, double s, double t) { return m.dlambda_ds(s, t); }

double g_term(const Multiplier& m, double u_at_t, double u_at_a, double t, double a)
{
    return (1.0 + m.lambda(t, t)) * u_at_t - m.lambda(a, t) * u_at_a;
}

double h_integrand(const Multiplier& m, double rhs_value, double u_value, double s, double t)
{
    return m.dlambda_ds(s, t) * u_value + m.lambda(s, t) * rhs_value;
}

}  // namespace ivim
