#pragma once

#include <functional>
#include <optional>

namespace ivim {

/**
 * Lagrange multiplier lambda(s, t) of the correction functional together with
 * its partial derivative in s.
 *
 * For the linear part L u = u' + alpha u the multiplier is
 * lambda(s, t) = -exp(alpha (s - t)), so lambda(t, t) = -1 and
 * d lambda / ds = alpha * lambda. Custom multipliers must supply the
 * derivative analytically.
 */
class Multiplier {
public:
    using Kernel = std::function<double(double s, double t)>;

    static Multiplier exponential(double alpha);
    static Multiplier custom(Kernel lambda, Kernel dlambda_ds);

    bool is_exponential() const noexcept { return alpha_.has_value(); }
    /// Only meaningful for the exponential kind.
    double alpha() const noexcept { return alpha_.value_or(0.0); }

    double lambda(double s, double t) const;
    double dlambda_ds(double s, double t) const;

private:
    Multiplier() = default;

    std::optional<double> alpha_;
    Kernel lambda_;
    Kernel dlambda_ds_;
};

/// |alpha (s - t)| beyond this raises an overflow error instead of returning inf.
inline constexpr double kMaxExponent = 700.0;

Multiplier exp_multiplier(double alpha);

double lambda_eval(const Multiplier& m, double s, double t);
double dlambda_ds_eval(const Multiplier& m, double s, double t);

/// Boundary term G(t) = (1 + lambda(t, t)) u(t) - lambda(a, t) u(a).
double g_term(const Multiplier& m, double u_at_t, double u_at_a, double t, double a);

/// Integrand H(s, t) = dlambda/ds(s, t) u(s) + lambda(s, t) f(s, u(s)),
/// with `rhs_value` = f(s, u(s)).
double h_integrand(const Multiplier& m, double rhs_value, double u_value, double s, double t);

}  // namespace ivim
