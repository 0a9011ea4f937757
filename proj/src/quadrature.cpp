#include "fkpath/quadrature.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>

#include <gsl/gsl_integration.h>

#include "fkpath/errors.hpp"

namespace fkpath {
namespace {

QuadratureRule fixed_rule(const gsl_integration_fixed_type* type, int order, double a, double b) {
    if (order < 1) throw DomainError("quadrature order must be positive, got " + std::to_string(order));
    std::unique_ptr<gsl_integration_fixed_workspace, decltype(&gsl_integration_fixed_free)> ws(
        gsl_integration_fixed_alloc(type, static_cast<size_t>(order), a, b, 0.0, 0.0),
        &gsl_integration_fixed_free);
    if (!ws) throw std::runtime_error("gsl_integration_fixed_alloc failed");
    const double* x = gsl_integration_fixed_nodes(ws.get());
    const double* w = gsl_integration_fixed_weights(ws.get());
    QuadratureRule rule;
    rule.nodes.assign(x, x + order);
    rule.weights.assign(w, w + order);
    return rule;
}

}  // namespace

QuadratureRule gauss_hermite(int order) {
    // a = 0, b = 1 gives the plain weight exp(-x^2).
    return fixed_rule(gsl_integration_fixed_hermite, order, 0.0, 1.0);
}

const QuadratureRule& gauss_hermite_cached(int order) {
    static std::mutex mutex;
    static std::map<int, std::unique_ptr<const QuadratureRule>> cache;
    std::lock_guard lock(mutex);
    auto& slot = cache[order];
    if (!slot) slot = std::make_unique<const QuadratureRule>(gauss_hermite(order));
    return *slot;
}

QuadratureRule gauss_legendre(int order, double a, double b) {
    if (!(b > a)) throw DomainError("gauss_legendre: empty interval");
    return fixed_rule(gsl_integration_fixed_legendre, order, a, b);
}

}  // namespace fkpath
