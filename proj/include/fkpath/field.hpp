#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "fkpath/particle.hpp"
#include "fkpath/random.hpp"
#include "fkpath/spatial.hpp"

namespace fkpath {

/// omega(k) = sqrt(|k|^2 + m^2)
struct Dispersion {
    double mass = 1.0;
    [[nodiscard]] double operator()(double k_abs) const { return std::sqrt(k_abs * k_abs + mass * mass); }
};

enum class FormFactorFamily { gaussian_cutoff, sharp_cutoff };

/// Radial momentum profile rho_hat(|k|); translation acts as rho_hat(k) e^{ik.x}.
struct FormFactor {
    FormFactorFamily family = FormFactorFamily::gaussian_cutoff;
    double cutoff = 1.0;

    [[nodiscard]] double operator()(double k_abs) const {
        if (family == FormFactorFamily::sharp_cutoff) return k_abs <= cutoff ? 1.0 : 0.0;
        return std::exp(-k_abs * k_abs / (2.0 * cutoff * cutoff));
    }
};

struct QuadratureOptions {
    std::size_t nodes = 512;
    /// Truncation radius K = radius_factor * cutoff for smooth profiles.
    double radius_factor = 8.0;
};

/// Momentum rule folded onto |k| >= 0: integrals of even (d = 1) or radial (d = 3)
/// integrands are sum_i weight_i F(k_i). In d = 3 the weights carry 4 pi k^2.
struct MomentumQuadrature {
    std::vector<double> nodes;
    std::vector<double> weights;
    double radius = 0.0;
    /// Nodes form an arithmetic progression (enables phase recurrences).
    bool uniform = false;

    static MomentumQuadrature build(const FormFactor& form, std::size_t dim,
                                    const QuadratureOptions& options);
};

/// One-mode restriction of the field: K_bos is spanned by a unit vector e, the field
/// seen by a particle at x is c(x) phi(e), and e evolves with frequency omega0.
struct SingleModeModel {
    double omega0 = 1.0;
    SpatialFunction coupling = SpatialFunction::constant(1.0);
};

/// Element of K_bos: amplitude * profile_y, with profile_hat(k) e^{ik.y}. In the
/// single-mode model only the amplitude matters (the vector is amplitude * e).
struct FieldVector {
    double amplitude = 1.0;
    Point center;
    /// Defaults to the model's form factor.
    std::optional<FormFactor> profile;
};

/// A field vector placed on the Euclidean time slice `time` (delta_time (x) f).
struct SliceVector {
    double time = 0.0;
    FieldVector vector;
};

class FieldModel {
public:
    static FieldModel continuum(std::size_t dim, Dispersion dispersion, FormFactor form,
                                QuadratureOptions options = {});
    static FieldModel single_mode(SingleModeModel model);

    [[nodiscard]] bool is_single_mode() const { return single_.has_value(); }
    /// Spatial dimension; 0 for a single-mode model with constant coupling.
    [[nodiscard]] std::size_t dim() const { return dim_; }
    [[nodiscard]] const MomentumQuadrature& quadrature() const { return quad_; }
    [[nodiscard]] const Dispersion& dispersion() const { return dispersion_; }
    [[nodiscard]] const FormFactor& form_factor() const { return form_; }
    [[nodiscard]] const QuadratureOptions& quadrature_options() const { return options_; }
    [[nodiscard]] const std::optional<SingleModeModel>& single_mode_model() const { return single_; }

    /// rho_x: the form factor translated to x (single-mode: c(x) e).
    [[nodiscard]] FieldVector form_at(std::span<const double> x) const;

    /// (g, exp(-|tau| omega) f)_{K_bos}; tau = 0 is the K_bos inner product itself.
    [[nodiscard]] double pairing(const FieldVector& g, const FieldVector& f, double tau) const;

    /// Same pairing with the time kernel obtained from the explicit k0 integral
    /// (1/pi) int dk0 e^{ik0 tau} / (omega^2 + k0^2), evaluated numerically.
    [[nodiscard]] double pairing_via_frequency(const FieldVector& g, const FieldVector& f,
                                               double tau) const;

    /// W(0, 0) = 1/2 ||rho||^2; the largest value any pair covariance can take.
    [[nodiscard]] double max_pair_covariance() const;

private:
    FieldModel() = default;
    void validate_vector(const FieldVector& v) const;

    std::size_t dim_ = 0;
    Dispersion dispersion_{};
    FormFactor form_{};
    QuadratureOptions options_{};
    MomentumQuadrature quad_{};
    std::vector<double> omega_;      // omega at each node
    std::optional<SingleModeModel> single_;
};

/// (g, f)_{K_bos} = int conj(g_hat) f_hat / omega dk
double bos_inner(const FieldVector& g, const FieldVector& f, const FieldModel& model);

/// (delta_s (x) g, delta_t (x) f)_{K_Euc}, defined through the slice identity as
/// (g, exp(-|t - s| omega) f)_{K_bos}. Equal to bos_inner bit-for-bit when s == t.
double euclid_slice_inner(double s, const FieldVector& g, double t, const FieldVector& f,
                          const FieldModel& model);

/// The same Euclidean pairing computed from the (k0, k) integral, for cross-checks.
double euclid_slice_inner_frequency(double s, const FieldVector& g, double t,
                                    const FieldVector& f, const FieldModel& model);

/// W(x, y, tau) = Cov(phi(delta_0 (x) rho_x), phi(delta_tau (x) rho_y))
///             = 1/2 (rho_x, exp(-|tau| omega) rho_y)_{K_bos}.
double pair_covariance(const FieldModel& model, std::span<const double> x,
                       std::span<const double> y, double tau);
/// Translation-invariant form W(r, tau) for continuum models in d = 1.
double pair_covariance(const FieldModel& model, double r, double tau);

/// Variance of the Riemann sum sum_j dt_j phi(delta_{t_j} (x) rho_{X_{t_j}}) along the
/// path, i.e. sum_{j,l} W(X_j - X_l, t_j - t_l) dt_j dt_l. Computed in O(n N_k) with one
/// exponentially damped accumulator per momentum node (d = 3 uses the radial pair sum).
double path_variance(const ParticlePath& path, const FieldModel& model);

/// Joint covariance of slice variables phi(delta_{t_a} (x) f_a): entries
/// 1/2 (f_a, exp(-|t_a - t_b| omega) f_b)_{K_bos}.
Eigen::MatrixXd slice_covariance(std::span<const SliceVector> slices, const FieldModel& model);

/// Joint covariance of (phi(j_0 h_i)..., phi(j_t h'_j)..., Phi_path), where Phi_path is
/// the path variable of path_variance and t is the path horizon. Throws
/// NumericalConsistencyError if the matrix is indefinite beyond 1e-10 * trace.
Eigen::MatrixXd endpoint_covariance(const ParticlePath& path, std::span<const FieldVector> left,
                                    std::span<const FieldVector> right, const FieldModel& model);

/// Symmetric square root of a PSD covariance, factored once and reused for many draws.
class GaussianSampler {
public:
    explicit GaussianSampler(const Eigen::MatrixXd& cov);

    [[nodiscard]] Eigen::Index size() const { return root_.rows(); }
    [[nodiscard]] const Eigen::MatrixXd& root() const { return root_; }
    Eigen::VectorXd sample(RandomStream& rng) const;
    /// Allocation-free variant; `noise` is scratch space.
    void sample_into(RandomStream& rng, Eigen::VectorXd& out, Eigen::VectorXd& noise) const;

private:
    Eigen::MatrixXd root_;
};

Eigen::VectorXd gaussian_vector_sample(const Eigen::MatrixXd& cov, RandomStream& rng);

/// Throws NumericalConsistencyError unless cov is symmetric with all eigenvalues
/// >= -1e-10 * trace.
void check_psd(const Eigen::MatrixXd& cov, const char* what);

/// E[X_{v_1} ... X_{v_n}] for a centred Gaussian vector (Isserlis pairing rule).
double gaussian_moment(const Eigen::MatrixXd& cov, std::span<const int> vars);

/// Ordinary-monomial expansion of the Wick product :X_{v_1} ... X_{v_n}:
struct MonomialTerm {
    double coefficient;
    std::vector<int> vars;
};
std::vector<MonomialTerm> wick_expand(const Eigen::MatrixXd& cov, std::span<const int> vars);

/// Repeats variable index i degree_i times: {(0,2),(1,1)} -> {0,0,1}.
std::vector<int> monomial_variables(std::span<const std::pair<int, int>> degrees);

/// E[:prod_i X_{left_i}: * :prod_j X_{right_j}:], by expanding both Wick products and
/// evaluating each Gaussian moment with the pairing rule.
double wick_moment(const Eigen::MatrixXd& cov, std::span<const int> left, std::span<const int> right);

}  // namespace fkpath
