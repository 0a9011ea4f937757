#include "fkpath/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>

#include <fftw3.h>

#include "fkpath/errors.hpp"

namespace fkpath {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

/// Real-to-complex FFT pair on a 1-D or 2-D array, planned with FFTW_ESTIMATE so the
/// transforms are reproducible run to run.
class RealFft {
public:
    explicit RealFft(std::vector<int> dims) : dims_(std::move(dims)) {
        real_size_ = 1;
        for (int n : dims_) real_size_ *= static_cast<std::size_t>(n);
        complex_size_ = real_size_ / static_cast<std::size_t>(dims_.back()) *
                        (static_cast<std::size_t>(dims_.back()) / 2 + 1);
        real_.reset(fftw_alloc_real(real_size_));
        spectrum_.reset(fftw_alloc_complex(complex_size_));
        std::lock_guard lock(planner_mutex());
        const int rank = static_cast<int>(dims_.size());
        forward_ = fftw_plan_dft_r2c(rank, dims_.data(), real_.get(), spectrum_.get(), FFTW_ESTIMATE);
        backward_ = fftw_plan_dft_c2r(rank, dims_.data(), spectrum_.get(), real_.get(), FFTW_ESTIMATE);
        if (forward_ == nullptr || backward_ == nullptr) throw NumericalConsistencyError("FFTW planning failed");
    }
    ~RealFft() {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(forward_);
        fftw_destroy_plan(backward_);
    }
    RealFft(const RealFft&) = delete;
    RealFft& operator=(const RealFft&) = delete;

    double* real() { return real_.get(); }
    fftw_complex* spectrum() { return spectrum_.get(); }
    [[nodiscard]] std::size_t real_size() const { return real_size_; }
    [[nodiscard]] std::size_t complex_size() const { return complex_size_; }
    void forward() { fftw_execute(forward_); }
    void backward() { fftw_execute(backward_); }

private:
    struct RealFree {
        void operator()(double* p) const { fftw_free(p); }
    };
    struct ComplexFree {
        void operator()(fftw_complex* p) const { fftw_free(p); }
    };
    std::vector<int> dims_;
    std::size_t real_size_ = 0;
    std::size_t complex_size_ = 0;
    std::unique_ptr<double, RealFree> real_;
    std::unique_ptr<fftw_complex, ComplexFree> spectrum_;
    fftw_plan forward_ = nullptr;
    fftw_plan backward_ = nullptr;
};

double wavenumber(std::size_t i, const GridSpec& g) {
    const auto n = static_cast<long>(g.points);
    long j = static_cast<long>(i);
    if (j > n / 2) j -= n;
    return std::numbers::pi * static_cast<double>(j) / g.half_length;
}

double length_scale(const SpatialFunction& f) {
    return std::visit(
        [](const auto& v) -> double {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, GaussianBump>) return v.width;
            else if constexpr (std::is_same_v<T, BoxIndicator>) {
                double s = kInf;
                for (std::size_t i = 0; i < v.lower.size(); ++i) s = std::min(s, v.upper[i] - v.lower[i]);
                return s;
            } else return kInf;
        },
        f.variant());
}

double length_scale(const Potential& V) {
    return std::visit(
        [](const auto& v) -> double {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, GaussianWell>) return v.width;
            else if constexpr (std::is_same_v<T, SquareWell>) return v.half_width;
            else if constexpr (std::is_same_v<T, TabulatedPotential>) return v.spacing;
            else return kInf;
        },
        V.variant());
}

/// Cell average over [x - h/2, x + h/2] for piecewise-constant data (boxes, square
/// wells), the point value otherwise. Point sampling a jump converges only at first order.
double overlap_fraction(double lo, double hi, double x, double h) {
    const double a = std::max(lo, x - 0.5 * h), b = std::min(hi, x + 0.5 * h);
    return b > a ? (b - a) / h : 0.0;
}

double cell_value(const SpatialFunction& f, const GridSpec& g, std::size_t i) {
    const double x = g.x(i);
    if (const auto* b = std::get_if<BoxIndicator>(&f.variant()))
        return b->value * overlap_fraction(b->lower[0], b->upper[0], x, g.spacing());
    return f(x);
}

double cell_value(const Potential& V, const GridSpec& g, std::size_t i) {
    const double x = g.x(i);
    if (const auto* w = std::get_if<SquareWell>(&V.variant()))
        return -w->depth * overlap_fraction(w->center[0] - w->half_width, w->center[0] + w->half_width, x, g.spacing());
    return V(x);
}

void require_one_dim(std::size_t d, const char* what) {
    if (d > 1) throw ConfigurationError(std::string("grid oracle is one-dimensional; ") + what + " is not");
}

/// Fraction of |u|^2 within the outer tenth of the box along one axis (stride layout).
double edge_fraction(const std::vector<double>& u, std::size_t n_outer, std::size_t n_inner, bool outer_axis,
                     const GridSpec& g) {
    double total = 0.0, edge = 0.0;
    for (std::size_t i = 0; i < n_outer; ++i)
        for (std::size_t j = 0; j < n_inner; ++j) {
            const double v = u[i * n_inner + j] * u[i * n_inner + j];
            total += v;
            const double coord = g.x(outer_axis ? i : j);
            if (std::abs(coord) >= 0.9 * g.half_length) edge += v;
        }
    return total > 0.0 ? edge / total : 0.0;
}

/// Fraction of spectral mass on the Nyquist modes of an r2c spectrum of shape (rows, cols/2+1).
double nyquist_fraction(const fftw_complex* s, std::size_t rows, std::size_t cols) {
    const std::size_t half = cols / 2 + 1;
    double total = 0.0, nyq = 0.0;
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < half; ++j) {
            const double w = (j == 0 || j == cols / 2) ? 1.0 : 2.0;
            const double v = w * (s[i * half + j][0] * s[i * half + j][0] + s[i * half + j][1] * s[i * half + j][1]);
            total += v;
            if (j == cols / 2 || (rows > 1 && i == rows / 2)) nyq += v;
        }
    return total > 0.0 ? nyq / total : 0.0;
}

void check_resolution(GridDiagnostics& diag, double nyquist, double boundary, double tolerance) {
    diag.nyquist_mass = std::max(diag.nyquist_mass, nyquist);
    diag.boundary_mass = std::max(diag.boundary_mass, boundary);
    if (nyquist > 1e-8)
        throw ResolutionError("aliasing: Nyquist modes carry " + std::to_string(nyquist) +
                              " of the spectral mass (refine the grid)");
    if (boundary > tolerance)
        throw ResolutionError("box too small: " + std::to_string(boundary) +
                              " of the mass sits near the periodic boundary");
}

/// Split-step propagator exp(-tau (K + U)) on a real grid: half-step U, exact K in
/// Fourier space, half-step U.
class SplitStep {
public:
    SplitStep(std::vector<int> dims, std::vector<double> potential, std::vector<double> kinetic_symbol)
        : fft_(std::move(dims)), potential_(std::move(potential)), symbol_(std::move(kinetic_symbol)) {}

    RealFft& fft() { return fft_; }

    /// Advances u over time t with about t / dtau steps (one step if U vanishes).
    std::size_t propagate(std::vector<double>& u, double t, double dtau, bool potential_free) {
        if (t == 0.0) return 0;
        const std::size_t n = potential_free ? 1 : static_cast<std::size_t>(std::ceil(t / dtau - 1e-9));
        const double tau = t / static_cast<double>(n);
        if (tau != tau_) configure(tau);
        const double norm = 1.0 / static_cast<double>(fft_.real_size());
        double* r = fft_.real();
        fftw_complex* s = fft_.spectrum();
        for (std::size_t step = 0; step < n; ++step) {
            for (std::size_t i = 0; i < u.size(); ++i) r[i] = u[i] * half_[i];
            fft_.forward();
            for (std::size_t i = 0; i < fft_.complex_size(); ++i) {
                s[i][0] *= kin_[i] * norm;
                s[i][1] *= kin_[i] * norm;
            }
            fft_.backward();
            for (std::size_t i = 0; i < u.size(); ++i) u[i] = r[i] * half_[i];
        }
        return n;
    }

private:
    void configure(double tau) {
        tau_ = tau;
        half_.resize(potential_.size());
        for (std::size_t i = 0; i < potential_.size(); ++i) half_[i] = std::exp(-0.5 * tau * potential_[i]);
        kin_.resize(symbol_.size());
        for (std::size_t i = 0; i < symbol_.size(); ++i) kin_[i] = std::exp(-tau * symbol_[i]);
    }

    RealFft fft_;
    std::vector<double> potential_;
    std::vector<double> symbol_;
    double tau_ = -1.0;
    std::vector<double> half_;
    std::vector<double> kin_;
};

std::vector<double> particle_symbol(const SubordinatorSpec& kinetic, const GridSpec& g) {
    std::vector<double> sym(g.points / 2 + 1);
    for (std::size_t j = 0; j < sym.size(); ++j) {
        const double k = wavenumber(j, g);
        sym[j] = kinetic.laplace_exponent(k * k);
    }
    return sym;
}

double spectral_check(RealFft& fft, const std::vector<double>& u, std::size_t rows, std::size_t cols) {
    std::copy(u.begin(), u.end(), fft.real());
    fft.forward();
    return nyquist_fraction(fft.spectrum(), rows, cols);
}

}  // namespace

void GridSpec::validate(double min_length) const {
    if (!(half_length > 0.0) || !std::isfinite(half_length)) throw ConfigurationError("grid half_length must be positive");
    if (points < 8 || (points & (points - 1)) != 0)
        throw ConfigurationError("grid points must be a power of two >= 8, got " + std::to_string(points));
    if (!(dtau > 0.0) || !std::isfinite(dtau)) throw ConfigurationError("grid dtau must be positive");
    if (std::isfinite(min_length) && spacing() > 0.25 * min_length)
        throw ResolutionError("grid spacing " + std::to_string(spacing()) + " does not resolve length scale " +
                              std::to_string(min_length));
}

std::vector<double> sample_on_grid(const SpatialFunction& f, const GridSpec& grid) {
    require_one_dim(f.dim(), "the function");
    std::vector<double> v(grid.points);
    for (std::size_t i = 0; i < grid.points; ++i) v[i] = cell_value(f, grid, i);
    return v;
}

GridPropagation particle_semigroup_grid(std::span<const double> f, const Potential& V, double t,
                                        const SubordinatorSpec& kinetic, const GridSpec& grid) {
    require_one_dim(V.dim(), "the potential");
    grid.validate(length_scale(V));
    if (f.size() != grid.points) throw ConfigurationError("grid function has the wrong length");
    if (!(t >= 0.0)) throw DomainError("t must be non-negative");
    std::vector<double> pot(grid.points);
    for (std::size_t i = 0; i < grid.points; ++i) pot[i] = cell_value(V, grid, i);
    SplitStep prop({static_cast<int>(grid.points)}, pot, particle_symbol(kinetic, grid));
    GridPropagation out;
    out.values.assign(f.begin(), f.end());
    check_resolution(out.diagnostics, spectral_check(prop.fft(), out.values, 1, grid.points), 0.0, kInf);
    out.diagnostics.steps = prop.propagate(out.values, t, grid.dtau, V.is_zero());
    out.diagnostics.dtau = out.diagnostics.steps ? t / static_cast<double>(out.diagnostics.steps) : 0.0;
    check_resolution(out.diagnostics, spectral_check(prop.fft(), out.values, 1, grid.points),
                     edge_fraction(out.values, grid.points, 1, true, grid), grid.boundary_tolerance);
    return out;
}

GridValue particle_matrix_element_grid(const SpatialFunction& f, const SpatialFunction& g, const Potential& V,
                                       std::span<const ParticleInsertion> insertions, double t,
                                       const SubordinatorSpec& kinetic, const GridSpec& grid) {
    require_one_dim(f.dim(), "f");
    require_one_dim(g.dim(), "g");
    require_one_dim(V.dim(), "the potential");
    double scale = std::min({length_scale(f), length_scale(g), length_scale(V)});
    std::vector<double> times;
    for (const auto& ins : insertions) {
        require_one_dim(ins.weight.dim(), "an insertion");
        scale = std::min(scale, length_scale(ins.weight));
        times.push_back(ins.time);
    }
    grid.validate(scale);
    if (!(t >= 0.0)) throw DomainError("t must be non-negative");
    validate_insertion_times(times, t);

    std::vector<double> pot(grid.points);
    for (std::size_t i = 0; i < grid.points; ++i) pot[i] = cell_value(V, grid, i);
    SplitStep prop({static_cast<int>(grid.points)}, pot, particle_symbol(kinetic, grid));
    GridValue out;
    std::vector<double> u = sample_on_grid(g, grid);
    check_resolution(out.diagnostics, spectral_check(prop.fft(), u, 1, grid.points), 0.0, kInf);
    double upper = t;
    for (std::size_t k = insertions.size(); k-- > 0;) {
        out.diagnostics.steps += prop.propagate(u, upper - times[k], grid.dtau, V.is_zero());
        for (std::size_t i = 0; i < grid.points; ++i) u[i] *= cell_value(insertions[k].weight, grid, i);
        upper = times[k];
    }
    out.diagnostics.steps += prop.propagate(u, upper, grid.dtau, V.is_zero());
    out.diagnostics.dtau = grid.dtau;
    check_resolution(out.diagnostics, spectral_check(prop.fft(), u, 1, grid.points),
                     edge_fraction(u, grid.points, 1, true, grid), grid.boundary_tolerance);
    double sum = 0.0;
    for (std::size_t i = 0; i < grid.points; ++i) sum += cell_value(f, grid, i) * u[i];
    out.value = sum * grid.spacing();
    return out;
}

CoupledOracleResult coupled_single_mode_grid(const SpatialFunction& f, const SpatialFunction& g,
                                             const SingleModeModel& model, const Potential& V,
                                             const PolynomialInteraction& p, double t,
                                             const SubordinatorSpec& kinetic, const Grid2DSpec& grid,
                                             std::span<const double> horizons) {
    p.validate();
    if (p.kappa < 0.0) throw IntegrabilityError("kappa < 0: the coupled Hamiltonian is unbounded below");
    if (!(model.omega0 > 0.0)) throw ModelValidityError("single-mode frequency must be positive");
    for (const SpatialFunction* h : {&f, &g, &model.coupling}) require_one_dim(h->dim(), "a state or coupling");
    require_one_dim(V.dim(), "the potential");
    if (!(t > 0.0)) throw DomainError("t must be positive");
    grid.x.validate(std::min({length_scale(f), length_scale(g), length_scale(V), length_scale(model.coupling)}));
    grid.q.validate(1.0);
    for (std::size_t i = 1; i < horizons.size(); ++i)
        if (!(horizons[i] > horizons[i - 1])) throw ConfigurationError("horizons must increase");

    const std::size_t nx = grid.x.points, nq = grid.q.points;
    std::vector<double> pot(nx * nq);
    for (std::size_t i = 0; i < nx; ++i) {
        const double x = grid.x.x(i);
        const double vx = cell_value(V, grid.x, i);
        const double cx = model.coupling(x);
        for (std::size_t j = 0; j < nq; ++j) {
            const double q = grid.q.x(j);
            pot[i * nq + j] = vx + 0.5 * model.omega0 * (q * q - 1.0) + p.kappa * p(cx * q);
        }
    }
    std::vector<double> symbol(nx * (nq / 2 + 1));
    for (std::size_t i = 0; i < nx; ++i) {
        const double kx = wavenumber(i, grid.x);
        const double hx = kinetic.laplace_exponent(kx * kx);
        for (std::size_t j = 0; j <= nq / 2; ++j) {
            const double kq = wavenumber(j, grid.q);
            symbol[i * (nq / 2 + 1) + j] = hx + 0.5 * model.omega0 * kq * kq;
        }
    }
    SplitStep prop({static_cast<int>(nx), static_cast<int>(nq)}, pot, symbol);

    std::vector<double> omega(nq);
    for (std::size_t j = 0; j < nq; ++j) {
        const double q = grid.q.x(j);
        omega[j] = std::pow(std::numbers::pi, -0.25) * std::exp(-0.5 * q * q);
    }
    std::vector<double> u(nx * nq), bra(nx * nq);
    for (std::size_t i = 0; i < nx; ++i) {
        const double gx = cell_value(g, grid.x, i);
        const double fx = cell_value(f, grid.x, i);
        for (std::size_t j = 0; j < nq; ++j) {
            u[i * nq + j] = gx * omega[j];
            bra[i * nq + j] = fx * omega[j];
        }
    }
    const double cell = grid.x.spacing() * grid.q.spacing();
    auto inner = [&]() {
        double s = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) s += bra[i] * u[i];
        return s * cell;
    };

    CoupledOracleResult out;
    GridDiagnostics& diag = out.element.diagnostics;
    const double tol = std::max(grid.x.boundary_tolerance, grid.q.boundary_tolerance);
    auto check = [&]() {
        const double edges = std::max(edge_fraction(u, nx, nq, true, grid.x), edge_fraction(u, nx, nq, false, grid.q));
        check_resolution(diag, spectral_check(prop.fft(), u, nx, nq), edges, tol);
    };
    check();

    std::vector<double> stops(horizons.begin(), horizons.end());
    stops.push_back(t);
    std::sort(stops.begin(), stops.end());
    stops.erase(std::unique(stops.begin(), stops.end()), stops.end());
    double now = 0.0;
    for (double s : stops) {
        diag.steps += prop.propagate(u, s - now, grid.x.dtau, false);
        now = s;
        check();
        const double v = inner();
        if (s == t) out.element.value = v;
        if (std::find(horizons.begin(), horizons.end(), s) != horizons.end()) {
            out.horizons.push_back(s);
            out.values.push_back(v);
        }
    }
    diag.dtau = grid.x.dtau;
    if (!horizons.empty()) {
        std::vector<double> zeros(out.values.size(), 0.0);
        out.ground_energy = fit_ground_energy(out.horizons, out.values, zeros);
    }
    return out;
}

GridValue oscillator_1d_grid(const ScalarFunction& V_bos, double amplitude, double omega0, double t,
                             const GridSpec& grid) {
    if (!(omega0 > 0.0)) throw ModelValidityError("oscillator frequency must be positive");
    if (!V_bos.is_bounded_below()) throw ModelValidityError("field potential must be bounded below");
    if (!(t >= 0.0)) throw DomainError("t must be non-negative");
    grid.validate(1.0);
    const std::size_t n = grid.points;
    std::vector<double> pot(n), symbol(n / 2 + 1), u(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double q = grid.x(j);
        pot[j] = 0.5 * omega0 * (q * q - 1.0) + V_bos(amplitude * q);
        u[j] = std::pow(std::numbers::pi, -0.25) * std::exp(-0.5 * q * q);
    }
    for (std::size_t j = 0; j <= n / 2; ++j) {
        const double k = wavenumber(j, grid);
        symbol[j] = 0.5 * omega0 * k * k;
    }
    const std::vector<double> omega = u;
    SplitStep prop({static_cast<int>(n)}, pot, symbol);
    GridValue out;
    out.diagnostics.steps = prop.propagate(u, t, grid.dtau, false);
    out.diagnostics.dtau = grid.dtau;
    check_resolution(out.diagnostics, spectral_check(prop.fft(), u, 1, n), edge_fraction(u, n, 1, true, grid),
                     grid.boundary_tolerance);
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += omega[j] * u[j];
    out.value = s * grid.spacing();
    return out;
}

}  // namespace fkpath
