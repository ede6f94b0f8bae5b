#include "conet/fields.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "conet/flux.hpp"

namespace conet {

const EdgeMatrix& TabulatedEdges::at(double t) const
{
    if (times.empty() || times.size() != values.size())
        throw ValidationError("tabulated field needs one matrix per grid time");
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    const std::size_t k = it == times.begin() ? 0 : static_cast<std::size_t>(it - times.begin()) - 1;
    return values[k];
}

std::optional<double> ConvolutionOmega::sup_abs() const
{
    if (general) return general_sup;
    return modulation.sup_abs() * kernel.sup_abs() * kernel.sup_abs();
}

std::optional<double> ConvolutionOmega::sup_abs_dt() const
{
    if (general) return general_sup_dt;
    return modulation.sup_abs_derivative() * kernel.sup_abs() * kernel.sup_abs();
}

namespace {

EdgeMatrix interaction_velocity(const Eigen::MatrixXd& kernel, double g, const MassVector& rho)
{
    const Eigen::VectorXd potential = kernel * rho;
    // -(c_j - c_i) g
    return -g * nonlocal_gradient(potential);
}

WeightMatrix product_convolution(const Eigen::MatrixXd& kernel, double g, const MassVector& rho)
{
    return g * (kernel * rho.asDiagonal() * kernel.transpose());
}

WeightMatrix general_convolution(const ConvolutionOmega& conv, double t, const VertexSet& graph,
                                 const MassVector& rho)
{
    const Index n = graph.size();
    WeightMatrix out = WeightMatrix::Zero(n, n);
    std::vector<Eigen::VectorXd> pts(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) pts[static_cast<std::size_t>(i)] = graph.point(i).transpose();
    for (Index j = 0; j < n; ++j)
        for (Index i = 0; i < n; ++i) {
            double acc = 0.0;
            for (Index k = 0; k < n; ++k)
                if (rho(k) != 0.0)
                    acc += conv.general(t, pts[static_cast<std::size_t>(i)],
                                        pts[static_cast<std::size_t>(j)],
                                        pts[static_cast<std::size_t>(k)]) *
                           rho(k);
            out(i, j) = acc;
        }
    return out;
}

WeightMatrix constant_omega(const ConstantOmega& c, Index n)
{
    if (c.matrix) {
        if (c.matrix->rows() != n || c.matrix->cols() != n)
            throw DimensionError("constant omega matrix does not match the graph");
        return *c.matrix;
    }
    return WeightMatrix::Constant(n, n, c.value);
}

const EdgeMatrix& checked_table_entry(const TabulatedEdges& table, double t, Index n)
{
    const EdgeMatrix& m = table.at(t);
    if (m.rows() != n || m.cols() != n)
        throw DimensionError("tabulated field does not match the graph");
    return m;
}

void check_rho(const VertexSet& graph, const MassVector& rho)
{
    if (rho.size() != graph.size())
        throw DimensionError("mass vector has " + std::to_string(rho.size()) + " entries, graph has " +
                             std::to_string(graph.size()) + " vertices");
}

}  // namespace

EdgeMatrix eval_velocity(const VelocityField& field, double t, const VertexSet& graph,
                         const MassVector& rho)
{
    static const OmegaFunctional none = OmegaFunctional::constant(0.0);
    FieldEvaluator eval(graph, field, none);
    return eval.velocity(t, rho);
}

WeightMatrix eval_omega(const OmegaFunctional& omega, double t, const VertexSet& graph,
                        const MassVector& rho)
{
    static const VelocityField none = VelocityField::zero();
    FieldEvaluator eval(graph, none, omega);
    return eval.omega(t, rho);
}

FieldEvaluator::FieldEvaluator(const VertexSet& graph, const VelocityField& velocity,
                               const OmegaFunctional& omega)
    : graph_(&graph), velocity_(&velocity), omega_(&omega)
{
    if (const auto* k = std::get_if<InteractionVelocity>(&velocity.kind))
        velocity_kernel_ = k->kernel.matrix(graph.positions());
    if (const auto* c = std::get_if<ConvolutionOmega>(&omega.kind); c && !c->general)
        omega_kernel_ = c->kernel.matrix(graph.positions());
}

bool FieldEvaluator::velocity_is_zero() const
{
    return std::holds_alternative<ZeroVelocity>(velocity_->kind);
}

EdgeMatrix FieldEvaluator::velocity(double t, const MassVector& rho) const
{
    check_rho(*graph_, rho);
    const Index n = graph_->size();
    return std::visit(
        [&](const auto& kind) -> EdgeMatrix {
            using K = std::decay_t<decltype(kind)>;
            if constexpr (std::is_same_v<K, ZeroVelocity>) {
                return EdgeMatrix::Zero(n, n);
            } else if constexpr (std::is_same_v<K, InteractionVelocity>) {
                return interaction_velocity(velocity_kernel_, kind.modulation(t), rho);
            } else {
                const EdgeMatrix& v = checked_table_entry(kind, t, n);
                validate_antisymmetric(v);
                return v;
            }
        },
        velocity_->kind);
}

WeightMatrix FieldEvaluator::omega(double t, const MassVector& rho) const
{
    check_rho(*graph_, rho);
    const Index n = graph_->size();
    return std::visit(
        [&](const auto& kind) -> WeightMatrix {
            using K = std::decay_t<decltype(kind)>;
            if constexpr (std::is_same_v<K, ConstantOmega>) {
                return constant_omega(kind, n);
            } else if constexpr (std::is_same_v<K, ConvolutionOmega>) {
                if (kind.general) return general_convolution(kind, t, *graph_, rho);
                return product_convolution(omega_kernel_, kind.modulation(t), rho);
            } else {
                return checked_table_entry(kind, t, n);
            }
        },
        omega_->kind);
}

double ConstantEstimate::working() const
{
    double value = empirical;
    if (declared) value = std::max(value, *declared);
    if (closed_form) value = std::max(value, *closed_form);
    return value;
}

bool ConstantEstimate::inconsistent() const
{
    return declared && empirical > *declared * (1.0 + 1e-9) + 1e-300;
}

namespace {

// Random signed measure with tv <= bound; the family mixes diffuse,
// nonnegative and concentrated configurations.
MassVector random_probe(std::mt19937_64& rng, Index n, double bound)
{
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_int_distribution<Index> vertex(0, n - 1);
    MassVector rho = MassVector::Zero(n);
    const int family = static_cast<int>(unit(rng) * 4.0);
    switch (family) {
    case 0:
        for (Index i = 0; i < n; ++i) rho(i) = normal(rng);
        break;
    case 1:
        for (Index i = 0; i < n; ++i) rho(i) = unit(rng);
        break;
    case 2:
        rho(vertex(rng)) = unit(rng) < 0.5 ? -1.0 : 1.0;
        break;
    default:
        rho(vertex(rng)) += 1.0;
        rho(vertex(rng)) -= 1.0;
        break;
    }
    const double tv = tv_norm(rho);
    if (tv == 0.0) {
        rho(vertex(rng)) = 1.0;
        return rho * bound;
    }
    const double target = bound * (0.25 + 0.75 * unit(rng));
    return rho * (target / tv);
}

double row_weighted_sup(const EdgeMatrix& v, const Eigen::VectorXd& m)
{
    double best = 0.0;
    for (Index i = 0; i < v.rows(); ++i) {
        double acc = 0.0;
        for (Index j = 0; j < v.cols(); ++j)
            if (j != i) acc += std::abs(v(i, j)) * m(j);
        best = std::max(best, acc);
    }
    return best;
}

template <class Fn>
void for_each_probe(const ProbeConfig& cfg, Index n, Fn&& fn)
{
    for (std::size_t p = 0; p < cfg.probes; ++p) {
        std::mt19937_64 rng(cfg.seed + p);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        const double t = p == 0 ? 0.0 : cfg.horizon * unit(rng);
        const MassVector rho = random_probe(rng, n, cfg.mass_bound);
        MassVector sigma = random_probe(rng, n, cfg.mass_bound);
        if (unit(rng) < 0.5) {
            // Nearby pair: quotients of linear maps see the local slope too.
            sigma = rho + 1e-3 * sigma;
            const double tv = tv_norm(sigma);
            if (tv > cfg.mass_bound) sigma *= cfg.mass_bound / tv;
        }
        fn(t, rho, sigma, rng);
    }
}

}  // namespace

VelocityConstants estimate_constants(const VelocityField& field, const VertexSet& graph,
                                     const ProbeConfig& cfg)
{
    if (cfg.probes < 1) throw ValidationError("estimate_constants: probes must be >= 1");
    VelocityConstants out;
    out.C_V.declared = field.declared_CV;
    out.L_V.declared = field.declared_LV;
    const auto& m = graph.base_masses();
    static const OmegaFunctional none = OmegaFunctional::constant(0.0);
    FieldEvaluator eval(graph, field, none);

    for_each_probe(cfg, graph.size(), [&](double t, const MassVector& rho, const MassVector& sigma, auto&) {
        const EdgeMatrix vr = eval.velocity(t, rho);
        const EdgeMatrix vs = eval.velocity(t, sigma);
        out.C_V.empirical = std::max({out.C_V.empirical, row_weighted_sup(vr, m), row_weighted_sup(vs, m)});
        const double dist = tv_norm(rho - sigma);
        if (dist > 0.0)
            out.L_V.empirical = std::max(out.L_V.empirical, row_weighted_sup(vr - vs, m) / dist);
    });

    if (std::holds_alternative<ZeroVelocity>(field.kind)) {
        out.C_V.closed_form = 0.0;
        out.L_V.closed_form = 0.0;
    } else if (const auto* k = std::get_if<InteractionVelocity>(&field.kind)) {
        const double scale = 2.0 * k->kernel.sup_abs() * k->modulation.sup_abs() * graph.total_base_mass();
        out.C_V.closed_form = scale * cfg.mass_bound;
        out.L_V.closed_form = scale;
    } else if (const auto* table = std::get_if<TabulatedEdges>(&field.kind)) {
        double exact = 0.0;
        for (const auto& v : table->values) exact = std::max(exact, row_weighted_sup(v, m));
        out.C_V.closed_form = exact;
        out.L_V.closed_form = 0.0;
    }
    return out;
}

OmegaConstants estimate_constants(const OmegaFunctional& omega, const VertexSet& graph,
                                  const ProbeConfig& cfg)
{
    if (cfg.probes < 1) throw ValidationError("estimate_constants: probes must be >= 1");
    OmegaConstants out;
    out.C_omega.declared = omega.declared_C;
    out.L_omega.declared = omega.declared_L;
    out.Ct_omega.declared = omega.declared_Ct;
    static const VelocityField none = VelocityField::zero();
    FieldEvaluator eval(graph, none, omega);
    const double h = 1e-5 * cfg.horizon;

    for_each_probe(cfg, graph.size(), [&](double t, const MassVector& rho, const MassVector& sigma, auto& rng) {
        const WeightMatrix wr = eval.omega(t, rho);
        const WeightMatrix ws = eval.omega(t, sigma);
        out.C_omega.empirical = std::max({out.C_omega.empirical, sup_norm(wr), sup_norm(ws)});
        const double dist = tv_norm(rho - sigma);
        if (dist > 0.0)
            out.L_omega.empirical = std::max(out.L_omega.empirical, sup_norm(wr - ws) / dist);
        if (cfg.horizon > 2.0 * h) {
            std::uniform_real_distribution<double> inner(h, cfg.horizon - h);
            const double s = inner(rng);
            const WeightMatrix dt = (eval.omega(s + h, rho) - eval.omega(s - h, rho)) / (2.0 * h);
            out.Ct_omega.empirical = std::max(out.Ct_omega.empirical, sup_norm(dt));
        }
    });

    if (const auto* c = std::get_if<ConstantOmega>(&omega.kind)) {
        out.C_omega.closed_form = c->matrix ? sup_norm(*c->matrix) : std::abs(c->value);
        out.L_omega.closed_form = 0.0;
        out.Ct_omega.closed_form = 0.0;
    } else if (const auto* conv = std::get_if<ConvolutionOmega>(&omega.kind)) {
        if (const auto sup = conv->sup_abs()) {
            out.C_omega.closed_form = *sup * cfg.mass_bound;
            out.L_omega.closed_form = *sup;
        }
        if (const auto sup_dt = conv->sup_abs_dt()) out.Ct_omega.closed_form = *sup_dt * cfg.mass_bound;
    } else if (const auto* table = std::get_if<TabulatedEdges>(&omega.kind)) {
        double exact = 0.0;
        for (const auto& w : table->values) exact = std::max(exact, sup_norm(w));
        out.C_omega.closed_form = exact;
        out.L_omega.closed_form = 0.0;
    }
    return out;
}

}  // namespace conet
