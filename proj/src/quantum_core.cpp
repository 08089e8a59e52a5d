#include "seqctl/quantum_core.hpp"

#include "seqctl/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

namespace seqctl {

namespace {

constexpr double kHermitianTol = 1e-12;
constexpr double kTraceTol = 1e-10;
constexpr double kPsdTol = 1e-10;

void require(bool ok, const std::string& msg) {
    if (!ok) throw Error(ErrorCode::InvalidInput, msg);
}

void require_square(const CMatrix& m, const char* what) {
    require(m.rows() == m.cols(), std::string(what) + ": matrix must be square");
    require(m.rows() >= 1 && m.rows() <= kMaxDim,
            std::string(what) + ": dimension must be in [1, " + std::to_string(kMaxDim) + "]");
    require(m.allFinite(), std::string(what) + ": entries must be finite");
}

void require_hermitian(const CMatrix& m, const char* what) {
    require_square(m, what);
    require(hermiticity_defect(m) <= kHermitianTol, std::string(what) + ": operator is not Hermitian");
}

CMatrix hermitian_part(const CMatrix& m) { return 0.5 * (m + m.adjoint()); }

}  // namespace

namespace ops {

CMatrix identity(int dim) { return CMatrix::Identity(dim, dim); }
CMatrix zero(int dim) { return CMatrix::Zero(dim, dim); }

CMatrix pauli_x() {
    CMatrix m(2, 2);
    m << 0.0, 1.0,
         1.0, 0.0;
    return m;
}

CMatrix pauli_y() {
    CMatrix m(2, 2);
    m << 0.0, Complex(0.0, -1.0),
         Complex(0.0, 1.0), 0.0;
    return m;
}

CMatrix pauli_z() {
    CMatrix m(2, 2);
    m << 1.0, 0.0,
         0.0, -1.0;
    return m;
}

CMatrix basis_projector(int dim, int k) {
    require(dim >= 1 && k >= 0 && k < dim, "basis_projector: index out of range");
    CMatrix m = CMatrix::Zero(dim, dim);
    m(k, k) = 1.0;
    return m;
}

}  // namespace ops

double hermiticity_defect(const CMatrix& a) {
    if (a.rows() != a.cols()) return INFINITY;
    return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

// ---------------------------------------------------------------------------

DensityMatrix::DensityMatrix(CMatrix rho) : rho_(std::move(rho)) {
    require_hermitian(rho_, "DensityMatrix");
    const double trace_defect = std::abs(rho_.trace() - Complex(1.0, 0.0));
    require(trace_defect < kTraceTol, "DensityMatrix: trace must be 1 (off by " + std::to_string(trace_defect) + ")");
    Eigen::SelfAdjointEigenSolver<CMatrix> es(rho_, Eigen::EigenvaluesOnly);
    require(es.eigenvalues().minCoeff() >= -kPsdTol, "DensityMatrix: not positive semidefinite");
}

DensityMatrix DensityMatrix::pure(const CVector& psi) {
    const double norm = psi.norm();
    require(norm > 0.0, "DensityMatrix::pure: zero vector");
    const CVector v = psi / norm;
    return DensityMatrix(v * v.adjoint());
}

DensityMatrix DensityMatrix::basis(int dim, int k) { return DensityMatrix(ops::basis_projector(dim, k)); }

double DensityMatrix::expectation(const CMatrix& x) const {
    require(x.rows() == rho_.rows() && x.cols() == rho_.cols(), "expectation: dimension mismatch");
    return (rho_ * x).trace().real();
}

// ---------------------------------------------------------------------------

MeasurementOperator::MeasurementOperator(MeasurementKind kind, CMatrix kraus, std::string label)
    : kind_(kind), kraus_(std::move(kraus)), label_(std::move(label)) {
    require_square(kraus_, "MeasurementOperator");
    if (kind_ == MeasurementKind::Projective) {
        require(hermiticity_defect(kraus_) <= kHermitianTol, "MeasurementOperator: projector must be Hermitian");
        require((kraus_ * kraus_ - kraus_).cwiseAbs().maxCoeff() <= kHermitianTol,
                "MeasurementOperator: projector must be idempotent");
    }
    effect_ = hermitian_part(kraus_.adjoint() * kraus_);
}

MeasurementOperator MeasurementOperator::projector(CMatrix p, std::string label) {
    return MeasurementOperator(MeasurementKind::Projective, std::move(p), std::move(label));
}

MeasurementOperator MeasurementOperator::general(CMatrix m, std::string label) {
    return MeasurementOperator(MeasurementKind::General, std::move(m), std::move(label));
}

MeasurementSet::MeasurementSet(std::vector<MeasurementOperator> operators) : operators_(std::move(operators)) {
    require(!operators_.empty(), "MeasurementSet: no operators");
    const int dim = operators_.front().dim();
    std::set<std::string> labels;
    CMatrix total = CMatrix::Zero(dim, dim);
    for (const auto& op : operators_) {
        require(op.dim() == dim, "MeasurementSet: operators must share one dimension");
        require(labels.insert(op.label()).second, "MeasurementSet: duplicate outcome label '" + op.label() + "'");
        total += op.effect();
    }
    const double defect = (total - CMatrix::Identity(dim, dim)).cwiseAbs().maxCoeff();
    require(defect <= 1e-10, "MeasurementSet: effects do not sum to identity (defect " + std::to_string(defect) + ")");
}

// ---------------------------------------------------------------------------

HamiltonianSpec::HamiltonianSpec(CMatrix h0, std::optional<ControlTerm> control, std::optional<NoiseCoupling> noise)
    : h0_(std::move(h0)), control_(std::move(control)), noise_(std::move(noise)) {
    require_hermitian(h0_, "HamiltonianSpec H0");
    if (control_) {
        require(static_cast<bool>(control_->lambda), "HamiltonianSpec: control amplitude function missing");
        require_hermitian(control_->op, "HamiltonianSpec control operator");
        require(control_->op.rows() == h0_.rows(), "HamiltonianSpec: control operator dimension mismatch");
    }
    if (noise_) {
        require_hermitian(noise_->op, "HamiltonianSpec noise coupling");
        require(noise_->op.rows() == h0_.rows(), "HamiltonianSpec: noise coupling dimension mismatch");
    }
}

CMatrix HamiltonianSpec::at(double t, double field) const {
    CMatrix h = h0_;
    if (control_) h += control_->lambda(t) * control_->op;
    if (noise_) h += field * noise_->op;
    return h;
}

HamiltonianSpec HamiltonianSpec::projected(const CMatrix& p) const {
    require(p.rows() == h0_.rows() && p.cols() == h0_.cols(), "projected: dimension mismatch");
    auto sandwich = [&](const CMatrix& x) { return CMatrix(hermitian_part(p * x * p)); };
    std::optional<ControlTerm> control;
    if (control_) control = ControlTerm{control_->lambda, sandwich(control_->op)};
    std::optional<NoiseCoupling> noise;
    if (noise_) noise = NoiseCoupling{sandwich(noise_->op), noise_->model};
    return HamiltonianSpec(sandwich(h0_), std::move(control), std::move(noise));
}

// ---------------------------------------------------------------------------

CMatrix unitary_step(const CMatrix& h, double t) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
    const CMatrix& v = es.eigenvectors();
    CVector phases(h.rows());
    for (Eigen::Index k = 0; k < h.rows(); ++k) phases(k) = std::polar(1.0, -es.eigenvalues()(k) * t);
    return v * phases.asDiagonal() * v.adjoint();
}

namespace {

CMatrix matrix_power(CMatrix base, std::size_t n) {
    CMatrix result = CMatrix::Identity(base.rows(), base.cols());
    while (n > 0) {
        if (n & 1U) result = base * result;
        n >>= 1U;
        if (n > 0) base = base * base;
    }
    return result;
}

}  // namespace

CMatrix propagator(const HamiltonianSpec& ham, double t_start, double t_end, double dt, const NoisePath* noise_path) {
    require(std::isfinite(t_start) && std::isfinite(t_end), "propagate: times must be finite");
    require(t_end >= t_start, "propagate: t_end must be >= t_start");
    require(std::isfinite(dt) && dt > 0.0, "propagate: dt must be > 0");
    const int dim = ham.dim();
    if (t_end == t_start) return CMatrix::Identity(dim, dim);

    const std::size_t n = grid_intervals(t_end - t_start, dt);
    const double h = (t_end - t_start) / static_cast<double>(n);

    if (ham.has_noise()) {
        if (noise_path == nullptr) throw Error(ErrorCode::Coverage, "propagate: noisy Hamiltonian needs a noise path");
        const double tol = 1e-9 * std::max(1.0, t_end);
        if (t_start < -tol || noise_path->duration() < t_end - tol) {
            throw Error(ErrorCode::Coverage, "propagate: noise path does not cover [" + std::to_string(t_start) +
                                                 ", " + std::to_string(t_end) + "]");
        }
        if (noise_path->step() > dt * (1.0 + 1e-9)) {
            throw Error(ErrorCode::Coverage, "propagate: noise path grid is coarser than dt");
        }
    }

    if (ham.is_time_independent()) return matrix_power(unitary_step(ham.h0(), h), n);

    CMatrix u = CMatrix::Identity(dim, dim);
    for (std::size_t k = 0; k < n; ++k) {
        const double tm = t_start + (static_cast<double>(k) + 0.5) * h;
        const double field = ham.has_noise() ? noise_path->at(tm) : 0.0;
        const CMatrix hk = ham.at(tm, field);
        require(hermiticity_defect(hk) <= kHermitianTol, "propagate: Hamiltonian sample is not Hermitian");
        u = unitary_step(hk, h) * u;
    }
    return u;
}

DensityMatrix propagate(const DensityMatrix& rho, const HamiltonianSpec& ham, double t_start, double t_end, double dt,
                        const NoisePath* noise_path) {
    require(rho.dim() == ham.dim(), "propagate: state and Hamiltonian dimensions differ");
    const CMatrix u = propagator(ham, t_start, t_end, dt, noise_path);
    return DensityMatrix(hermitian_part(u * rho.matrix() * u.adjoint()));
}

// ---------------------------------------------------------------------------

MeasurementOutcome apply_measurement(const DensityMatrix& rho, const MeasurementOperator& op) {
    require(rho.dim() == op.dim(), "apply_measurement: dimension mismatch");
    const CMatrix& m = op.kraus();
    CMatrix post = m * rho.matrix() * m.adjoint();
    const double p = post.trace().real();
    if (!(p >= kZeroProbability)) {
        throw Error(ErrorCode::ZeroProbability,
                    "apply_measurement: outcome '" + op.label() + "' has probability " + std::to_string(p));
    }
    post = hermitian_part(post) / p;
    return {std::min(p, 1.0), DensityMatrix(std::move(post))};
}

std::vector<double> outcome_probabilities(const DensityMatrix& rho, const MeasurementSet& set) {
    require(rho.dim() == set.dim(), "outcome_probabilities: dimension mismatch");
    std::vector<double> probs;
    probs.reserve(set.operators().size());
    for (const auto& op : set.operators()) probs.push_back(std::clamp(rho.expectation(op.effect()), 0.0, 1.0));
    return probs;
}

CMatrix zeno_hamiltonian(const CMatrix& h, const MeasurementOperator& proj) {
    require(proj.is_projective(), "zeno_hamiltonian: operator must be projective");
    require(h.rows() == proj.dim() && h.cols() == proj.dim(), "zeno_hamiltonian: dimension mismatch");
    const CMatrix& p = proj.kraus();
    return p * h * p;
}

double eta(const DensityMatrix& rho_proj, const CMatrix& h, const MeasurementOperator& proj) {
    require(proj.is_projective(), "eta: operator must be projective");
    require(h.rows() == proj.dim() && rho_proj.dim() == proj.dim(), "eta: dimension mismatch");
    const CMatrix& p = proj.kraus();
    const double support = rho_proj.expectation(p);
    require(std::abs(support - 1.0) <= 1e-8, "eta: state is not supported on the projector subspace");

    const CMatrix leak = h - p * h * p;
    const double mean = rho_proj.expectation(leak);
    const double second = rho_proj.expectation(leak * leak);
    const double var = second - mean * mean;
    if (var < -1e-12) {
        throw Error(ErrorCode::NumericalConsistency, "eta: negative variance " + std::to_string(var));
    }
    return std::sqrt(std::max(var, 0.0));
}

}  // namespace seqctl
