#pragma once

#include "seqctl/noise.hpp"

#include <Eigen/Dense>

#include <complex>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace seqctl {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

inline constexpr int kMaxDim = 16;

namespace ops {
CMatrix identity(int dim);
CMatrix zero(int dim);
CMatrix pauli_x();
CMatrix pauli_y();
CMatrix pauli_z();
// |k><k| in dimension dim.
CMatrix basis_projector(int dim, int k);
}  // namespace ops

// Largest entrywise |A - A^dagger|.
double hermiticity_defect(const CMatrix& a);

/// Validated density matrix: Hermitian, unit trace, positive semidefinite.
class DensityMatrix {
public:
    explicit DensityMatrix(CMatrix rho);

    static DensityMatrix pure(const CVector& psi);
    static DensityMatrix basis(int dim, int k);

    int dim() const noexcept { return static_cast<int>(rho_.rows()); }
    const CMatrix& matrix() const noexcept { return rho_; }
    Complex operator()(int i, int j) const { return rho_(i, j); }

    // Re Tr[rho X].
    double expectation(const CMatrix& x) const;

private:
    CMatrix rho_;
};

enum class MeasurementKind { Projective, General };

/// Kraus operator M_theta of one outcome; its effect is F = M^dagger M.
class MeasurementOperator {
public:
    MeasurementOperator(MeasurementKind kind, CMatrix kraus, std::string label);

    static MeasurementOperator projector(CMatrix p, std::string label);
    static MeasurementOperator general(CMatrix m, std::string label);

    MeasurementKind kind() const noexcept { return kind_; }
    bool is_projective() const noexcept { return kind_ == MeasurementKind::Projective; }
    const CMatrix& kraus() const noexcept { return kraus_; }
    const CMatrix& effect() const noexcept { return effect_; }
    const std::string& label() const noexcept { return label_; }
    int dim() const noexcept { return static_cast<int>(kraus_.rows()); }

private:
    MeasurementKind kind_;
    CMatrix kraus_;
    CMatrix effect_;
    std::string label_;
};

/// Complete set of outcomes: sum of effects is the identity, labels unique.
class MeasurementSet {
public:
    explicit MeasurementSet(std::vector<MeasurementOperator> operators);

    const std::vector<MeasurementOperator>& operators() const noexcept { return operators_; }
    int dim() const noexcept { return operators_.front().dim(); }

private:
    std::vector<MeasurementOperator> operators_;
};

struct ControlTerm {
    std::function<double(double)> lambda;
    CMatrix op;
};

struct NoiseCoupling {
    CMatrix op;
    NoiseModel model;
};

/// H(t) = H0 + lambda(t) sigma + E(t) B with hbar = 1.
class HamiltonianSpec {
public:
    explicit HamiltonianSpec(CMatrix h0, std::optional<ControlTerm> control = std::nullopt,
                             std::optional<NoiseCoupling> noise = std::nullopt);

    int dim() const noexcept { return static_cast<int>(h0_.rows()); }
    const CMatrix& h0() const noexcept { return h0_; }
    const std::optional<ControlTerm>& control() const noexcept { return control_; }
    const std::optional<NoiseCoupling>& noise() const noexcept { return noise_; }

    bool has_noise() const noexcept { return noise_.has_value(); }
    bool is_time_independent() const noexcept { return !control_ && !noise_; }

    // H(t) for a given field value E(t).
    CMatrix at(double t, double field = 0.0) const;

    // P H(t) P, built term by term so the projected Hamiltonian stays time dependent.
    HamiltonianSpec projected(const CMatrix& p) const;

private:
    CMatrix h0_;
    std::optional<ControlTerm> control_;
    std::optional<NoiseCoupling> noise_;
};

// exp(-i h t) for Hermitian h, via eigendecomposition.
CMatrix unitary_step(const CMatrix& h, double t);

/// Time-ordered propagator over [t_start, t_end] as a product of midpoint
/// steps of size <= dt. `noise_path` (time origin 0) must cover the interval
/// when the Hamiltonian carries a noise term.
CMatrix propagator(const HamiltonianSpec& ham, double t_start, double t_end, double dt,
                   const NoisePath* noise_path = nullptr);

DensityMatrix propagate(const DensityMatrix& rho, const HamiltonianSpec& ham, double t_start, double t_end,
                        double dt, const NoisePath* noise_path = nullptr);

struct MeasurementOutcome {
    double probability;
    DensityMatrix state;
};

// Threshold below which an outcome branch counts as impossible.
inline constexpr double kZeroProbability = 1e-15;

/// p = Tr[rho F], post-measurement state M rho M^dagger / p. Throws
/// ErrorCode::ZeroProbability when p < kZeroProbability.
MeasurementOutcome apply_measurement(const DensityMatrix& rho, const MeasurementOperator& op);

// Outcome probabilities only, one per operator, in set order.
std::vector<double> outcome_probabilities(const DensityMatrix& rho, const MeasurementSet& set);

CMatrix zeno_hamiltonian(const CMatrix& h, const MeasurementOperator& proj);

/// Standard deviation of the leakage generator H - P H P in a state
/// supported on the projector subspace.
double eta(const DensityMatrix& rho_proj, const CMatrix& h, const MeasurementOperator& proj);

}  // namespace seqctl
