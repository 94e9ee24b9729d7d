#pragma once

// Entropic functionals on labeled density matrices. All logarithms base 2.

#include <span>
#include <string>
#include <vector>

#include "otom/otom.hpp"
#include "otom/quantum.hpp"

namespace otom {

using LabelSet = std::vector<std::string>;

/// Von Neumann entropy in bits; eigenvalues below 1e-14 are skipped.
double entropy(const DensityMatrix& rho);

/// Entropy of the reduced state on `labels` (0 for an empty set).
double marginal_entropy(const DensityMatrix& rho, std::span<const std::string> labels);

/// I(x:y) = S(x) + S(y) - S(xy). Values in [-1e-9, 0) are clipped to 0.
double qmi(const DensityMatrix& rho, const LabelSet& x, const LabelSet& y);

/// I(x:y|z) = S(xz) + S(yz) - S(xyz) - S(z). An empty z gives qmi.
double cqmi(const DensityMatrix& rho, const LabelSet& x, const LabelSet& y, const LabelSet& z);

/// log2 of the trace norm of the partial transpose over `cut`.
double log_negativity(const DensityMatrix& rho, const LabelSet& cut);

/// Quantities recorded for every OTOM.
struct CorrelationReport {
    double i_ai_bo = 0.0;
    double i_bi_co = 0.0;
    double i_nonmarkov = 0.0;         // I(a_i b_o : b_i c_o)
    double cqmi_ai_co_given_b = 0.0;  // I(a_i : c_o | b_o b_i)
    double log_negativity = 0.0;      // across a_i b_o : b_i c_o
};

CorrelationReport correlation_report(const OtomChoi& choi);

/// Nine points from 0 to pi/2 inclusive.
std::vector<double> default_phi_grid();

struct DeltaResult {
    double delta = 1.0;
    std::vector<double> phi;
    std::vector<double> qmi;  // I(a_i:c_o | B_phi) per grid point
};

/// Grid min over grid max of I(a_i:c_o) on the z-rotation conditional Choi
/// states; 1 when the max is below 1e-9. The grid must contain 0 and pi/2.
DeltaResult delta(const ProcessSpec& process, std::span<const double> phi_grid);
DeltaResult delta_from_terms(const AnalyticTerms& terms, std::span<const double> phi_grid);

void validate_phi_grid(std::span<const double> phi_grid);

}  // namespace otom
