#ifndef OHMM_IO_HPP
#define OHMM_IO_HPP

#include <string>

#include "ohmm/analysis.hpp"

namespace ohmm {

// Shortest round-trip formatting (17 significant digits).
std::string format_real(double x);

// Trajectory files: header "t,state,y", one row per sample, states 1-based,
// observations with 17 significant digits.
void write_trajectory_csv(const Trajectory& traj, const std::string& path);
Trajectory read_trajectory_csv(const std::string& path);

// Batch EM traces: header "iter,loglik,q11,...,qmm,mu1,...,mum,v" listing the
// diagonal transition entries; for two states exactly
// "iter,loglik,q11,q22,mu1,mu2,v".
void write_em_trace_csv(const EmTrace& trace, int m, const std::string& path);

// Online estimate traces: header
// "n,q11,...,qmm,mu1,...,mum,v,q11_avg,...,v_avg,skips"; the averaged cells
// are empty on rows before the averaging onset.
void write_estimate_trace_csv(const EstimateTrace& trace, int m, const std::string& path);

// Information matrix as a dim x dim CSV block, and a JSON summary holding
// the dimensions, sampling configuration and asymptotic standard deviations
// (null when the matrix is singular).
void write_fisher_csv(const FisherEstimate& est, const std::string& path);
void write_fisher_json(const FisherEstimate& est, const std::string& path);

// Writes via a temporary file in the same directory followed by a rename.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace ohmm

#endif
