#pragma once

#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "aquactrl/hydraulics.hpp"
#include "aquactrl/network.hpp"

namespace aquactrl {

// Operating point for the denominator-free system. Direction weights per
// pipe are the sums of the piecewise-segment binaries assigned to each flow
// direction; when the vector is empty the flow signs decide (analysis use).
struct ApproxWqInput {
  std::vector<double> flows;       // signed, link layout {pipes, pumps, valves}
  std::vector<double> demands;     // per junction
  std::vector<double> tank_heads;  // per tank, step start
  std::vector<std::optional<std::pair<double, double>>> pipe_dir;  // (fwd, rev)
};

// Denominator-free variants of the transport matrices: every entry whose
// denominator depends on decision variables (junction throughflow, next-step
// tank volume) is replaced by its numerator, so all entries are polynomial
// in the flows, volumes, and direction binaries. Rows are normalized by
// constant reference scales to keep powers representable; this rescaling is
// decision-independent and preserves the sparsity/rank structure.
void assemble_approx_wq(const Network& net, const ApproxWqInput& in,
                        const SegmentPlan& plan, Eigen::MatrixXd* A_out,
                        Eigen::MatrixXd* B_out);

// C_T W~ C_T^T with W~ the N-step Gramian of the denominator-free pair,
// evaluated numerically at the operating point.
Eigen::MatrixXd approx_target_gramian(const Network& net, const ApproxWqInput& in,
                                      const SegmentPlan& plan,
                                      const Eigen::MatrixXd& C_T, int N);

}  // namespace aquactrl
