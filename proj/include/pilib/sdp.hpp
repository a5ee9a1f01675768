#ifndef PILIB_SDP_HPP
#define PILIB_SDP_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace pilib {

// Standard-form semidefinite program over block-diagonal X:
//   min  sum_k <C_k, X_k>
//   s.t. sum_k <A_{j,k}, X_k> = b_j,   X_k >= 0.
// Diagonal blocks represent LP cones (free scalars enter as split pairs).
struct SDPProblem {
    struct Block {
        int size = 0;
        bool diagonal = false;
    };
    struct Entry {
        int blk = 0;
        int i = 0, j = 0;  // i <= j
        double v = 0.0;
    };
    std::vector<Block> blocks;
    std::vector<std::vector<Entry>> rows;  // constraint matrices A_j
    Eigen::VectorXd b;
    std::vector<Entry> cost;  // C

    int m() const { return static_cast<int>(rows.size()); }
    Eigen::Index totalDim() const;
};

struct SDPOptions {
    double gapTol = 1e-8;
    double resTol = 1e-8;
    int maxIter = 100;
    double stepFrac = 0.98;
    bool verbose = false;
};

enum class SDPVerdict { Feasible, Marginal, PrimalInfeasible, DualInfeasible };

struct SDPSolution {
    std::vector<Eigen::MatrixXd> X;  // per block
    Eigen::VectorXd y;
    std::vector<Eigen::MatrixXd> S;
    double pobj = 0, dobj = 0, gap = 0, presidual = 0, dresidual = 0;
    int iterations = 0;
    SDPVerdict verdict = SDPVerdict::Marginal;
    std::string message;
};

SDPSolution solveSDP(const SDPProblem& prob, const SDPOptions& opts = {});

// Sparse SDPA (.dat-s) interchange: the file encodes the pair
//   (P) min c'x  s.t.  sum_i x_i F_i - F0 >= 0
//   (D) max <F0,Y> s.t. <F_i,Y> = c_i, Y >= 0,
// of which (D) is this problem (F_i = A_i, c = b, F0 = -C).
void exportSDPA(const SDPProblem& prob, const std::string& path);
SDPProblem importSDPA(const std::string& path);

}  // namespace pilib

#endif
