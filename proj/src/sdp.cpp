#include "pilib/sdp.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace pilib {

Eigen::Index SDPProblem::totalDim() const {
    Eigen::Index n = 0;
    for (const auto& blk : blocks) n += blk.size;
    return n;
}

namespace {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

struct BlockMats {
    std::vector<Mat> M;  // dense per block (diagonal blocks kept dense too)
    explicit BlockMats(const SDPProblem& p) {
        for (const auto& blk : p.blocks) M.emplace_back(Mat::Zero(blk.size, blk.size));
    }
    BlockMats() = default;
};

void addEntries(BlockMats& out, const std::vector<SDPProblem::Entry>& es, double scale = 1.0) {
    for (const auto& e : es) {
        out.M[static_cast<size_t>(e.blk)](e.i, e.j) += scale * e.v;
        if (e.i != e.j) out.M[static_cast<size_t>(e.blk)](e.j, e.i) += scale * e.v;
    }
}

double inner(const BlockMats& a, const BlockMats& b) {
    double acc = 0;
    for (size_t k = 0; k < a.M.size(); ++k) acc += (a.M[k].array() * b.M[k].array()).sum();
    return acc;
}

double innerEntries(const std::vector<SDPProblem::Entry>& es, const BlockMats& x) {
    double acc = 0;
    for (const auto& e : es) {
        double v = x.M[static_cast<size_t>(e.blk)](e.i, e.j);
        acc += e.v * (e.i == e.j ? v : 2.0 * v);
    }
    return acc;
}

double frobNorm(const BlockMats& a) {
    double acc = 0;
    for (const auto& m : a.M) acc += m.squaredNorm();
    return std::sqrt(acc);
}

// max step alpha in [0,1] with X + alpha dX >= 0 (strictly inside)
double maxStep(const Mat& X, const Mat& dX) {
    Eigen::LLT<Mat> llt(X);
    if (llt.info() != Eigen::Success) return 0.0;
    Mat L = llt.matrixL();
    Mat Y = L.triangularView<Eigen::Lower>().solve(dX);
    Mat Z = L.triangularView<Eigen::Lower>().solve(Y.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (Z + Z.transpose()));
    double lmin = es.eigenvalues().minCoeff();
    if (lmin >= 0) return 1.0;
    return std::min(1.0, -1.0 / lmin);
}

}  // namespace

SDPSolution solveSDP(const SDPProblem& prob, const SDPOptions& opts) {
    const int m = prob.m();
    const size_t nb = prob.blocks.size();
    SDPSolution sol;
    if (m == 0) {
        sol.verdict = SDPVerdict::Feasible;
        for (const auto& blk : prob.blocks) {
            sol.X.push_back(Mat::Identity(blk.size, blk.size));
            sol.S.push_back(Mat::Identity(blk.size, blk.size));
        }
        sol.y.resize(0);
        return sol;
    }

    BlockMats C(prob);
    addEntries(C, prob.cost);

    Eigen::Index ntot = prob.totalDim();
    double normC = frobNorm(C);
    double normB = prob.b.size() ? prob.b.cwiseAbs().maxCoeff() : 0.0;
    double maxA = 1.0;
    for (const auto& row : prob.rows) {
        double acc = 0;
        for (const auto& e : row) acc += (e.i == e.j ? 1.0 : 2.0) * e.v * e.v;
        maxA = std::max(maxA, std::sqrt(acc));
    }
    double xi = std::max({10.0, std::sqrt(double(ntot)), double(ntot) * (1 + normB) / (1 + maxA)});
    double eta = std::max({10.0, std::sqrt(double(ntot)), (1 + std::max(normC, maxA)) / std::sqrt(double(ntot))});

    BlockMats X(prob), S(prob);
    for (size_t k = 0; k < nb; ++k) {
        X.M[k] = xi * Mat::Identity(prob.blocks[k].size, prob.blocks[k].size);
        S.M[k] = eta * Mat::Identity(prob.blocks[k].size, prob.blocks[k].size);
    }
    Vec y = Vec::Zero(m);

    Eigen::LDLT<Mat> schur;
    Mat Msch(m, m);

    auto operAdj = [&](const Vec& yv) {
        BlockMats out(prob);
        for (int j = 0; j < m; ++j) addEntries(out, prob.rows[static_cast<size_t>(j)], yv(j));
        return out;
    };
    auto operFwd = [&](const BlockMats& Xv) {
        Vec out(m);
        for (int j = 0; j < m; ++j) out(j) = innerEntries(prob.rows[static_cast<size_t>(j)], Xv);
        return out;
    };

    double bscale = 1.0 + normB;
    double cscale = 1.0 + normC;
    for (int iter = 1; iter <= opts.maxIter; ++iter) {
        // residuals
        Vec rp = prob.b - operFwd(X);
        BlockMats Rd = C;
        {
            BlockMats Ay = operAdj(y);
            for (size_t k = 0; k < nb; ++k) Rd.M[k] -= Ay.M[k] + S.M[k];
        }
        double mu = inner(X, S) / double(ntot);
        double pobj = inner(C, X);
        double dobj = prob.b.dot(y);
        double gap = std::abs(pobj - dobj) / (1 + std::abs(pobj) + std::abs(dobj));
        double pres = rp.norm() / bscale;
        double dres = frobNorm(Rd) / cscale;
        sol.iterations = iter;
        sol.pobj = pobj;
        sol.dobj = dobj;
        sol.gap = gap;
        sol.presidual = pres;
        sol.dresidual = dres;
        if (opts.verbose) {
            std::ostringstream os;
            os << "iter " << iter << " mu " << mu << " gap " << gap << " pres " << pres << " dres "
               << dres;
            sol.message += os.str() + "\n";
        }
        if (gap < opts.gapTol && pres < opts.resTol && dres < opts.resTol) {
            sol.verdict = SDPVerdict::Feasible;
            break;
        }
        // infeasibility certificates
        if (dobj > 1.0 && dres * (1 + std::abs(dobj)) < 1e-10 * std::abs(dobj)) {
            sol.verdict = SDPVerdict::PrimalInfeasible;
            sol.message += "primal infeasibility certificate\n";
            break;
        }

        // NT scaling per block: W = G G', G = Lx V Sig^{-1/2}, Ls' Lx = U Sig V'
        std::vector<Mat> G(nb), Ginv(nb), W(nb);
        bool scaleOk = true;
        for (size_t k = 0; k < nb; ++k) {
            Eigen::LLT<Mat> lx(X.M[k]), ls(S.M[k]);
            if (lx.info() != Eigen::Success || ls.info() != Eigen::Success) {
                scaleOk = false;
                break;
            }
            Mat Lx = lx.matrixL(), Ls = ls.matrixL();
            Eigen::JacobiSVD<Mat> svd(Ls.transpose() * Lx,
                                      Eigen::ComputeThinU | Eigen::ComputeThinV);
            Vec sig = svd.singularValues();
            Mat Vv = svd.matrixV();
            Mat SigInvHalf = sig.array().sqrt().inverse().matrix().asDiagonal();
            G[k] = Lx * Vv * SigInvHalf;
            W[k] = G[k] * G[k].transpose();
        }
        if (!scaleOk) {
            sol.verdict = SDPVerdict::Marginal;
            sol.message += "NT scaling failed (iterate left the cone)\n";
            break;
        }

        // Schur complement M_jk = <A_j, W A_k W>, assembled row by row with
        // sparse rank-1 updates W A_j W = sum val (w_u w_v' + w_v w_u').
        {
            BlockMats WAj(prob);
            for (int j = 0; j < m; ++j) {
                for (size_t k = 0; k < nb; ++k) WAj.M[k].setZero();
                for (const auto& e : prob.rows[static_cast<size_t>(j)]) {
                    const Mat& Wk = W[static_cast<size_t>(e.blk)];
                    Mat& out = WAj.M[static_cast<size_t>(e.blk)];
                    if (e.i == e.j) {
                        out.noalias() += e.v * (Wk.col(e.i) * Wk.row(e.i));
                    } else {
                        out.noalias() += e.v * (Wk.col(e.i) * Wk.row(e.j));
                        out.noalias() += e.v * (Wk.col(e.j) * Wk.row(e.i));
                    }
                }
                for (int k = j; k < m; ++k) {
                    double v = innerEntries(prob.rows[static_cast<size_t>(k)], WAj);
                    Msch(j, k) = v;
                    Msch(k, j) = v;
                }
            }
        }
        // tiny Tikhonov guard for numerically singular systems
        double reg = 1e-13 * (1.0 + Msch.diagonal().cwiseAbs().maxCoeff());
        Msch.diagonal().array() += reg;
        schur.compute(Msch);

        BlockMats WRdW(prob);
        for (size_t k = 0; k < nb; ++k) WRdW.M[k] = W[k] * Rd.M[k] * W[k];
        auto solveDir = [&](const BlockMats& Rc, Vec& dy, BlockMats& dS, BlockMats& dX) {
            // rhs = rp + A(W Rd W) - A(Rc)
            Vec rhs = rp;
            for (int j = 0; j < m; ++j)
                rhs(j) += innerEntries(prob.rows[static_cast<size_t>(j)], WRdW) -
                          innerEntries(prob.rows[static_cast<size_t>(j)], Rc);
            dy = schur.solve(rhs);
            dS = Rd;
            {
                BlockMats Ady = operAdj(dy);
                for (size_t k = 0; k < nb; ++k) dS.M[k] -= Ady.M[k];
            }
            dX = Rc;
            for (size_t k = 0; k < nb; ++k) {
                dX.M[k] -= W[k] * dS.M[k] * W[k];
                dX.M[k] = 0.5 * (dX.M[k] + dX.M[k].transpose()).eval();
            }
        };

        // predictor (affine scaling): Rc = -X
        BlockMats Rc(prob);
        for (size_t k = 0; k < nb; ++k) Rc.M[k] = -X.M[k];
        Vec dy_a;
        BlockMats dS_a, dX_a;
        solveDir(Rc, dy_a, dS_a, dX_a);
        double ap = 1.0, ad = 1.0;
        for (size_t k = 0; k < nb; ++k) {
            ap = std::min(ap, maxStep(X.M[k], dX_a.M[k]));
            ad = std::min(ad, maxStep(S.M[k], dS_a.M[k]));
        }
        double muAff = 0;
        {
            double acc = 0;
            for (size_t k = 0; k < nb; ++k)
                acc += ((X.M[k] + ap * dX_a.M[k]).array() * (S.M[k] + ad * dS_a.M[k]).array())
                           .sum();
            muAff = acc / double(ntot);
        }
        double sigma = std::pow(std::max(0.0, muAff / mu), 3.0);
        sigma = std::min(1.0, std::max(1e-6, sigma));

        // corrector: Rc = sigma mu S^{-1} - X - sym(dX_a dS_a S^{-1})
        for (size_t k = 0; k < nb; ++k) {
            Eigen::LLT<Mat> ls(S.M[k]);
            Mat Sinv = ls.solve(Mat::Identity(S.M[k].rows(), S.M[k].cols()));
            Mat corr = dX_a.M[k] * dS_a.M[k] * Sinv;
            Rc.M[k] = sigma * mu * Sinv - X.M[k] - 0.5 * (corr + corr.transpose());
        }
        Vec dy;
        BlockMats dS, dX;
        solveDir(Rc, dy, dS, dX);
        ap = 1.0;
        ad = 1.0;
        for (size_t k = 0; k < nb; ++k) {
            ap = std::min(ap, maxStep(X.M[k], dX.M[k]));
            ad = std::min(ad, maxStep(S.M[k], dS.M[k]));
        }
        ap = std::min(1.0, opts.stepFrac * ap);
        ad = std::min(1.0, opts.stepFrac * ad);
        if (ap < 1e-10 && ad < 1e-10) {
            sol.verdict = SDPVerdict::Marginal;
            sol.message += "step length collapsed\n";
            break;
        }
        for (size_t k = 0; k < nb; ++k) {
            X.M[k] += ap * dX.M[k];
            S.M[k] += ad * dS.M[k];
            X.M[k] = 0.5 * (X.M[k] + X.M[k].transpose()).eval();
            S.M[k] = 0.5 * (S.M[k] + S.M[k].transpose()).eval();
        }
        y += ad * dy;
        if (iter == opts.maxIter) sol.message += "iteration limit reached\n";
    }

    sol.X = X.M;
    sol.S = S.M;
    sol.y = y;
    if (sol.verdict != SDPVerdict::Feasible && sol.verdict != SDPVerdict::PrimalInfeasible) {
        // classify quality
        if (sol.gap < 1e-6 && sol.presidual < 1e-6 && sol.dresidual < 1e-6)
            sol.verdict = SDPVerdict::Feasible;
        else
            sol.verdict = SDPVerdict::Marginal;
    }
    return sol;
}

void exportSDPA(const SDPProblem& prob, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("IOError: cannot open " + path);
    f << prob.m() << "\n";
    f << prob.blocks.size() << "\n";
    for (size_t k = 0; k < prob.blocks.size(); ++k) {
        if (k) f << " ";
        f << (prob.blocks[k].diagonal ? -prob.blocks[k].size : prob.blocks[k].size);
    }
    f << "\n";
    f << std::setprecision(17);
    for (int j = 0; j < prob.m(); ++j) {
        if (j) f << " ";
        f << prob.b(j);
    }
    f << "\n";
    // F0 = -C
    for (const auto& e : prob.cost)
        if (e.v != 0.0)
            f << 0 << " " << e.blk + 1 << " " << e.i + 1 << " " << e.j + 1 << " " << -e.v << "\n";
    for (int j = 0; j < prob.m(); ++j)
        for (const auto& e : prob.rows[static_cast<size_t>(j)])
            if (e.v != 0.0)
                f << j + 1 << " " << e.blk + 1 << " " << e.i + 1 << " " << e.j + 1 << " " << e.v
                  << "\n";
    if (!f) throw std::runtime_error("IOError: write failed for " + path);
}

SDPProblem importSDPA(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("IOError: cannot open " + path);
    auto nextDataLine = [&](std::string& line) {
        while (std::getline(f, line)) {
            size_t pos = line.find_first_not_of(" \t\r");
            if (pos == std::string::npos) continue;
            if (line[pos] == '"' || line[pos] == '*') continue;  // comment lines
            return true;
        }
        return false;
    };
    std::string line;
    SDPProblem prob;
    if (!nextDataLine(line)) throw std::runtime_error("IOError: missing m");
    int m = std::stoi(line);
    if (!nextDataLine(line)) throw std::runtime_error("IOError: missing nblocks");
    int nblocks = std::stoi(line);
    if (!nextDataLine(line)) throw std::runtime_error("IOError: missing block sizes");
    {
        std::istringstream is(line);
        for (int k = 0; k < nblocks; ++k) {
            std::string tok;
            is >> tok;
            // strip braces/commas that some writers emit
            std::string clean;
            for (char c : tok)
                if (c == '-' || std::isdigit(static_cast<unsigned char>(c))) clean += c;
            int sz = std::stoi(clean);
            prob.blocks.push_back({std::abs(sz), sz < 0});
        }
    }
    if (!nextDataLine(line)) throw std::runtime_error("IOError: missing c vector");
    prob.b.resize(m);
    {
        std::istringstream is(line);
        for (int j = 0; j < m; ++j) is >> prob.b(j);
    }
    prob.rows.resize(static_cast<size_t>(m));
    while (nextDataLine(line)) {
        std::istringstream is(line);
        int matno, blkno, i, j;
        double v;
        if (!(is >> matno >> blkno >> i >> j >> v)) continue;
        SDPProblem::Entry e{blkno - 1, i - 1, j - 1, v};
        if (e.i > e.j) std::swap(e.i, e.j);
        if (matno == 0) {
            e.v = -v;  // F0 = -C
            prob.cost.push_back(e);
        } else {
            prob.rows[static_cast<size_t>(matno - 1)].push_back(e);
        }
    }
    return prob;
}

}  // namespace pilib
