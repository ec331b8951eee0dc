#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <cstdint>
#include <vector>

namespace flex::conic {

/// Cone program in standard form:
///
///   minimize    c' x
///   subject to  A x = b
///               G x + s = h,   s in K
///
/// where K is the product of an LP cone of dimension `n_lp` (the leading
/// rows of G) followed by second-order cones of the listed dimensions.
struct ConeProblem {
    int n = 0;
    Eigen::SparseMatrix<double> A;  // p x n
    Eigen::SparseMatrix<double> G;  // m x n
    Eigen::VectorXd c;
    Eigen::VectorXd b;
    Eigen::VectorXd h;
    int n_lp = 0;
    std::vector<int> soc_dims;
};

enum class ConeStatus : std::uint8_t {
    Optimal,
    AlmostOptimal,     // converged to reduced accuracy only
    PrimalInfeasible,  // Farkas certificate found
    DualInfeasible,    // unbounded primal
    IterationLimit,
    NumericalError
};

const char* status_name(ConeStatus s);

struct ConeSolution {
    ConeStatus status = ConeStatus::NumericalError;
    Eigen::VectorXd x;
    Eigen::VectorXd y;  // equality multipliers (Farkas weights when infeasible)
    Eigen::VectorXd z;  // cone multipliers
    Eigen::VectorXd s;  // cone slacks
    double objective = 0.0;
    int iterations = 0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    double duality_gap = 0.0;

    bool usable() const {
        return status == ConeStatus::Optimal || status == ConeStatus::AlmostOptimal;
    }
};

struct ConeSettings {
    int max_iters = 100;
    double feastol = 1e-7;
    double abstol = 1e-9;
    double reltol = 5e-10;
    double feastol_reduced = 1e-6;
    double abstol_reduced = 1e-6;
    double reltol_reduced = 1e-6;
    double static_reg = 7e-8;   // quasi-definite regularization of the KKT matrix
    int refine_iters = 9;       // iterative refinement cap per KKT solve
    double refine_stop = 1e-14;
    double step_scale = 0.99;   // fraction of the distance to the cone boundary
    int equil_iters = 3;
};

/// Primal-dual interior-point method on the homogeneous self-dual embedding,
/// with Nesterov-Todd scalings and a Mehrotra predictor-corrector step. The
/// KKT system is factorized by a sparse LDL' with static regularization; the
/// second-order-cone scaling blocks are kept sparse through the standard
/// two-column expansion.
class IpmSolver {
  public:
    explicit IpmSolver(ConeProblem problem, ConeSettings settings = {});

    ConeSolution solve();

  private:
    struct SocScaling {
        int dim = 0;
        int z_start = 0;  // offset into the (unexpanded) cone vectors
        int k_start = 0;  // first KKT row of the expanded block
        double eta2 = 1.0;
        double a = 0.0;
        double w = 0.0;
        double d1 = 1.0;
        double u0 = 0.0;
        double u1 = 0.0;
        double v1 = 0.0;
        Eigen::VectorXd q;
        bool identity = true;
    };

    void equilibrate();
    void setup_kkt();
    void set_identity_scaling();
    void write_kkt_scaling();
    int solve_kkt(const Eigen::VectorXd& rhs, Eigen::VectorXd& dx, Eigen::VectorXd& dy,
                  Eigen::VectorXd& dz);
    void bring_to_cone(const Eigen::VectorXd& r, Eigen::VectorXd& out) const;

    void scale(const Eigen::VectorXd& z, Eigen::VectorXd& lambda) const;  // lambda = W z
    void cone_product(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                      Eigen::VectorXd& out) const;
    void cone_divide(const Eigen::VectorXd& u, const Eigen::VectorXd& w,
                     Eigen::VectorXd& out) const;
    double line_search(const Eigen::VectorXd& lambda, const Eigen::VectorXd& ds,
                       const Eigen::VectorXd& dz, double tau, double dtau, double kap,
                       double dkap) const;
    void expand_rhs(const Eigen::VectorXd& bx, const Eigen::VectorXd& by,
                    const Eigen::VectorXd& bz, Eigen::VectorXd& rhs) const;

    ConeProblem prob_;
    ConeSettings settings_;

    int n_ = 0;       // variables
    int p_ = 0;       // equality rows
    int m_ = 0;       // cone rows (unexpanded)
    int dim_k_ = 0;   // KKT dimension including SOC expansion
    std::vector<SocScaling> socs_;
    Eigen::VectorXd lp_w2_;  // LP-cone scaling s_i / z_i

    Eigen::SparseMatrix<double> At_;
    Eigen::SparseMatrix<double> Gt_;
    Eigen::SparseMatrix<double> K_;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Upper> ldlt_;
    std::vector<std::ptrdiff_t> scaling_slots_;  // offsets into K_'s value array
    Eigen::VectorXd reg_sign_;  // sign of the static regularization per KKT row

    Eigen::VectorXd x_equil_, a_equil_, g_equil_;
};

/// One-call convenience wrapper.
ConeSolution solve_cone_program(const ConeProblem& problem, const ConeSettings& settings = {});

}  // namespace flex::conic
