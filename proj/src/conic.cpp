#include "flex/conic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <stdexcept>

namespace flex::conic {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sqrt_or_one(double v) { return std::abs(v) < 1e-6 ? 1.0 : std::sqrt(v); }

void scale_rows(const Eigen::VectorXd& e, Eigen::SparseMatrix<double>& m) {
    for (int col = 0; col < m.outerSize(); ++col) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(m, col); it; ++it) {
            it.valueRef() /= e(it.row());
        }
    }
}

void scale_cols(const Eigen::VectorXd& e, Eigen::SparseMatrix<double>& m) {
    for (int col = 0; col < m.outerSize(); ++col) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(m, col); it; ++it) {
            it.valueRef() /= e(col);
        }
    }
}

void max_abs_rows(Eigen::VectorXd& e, const Eigen::SparseMatrix<double>& m) {
    for (int col = 0; col < m.outerSize(); ++col) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(m, col); it; ++it) {
            e(it.row()) = std::max(e(it.row()), std::abs(it.value()));
        }
    }
}

void max_abs_cols(Eigen::VectorXd& e, const Eigen::SparseMatrix<double>& m) {
    for (int col = 0; col < m.outerSize(); ++col) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(m, col); it; ++it) {
            e(col) = std::max(e(col), std::abs(it.value()));
        }
    }
}

struct Iterate {
    Eigen::VectorXd x, y, z, s;
    double tau = 1.0;
    double kap = 1.0;
    double pres = kInf;
    double dres = kInf;
    double gap = kInf;
    double relgap = kInf;
    double mu = kInf;
    bool valid = false;

    double merit() const {
        // One scalar so dithering iterates still rank; residuals dominate,
        // the (relative) gap breaks ties.
        return std::max(pres, dres) + 0.1 * std::min(std::abs(gap), relgap);
    }

    bool better_than(const Iterate& other) const {
        if (!other.valid) return true;
        return gap > 0.0 && merit() < other.merit();
    }
};

}  // namespace

const char* status_name(ConeStatus s) {
    switch (s) {
        case ConeStatus::Optimal: return "optimal";
        case ConeStatus::AlmostOptimal: return "almost-optimal";
        case ConeStatus::PrimalInfeasible: return "primal-infeasible";
        case ConeStatus::DualInfeasible: return "dual-infeasible";
        case ConeStatus::IterationLimit: return "iteration-limit";
        case ConeStatus::NumericalError: return "numerical-error";
    }
    return "?";
}

IpmSolver::IpmSolver(ConeProblem problem, ConeSettings settings)
    : prob_(std::move(problem)), settings_(settings) {
    n_ = prob_.n;
    p_ = static_cast<int>(prob_.A.rows());
    m_ = static_cast<int>(prob_.G.rows());

    int soc_total = 0;
    for (int d : prob_.soc_dims) {
        if (d < 2) throw std::invalid_argument("cone program: SOC dimension must be >= 2");
        soc_total += d;
    }
    if (prob_.n_lp + soc_total != m_) {
        throw std::invalid_argument("cone program: cone dimensions do not match G");
    }
    if (prob_.c.size() != n_ || prob_.b.size() != p_ || prob_.h.size() != m_) {
        throw std::invalid_argument("cone program: vector sizes do not match");
    }

    socs_.resize(prob_.soc_dims.size());
    int z_off = prob_.n_lp;
    int k_off = n_ + p_ + prob_.n_lp;
    for (std::size_t i = 0; i < socs_.size(); ++i) {
        socs_[i].dim = prob_.soc_dims[i];
        socs_[i].z_start = z_off;
        socs_[i].k_start = k_off;
        socs_[i].q.setZero(socs_[i].dim - 1);
        z_off += socs_[i].dim;
        k_off += socs_[i].dim + 2;
    }
    dim_k_ = k_off;
    lp_w2_.setOnes(prob_.n_lp);

    equilibrate();
    At_ = prob_.A.transpose();
    Gt_ = prob_.G.transpose();
    setup_kkt();
}

void IpmSolver::equilibrate() {
    x_equil_.setOnes(n_);
    a_equil_.setOnes(p_);
    g_equil_.setOnes(m_);

    Eigen::VectorXd xt(n_), at(p_), gt(m_);
    for (int iter = 0; iter < settings_.equil_iters; ++iter) {
        xt.setZero();
        at.setZero();
        gt.setZero();
        max_abs_cols(xt, prob_.A);
        max_abs_cols(xt, prob_.G);
        max_abs_rows(at, prob_.A);
        max_abs_rows(gt, prob_.G);

        // Rows of one second-order cone must share a scale.
        for (const SocScaling& sc : socs_) {
            const double total = gt.segment(sc.z_start, sc.dim).sum();
            gt.segment(sc.z_start, sc.dim).setConstant(total);
        }

        xt = xt.unaryExpr(&sqrt_or_one);
        at = at.unaryExpr(&sqrt_or_one);
        gt = gt.unaryExpr(&sqrt_or_one);

        scale_rows(at, prob_.A);
        scale_rows(gt, prob_.G);
        scale_cols(xt, prob_.A);
        scale_cols(xt, prob_.G);

        x_equil_ = x_equil_.cwiseProduct(xt);
        a_equil_ = a_equil_.cwiseProduct(at);
        g_equil_ = g_equil_.cwiseProduct(gt);
    }
    prob_.c = prob_.c.cwiseQuotient(x_equil_);
    prob_.b = prob_.b.cwiseQuotient(a_equil_);
    prob_.h = prob_.h.cwiseQuotient(g_equil_);
}

void IpmSolver::setup_kkt() {
    //      [ dI   A'   G'  ]
    //  K = [ A   -dI   0   ]   (upper triangle stored)
    //      [ G    0   -V-dS]
    //
    // V is the Nesterov-Todd scaling block; each second-order cone is
    // expanded by two rows/columns so the sparsity pattern stays static.
    const double delta = settings_.static_reg;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(At_.nonZeros() + Gt_.nonZeros() + dim_k_ + 4 * m_));

    for (int k = 0; k < n_; ++k) trip.emplace_back(k, k, delta);
    for (int k = 0; k < p_; ++k) trip.emplace_back(n_ + k, n_ + k, -delta);

    for (int col = 0; col < At_.outerSize(); ++col) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(At_, col); it; ++it) {
            trip.emplace_back(static_cast<int>(it.row()), n_ + col, it.value());
        }
    }

    // G': LP columns first, then each cone's columns at expanded offsets.
    auto expanded_row = [&](int r) {
        if (r < prob_.n_lp) return n_ + p_ + r;
        for (const SocScaling& sc : socs_) {
            if (r < sc.z_start + sc.dim) return sc.k_start + (r - sc.z_start);
        }
        throw std::logic_error("expanded_row: bad row");
    };
    for (int col = 0; col < Gt_.outerSize(); ++col) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(Gt_, col); it; ++it) {
            trip.emplace_back(static_cast<int>(it.row()), expanded_row(col), it.value());
        }
    }

    // Scaling block placeholders (identity scaling values).
    for (int k = 0; k < prob_.n_lp; ++k) {
        const int d = n_ + p_ + k;
        trip.emplace_back(d, d, -(1.0 + delta));
    }
    for (const SocScaling& sc : socs_) {
        const int c0 = sc.k_start;
        const int e1 = sc.k_start + sc.dim;
        const int e2 = e1 + 1;
        for (int k = 0; k < sc.dim; ++k) trip.emplace_back(c0 + k, c0 + k, -(1.0 + delta));
        trip.emplace_back(e1, e1, -(1.0 + delta));
        for (int k = 1; k < sc.dim; ++k) trip.emplace_back(c0 + k, e1, 0.0);
        trip.emplace_back(e2, e2, 1.0 + delta);
        for (int k = 0; k < sc.dim; ++k) trip.emplace_back(c0 + k, e2, 0.0);
    }

    K_.resize(dim_k_, dim_k_);
    K_.setFromTriplets(trip.begin(), trip.end());
    K_.makeCompressed();

    // K = K0 + delta * diag(reg_sign_); refinement targets K0.
    reg_sign_.setConstant(dim_k_, -1.0);
    reg_sign_.head(n_).setConstant(1.0);
    for (const SocScaling& sc : socs_) reg_sign_(sc.k_start + sc.dim + 1) = 1.0;

    // Locate the scaling slots in the compressed value array, in the same
    // order write_kkt_scaling() fills them.
    auto slot = [&](int row, int col) {
        const int* outer = K_.outerIndexPtr();
        const int* inner = K_.innerIndexPtr();
        for (int idx = outer[col]; idx < outer[col + 1]; ++idx) {
            if (inner[idx] == row) return static_cast<std::ptrdiff_t>(idx);
        }
        throw std::logic_error("KKT scaling slot not found");
    };
    scaling_slots_.clear();
    for (int k = 0; k < prob_.n_lp; ++k) {
        scaling_slots_.push_back(slot(n_ + p_ + k, n_ + p_ + k));
    }
    for (const SocScaling& sc : socs_) {
        const int c0 = sc.k_start;
        const int e1 = sc.k_start + sc.dim;
        const int e2 = e1 + 1;
        for (int k = 0; k < sc.dim; ++k) scaling_slots_.push_back(slot(c0 + k, c0 + k));
        scaling_slots_.push_back(slot(e1, e1));
        for (int k = 1; k < sc.dim; ++k) scaling_slots_.push_back(slot(c0 + k, e1));
        scaling_slots_.push_back(slot(e2, e2));
        for (int k = 0; k < sc.dim; ++k) scaling_slots_.push_back(slot(c0 + k, e2));
    }

    ldlt_.analyzePattern(K_);
}

void IpmSolver::set_identity_scaling() {
    lp_w2_.setOnes();
    for (SocScaling& sc : socs_) {
        sc.identity = true;
        sc.eta2 = 1.0;
        sc.d1 = 1.0;
        sc.u0 = 0.0;
        sc.u1 = 0.0;
        sc.v1 = 0.0;
        sc.a = 0.0;
        sc.w = 0.0;
        sc.q.setZero();
    }
    write_kkt_scaling();
}

void IpmSolver::write_kkt_scaling() {
    const double delta = settings_.static_reg;
    double* vals = K_.valuePtr();
    std::size_t i = 0;
    for (int k = 0; k < prob_.n_lp; ++k) {
        vals[scaling_slots_[i++]] = -(lp_w2_(k) + delta);
    }
    for (const SocScaling& sc : socs_) {
        vals[scaling_slots_[i++]] = -(sc.eta2 * sc.d1 + delta);
        for (int k = 1; k < sc.dim; ++k) vals[scaling_slots_[i++]] = -(sc.eta2 + delta);
        vals[scaling_slots_[i++]] = -(sc.eta2 + delta);
        for (int k = 1; k < sc.dim; ++k) {
            vals[scaling_slots_[i++]] = -sc.eta2 * sc.v1 * sc.q(k - 1);
        }
        vals[scaling_slots_[i++]] = sc.eta2 + delta;
        vals[scaling_slots_[i++]] = -sc.eta2 * sc.u0;
        for (int k = 1; k < sc.dim; ++k) {
            vals[scaling_slots_[i++]] = -sc.eta2 * sc.u1 * sc.q(k - 1);
        }
    }
}

void IpmSolver::scale(const Eigen::VectorXd& z, Eigen::VectorXd& lambda) const {
    lambda.head(prob_.n_lp) = lp_w2_.cwiseSqrt().cwiseProduct(z.head(prob_.n_lp));
    for (const SocScaling& sc : socs_) {
        const auto z1 = z.segment(sc.z_start + 1, sc.dim - 1);
        const double eta = std::sqrt(sc.eta2);
        if (sc.identity) {
            lambda.segment(sc.z_start, sc.dim) = z.segment(sc.z_start, sc.dim);
            continue;
        }
        const double zeta = sc.q.dot(z1);
        const double factor = z(sc.z_start) + zeta / (1.0 + sc.a);
        lambda(sc.z_start) = eta * (sc.a * z(sc.z_start) + zeta);
        lambda.segment(sc.z_start + 1, sc.dim - 1) = eta * (z1 + factor * sc.q);
    }
}

void IpmSolver::cone_product(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                             Eigen::VectorXd& out) const {
    out.head(prob_.n_lp) = u.head(prob_.n_lp).cwiseProduct(v.head(prob_.n_lp));
    for (const SocScaling& sc : socs_) {
        const auto u1 = u.segment(sc.z_start + 1, sc.dim - 1);
        const auto v1 = v.segment(sc.z_start + 1, sc.dim - 1);
        const double u0 = u(sc.z_start);
        const double v0 = v(sc.z_start);
        out(sc.z_start) = u.segment(sc.z_start, sc.dim).dot(v.segment(sc.z_start, sc.dim));
        out.segment(sc.z_start + 1, sc.dim - 1) = u0 * v1 + v0 * u1;
    }
}

void IpmSolver::cone_divide(const Eigen::VectorXd& u, const Eigen::VectorXd& w,
                            Eigen::VectorXd& out) const {
    out.head(prob_.n_lp) = w.head(prob_.n_lp).cwiseQuotient(u.head(prob_.n_lp));
    for (const SocScaling& sc : socs_) {
        const auto u1 = u.segment(sc.z_start + 1, sc.dim - 1);
        const auto w1 = w.segment(sc.z_start + 1, sc.dim - 1);
        const double u0 = u(sc.z_start);
        const double w0 = w(sc.z_start);
        const double rho = u0 * u0 - u1.squaredNorm();
        const double zeta = u1.dot(w1);
        const double factor = (zeta / u0 - w0) / rho;
        out(sc.z_start) = (u0 * w0 - zeta) / rho;
        out.segment(sc.z_start + 1, sc.dim - 1) = factor * u1 + w1 / u0;
    }
}

void IpmSolver::bring_to_cone(const Eigen::VectorXd& r, Eigen::VectorXd& out) const {
    double alpha = -0.99;
    for (int i = 0; i < prob_.n_lp; ++i) {
        if (r(i) <= 0.0 && -r(i) > alpha) alpha = -r(i);
    }
    for (const SocScaling& sc : socs_) {
        const double res =
            r(sc.z_start) - r.segment(sc.z_start + 1, sc.dim - 1).norm();
        if (res <= 0.0 && -res > alpha) alpha = -res;
    }
    alpha += 1.0;
    out = r;
    out.head(prob_.n_lp).array() += alpha;
    for (const SocScaling& sc : socs_) out(sc.z_start) += alpha;
}

void IpmSolver::expand_rhs(const Eigen::VectorXd& bx, const Eigen::VectorXd& by,
                           const Eigen::VectorXd& bz, Eigen::VectorXd& rhs) const {
    rhs.setZero(dim_k_);
    rhs.head(n_) = bx;
    rhs.segment(n_, p_) = by;
    rhs.segment(n_ + p_, prob_.n_lp) = bz.head(prob_.n_lp);
    for (const SocScaling& sc : socs_) {
        rhs.segment(sc.k_start, sc.dim) = bz.segment(sc.z_start, sc.dim);
    }
}

int IpmSolver::solve_kkt(const Eigen::VectorXd& rhs, Eigen::VectorXd& dx, Eigen::VectorXd& dy,
                         Eigen::VectorXd& dz) {
    Eigen::VectorXd sol = ldlt_.solve(rhs);
    const double threshold = (1.0 + rhs.lpNorm<Eigen::Infinity>()) * settings_.refine_stop;

    double prev_err = kInf;
    Eigen::VectorXd correction(dim_k_);
    int k = 0;
    for (; k <= settings_.refine_iters; ++k) {
        // Residual against the unregularized KKT system; the regularized
        // factorization then acts as a preconditioner and the static shift
        // refines away instead of biasing the direction.
        Eigen::VectorXd err = rhs - K_.selfadjointView<Eigen::Upper>() * sol;
        err += settings_.static_reg * reg_sign_.cwiseProduct(sol);
        const double nerr = err.lpNorm<Eigen::Infinity>();
        if (k > 0 && nerr > prev_err) {
            sol -= correction;  // refinement diverged, undo
            break;
        }
        if (nerr < threshold || k == settings_.refine_iters ||
            (k > 0 && prev_err < 6.0 * nerr)) {
            break;
        }
        prev_err = nerr;
        correction = ldlt_.solve(err);
        sol += correction;
    }

    dx = sol.head(n_);
    dy = sol.segment(n_, p_);
    dz.resize(m_);
    dz.head(prob_.n_lp) = sol.segment(n_ + p_, prob_.n_lp);
    for (const SocScaling& sc : socs_) {
        dz.segment(sc.z_start, sc.dim) = sol.segment(sc.k_start, sc.dim);
    }
    return k;
}

double IpmSolver::line_search(const Eigen::VectorXd& lambda, const Eigen::VectorXd& ds,
                              const Eigen::VectorXd& dz, double tau, double dtau, double kap,
                              double dkap) const {
    double alpha = 2.0;
    if (prob_.n_lp > 0) {
        const double rho_min =
            (ds.head(prob_.n_lp).cwiseQuotient(lambda.head(prob_.n_lp))).minCoeff();
        const double sig_min =
            (dz.head(prob_.n_lp).cwiseQuotient(lambda.head(prob_.n_lp))).minCoeff();
        const double worst = std::min(rho_min, sig_min);
        if (worst < 0.0) alpha = std::min(alpha, 1.0 / (-worst));
    }
    if (dtau < 0.0) alpha = std::min(alpha, -tau / dtau);
    if (dkap < 0.0) alpha = std::min(alpha, -kap / dkap);

    for (const SocScaling& sc : socs_) {
        const double lk0 = lambda(sc.z_start);
        const auto lk1 = lambda.segment(sc.z_start + 1, sc.dim - 1);
        const double lknorm2 = lk0 * lk0 - lk1.squaredNorm();
        if (lknorm2 <= 0.0) continue;
        const double lknorm = std::sqrt(lknorm2);
        Eigen::VectorXd lkbar = lambda.segment(sc.z_start, sc.dim) / lknorm;
        const double inv = 1.0 / lknorm;

        const auto dsk1 = ds.segment(sc.z_start + 1, sc.dim - 1);
        const auto dzk1 = dz.segment(sc.z_start + 1, sc.dim - 1);
        const double lds = lkbar(0) * ds(sc.z_start) - lkbar.tail(sc.dim - 1).dot(dsk1);
        const double ldz = lkbar(0) * dz(sc.z_start) - lkbar.tail(sc.dim - 1).dot(dzk1);

        double factor = (lds + ds(sc.z_start)) / (lkbar(0) + 1.0);
        const double rho0 = inv * lds;
        const double rho_norm =
            (inv * (dsk1 - factor * lkbar.tail(sc.dim - 1))).norm() - rho0;

        factor = (ldz + dz(sc.z_start)) / (lkbar(0) + 1.0);
        const double sig0 = inv * ldz;
        const double sig_norm =
            (inv * (dzk1 - factor * lkbar.tail(sc.dim - 1))).norm() - sig0;

        const double step = std::max({0.0, rho_norm, sig_norm});
        if (step > 0.0) alpha = std::min(alpha, 1.0 / step);
    }
    return std::clamp(alpha, 1e-10, 1.0);
}

ConeSolution solve_cone_program(const ConeProblem& problem, const ConeSettings& settings) {
    IpmSolver solver(problem, settings);
    return solver.solve();
}

ConeSolution IpmSolver::solve() {
    ConeSolution result;
    result.x.setZero(n_);
    result.y.setZero(p_);
    result.z.setZero(m_);
    result.s.setZero(m_);

    const Eigen::VectorXd c_orig = prob_.c.cwiseProduct(x_equil_);

    set_identity_scaling();
    ldlt_.factorize(K_);
    if (ldlt_.info() != Eigen::Success) {
        result.status = ConeStatus::NumericalError;
        return result;
    }

    const double resx0 = std::max(1.0, prob_.c.norm());
    const double resy0 = std::max(1.0, prob_.b.norm());
    const double resz0 = std::max(1.0, prob_.h.norm());

    Eigen::VectorXd rhs1(dim_k_), rhs2(dim_k_);
    Eigen::VectorXd dx1(n_), dy1(p_), dz1(m_);
    Eigen::VectorXd dx2(n_), dy2(p_), dz2(m_);

    Eigen::VectorXd x(n_), y(p_), z(m_), s(m_);

    // Initial point: primal from min ||Gx - h|| s.t. Ax = b, dual from
    // min ||z|| s.t. G'z + A'y + c = 0; both shifted strictly into the cone.
    expand_rhs(Eigen::VectorXd::Zero(n_), prob_.b, prob_.h, rhs1);
    solve_kkt(rhs1, dx1, dy1, dz1);
    x = dx1;
    bring_to_cone(-dz1, s);

    expand_rhs(-prob_.c, Eigen::VectorXd::Zero(p_), Eigen::VectorXd::Zero(m_), rhs2);
    solve_kkt(rhs2, dx2, dy2, dz2);
    y = dy2;
    bring_to_cone(dz2, z);

    // From here on rhs1 carries [-c; b; h].
    rhs1.head(n_) = -prob_.c;

    double tau = 1.0;
    double kap = 1.0;
    const double cone_degree = prob_.n_lp + static_cast<double>(socs_.size()) + 1.0;

    Eigen::VectorXd lambda(m_), w_dz(m_), ds_by_w(m_), ds(m_), ds1(m_), ds2(m_);
    Eigen::VectorXd rx(n_), ry(p_), rz(m_);

    Iterate best;
    double pres_prev = kInf;
    double step = 0.0;
    ConeStatus verdict = ConeStatus::IterationLimit;
    bool have_verdict = false;
    bool restored = false;
    double pinfres = kInf, dinfres = kInf;
    double pres = kInf, dres = kInf, gap = kInf, relgap = kInf, mu = kInf;
    double pcost = 0.0, dcost = 0.0;

    int iter = 0;
    for (iter = 0; iter <= settings_.max_iters; ++iter) {
        // Residuals of the homogeneous embedding.
        rx = -(Gt_ * z);
        if (p_ > 0) rx -= At_ * y;
        const double hresx = rx.norm();
        rx -= tau * prob_.c;

        double hresy = 0.0;
        if (p_ > 0) {
            ry = prob_.A * x;
            hresy = ry.norm();
            ry -= tau * prob_.b;
        }

        rz = s + prob_.G * x;
        const double hresz = rz.norm();
        rz -= tau * prob_.h;

        const double cx = prob_.c.dot(x);
        const double by = p_ > 0 ? prob_.b.dot(y) : 0.0;
        const double hz = prob_.h.dot(z);
        const double rt = kap + cx + by + hz;

        gap = s.dot(z);
        mu = (gap + kap * tau) / cone_degree;
        pcost = cx / tau;
        dcost = -(hz + by) / tau;
        if (pcost < 0.0) {
            relgap = gap / (-pcost);
        } else if (dcost > 0.0) {
            relgap = gap / dcost;
        } else {
            relgap = kInf;
        }

        const double nx = x.norm(), ny = y.norm(), nz = z.norm(), ns = s.norm();
        const double nry = p_ > 0 ? ry.norm() / std::max(resy0 + nx, 1.0) : 0.0;
        const double nrz = rz.norm() / std::max(resz0 + nx + ns, 1.0);
        pres = std::max(nry, nrz) / tau;
        dres = rx.norm() / std::max(resx0 + ny + nz, 1.0) / tau;

        pinfres = kInf;
        dinfres = kInf;
        if ((hz + by) / std::max(ny + nz, 1.0) < -settings_.reltol) {
            pinfres = hresx / std::max(ny + nz, 1.0);
        }
        if (cx / std::max(nx, 1.0) < -settings_.reltol) {
            dinfres = std::max(hresy / std::max(nx, 1.0), hresz / std::max(nx + ns, 1.0));
        }

        // Iteration log: one line per iterate (enable with FLEX_IPM_TRACE=1).
        if (std::getenv("FLEX_IPM_TRACE") != nullptr) {
            std::fprintf(stderr,
                         "ipm %3d  pcost % .6e  dcost % .6e  gap %.3e  pres %.3e  dres %.3e  "
                         "k/t %.3e  step %.4f\n",
                         iter, pcost, dcost, gap, pres, dres, kap / tau, step);
        }

        auto converged = [&](double ftol, double atol, double rtol) -> ConeStatus {
            if ((-cx > 0.0 || -by - hz >= -atol) && pres < ftol && dres < ftol &&
                (gap < atol || relgap < rtol)) {
                return ConeStatus::Optimal;
            }
            if (dinfres < ftol && tau < kap) return ConeStatus::DualInfeasible;
            if ((pinfres < ftol && tau < kap) ||
                (tau < ftol && kap < ftol && pinfres < ftol)) {
                return ConeStatus::PrimalInfeasible;
            }
            return ConeStatus::IterationLimit;  // not converged marker
        };

        if (restored) {
            // Came back to the best iterate after a bad direction; grade it
            // at reduced accuracy and stop.
            const ConeStatus reduced = converged(settings_.feastol_reduced,
                                                 settings_.abstol_reduced,
                                                 settings_.reltol_reduced);
            verdict = reduced == ConeStatus::IterationLimit ? ConeStatus::NumericalError
                      : reduced == ConeStatus::Optimal      ? ConeStatus::AlmostOptimal
                                                            : reduced;
            have_verdict = true;
            break;
        }

        // Unreliable direction: back off to the best iterate seen. Residual
        // growth only counts once it rises above the target tolerance;
        // jitter at machine scale is not divergence.
        if (iter > 0 &&
            ((pres > 500.0 * pres_prev && pres > settings_.feastol) || gap < 0.0) &&
            best.valid) {
            x = best.x; y = best.y; z = best.z; s = best.s;
            tau = best.tau; kap = best.kap;
            restored = true;
            --iter;
            continue;
        }
        pres_prev = pres;

        const ConeStatus full = converged(settings_.feastol, settings_.abstol, settings_.reltol);
        if (full != ConeStatus::IterationLimit) {
            verdict = full;
            have_verdict = true;
            break;
        }
        if (iter == settings_.max_iters || (iter > 0 && step < 1e-8)) {
            const ConeStatus reduced = converged(settings_.feastol_reduced,
                                                 settings_.abstol_reduced,
                                                 settings_.reltol_reduced);
            verdict = reduced == ConeStatus::IterationLimit
                          ? ConeStatus::IterationLimit
                          : (reduced == ConeStatus::Optimal ? ConeStatus::AlmostOptimal : reduced);
            have_verdict = true;
            break;
        }
        if (!std::isfinite(pcost)) {
            verdict = ConeStatus::NumericalError;
            have_verdict = true;
            break;
        }

        Iterate cur{x, y, z, s, tau, kap, pres, dres, gap, relgap, mu, true};
        if (cur.better_than(best)) best = std::move(cur);

        // Nesterov-Todd scaling at the current iterate.
        {
            lp_w2_ = s.head(prob_.n_lp).cwiseQuotient(z.head(prob_.n_lp));
            bool ok = (prob_.n_lp == 0) || (s.head(prob_.n_lp).minCoeff() > 0.0 &&
                                            z.head(prob_.n_lp).minCoeff() > 0.0);
            for (SocScaling& sc : socs_) {
                const double sres = s(sc.z_start) * s(sc.z_start) -
                                    s.segment(sc.z_start + 1, sc.dim - 1).squaredNorm();
                const double zres = z(sc.z_start) * z(sc.z_start) -
                                    z.segment(sc.z_start + 1, sc.dim - 1).squaredNorm();
                if (sres <= 0.0 || zres <= 0.0) {
                    ok = false;
                    break;
                }
                const double snorm = std::sqrt(sres);
                const double znorm = std::sqrt(zres);
                Eigen::VectorXd sbar = s.segment(sc.z_start, sc.dim) / snorm;
                Eigen::VectorXd zbar = z.segment(sc.z_start, sc.dim) / znorm;
                sc.eta2 = snorm / znorm;
                double gamma = std::sqrt(0.5 * (1.0 + sbar.dot(zbar)));
                sc.a = (0.5 / gamma) * (sbar(0) + zbar(0));
                sc.q = (0.5 / gamma) * (sbar.tail(sc.dim - 1) - zbar.tail(sc.dim - 1));
                sc.w = sc.q.squaredNorm();
                const double cc = (1.0 + sc.a) + sc.w / (1.0 + sc.a);
                const double dd = 1.0 + 2.0 / (1.0 + sc.a) + sc.w / ((1.0 + sc.a) * (1.0 + sc.a));
                const double d1 = std::max(
                    0.0, 0.5 * (sc.a * sc.a + sc.w * (1.0 - (cc * cc) / (1.0 + sc.w * dd))));
                const double u0sq = sc.a * sc.a + sc.w - d1;
                const double c2u2 = (cc * cc) / u0sq;
                if (c2u2 - dd <= 0.0) {
                    ok = false;
                    break;
                }
                sc.d1 = d1;
                sc.u0 = std::sqrt(u0sq);
                sc.u1 = std::sqrt(c2u2);
                sc.v1 = std::sqrt(c2u2 - dd);
                sc.identity = false;
            }
            if (!ok) {
                // Scaling breakdown near the central path's end: grade the
                // current iterate at reduced accuracy instead of giving up.
                const ConeStatus reduced = converged(settings_.feastol_reduced,
                                                     settings_.abstol_reduced,
                                                     settings_.reltol_reduced);
                verdict = reduced == ConeStatus::IterationLimit ? ConeStatus::NumericalError
                          : reduced == ConeStatus::Optimal      ? ConeStatus::AlmostOptimal
                                                                : reduced;
                have_verdict = true;
                break;
            }
        }
        scale(z, lambda);

        write_kkt_scaling();
        ldlt_.factorize(K_);
        if (ldlt_.info() != Eigen::Success) {
            const ConeStatus reduced = converged(settings_.feastol_reduced,
                                                 settings_.abstol_reduced,
                                                 settings_.reltol_reduced);
            verdict = reduced == ConeStatus::IterationLimit ? ConeStatus::NumericalError
                      : reduced == ConeStatus::Optimal      ? ConeStatus::AlmostOptimal
                                                            : reduced;
            have_verdict = true;
            break;
        }

        // Directions for [-c; b; h], reused by both predictor and corrector.
        solve_kkt(rhs1, dx1, dy1, dz1);
        const double dtau_denom =
            kap / tau - prob_.c.dot(dx1) - (p_ > 0 ? prob_.b.dot(dy1) : 0.0) - prob_.h.dot(dz1);

        // Affine (predictor) direction.
        expand_rhs(rx, -ry, s - rz, rhs2);
        solve_kkt(rhs2, dx2, dy2, dz2);

        const double dtau_aff =
            (rt - kap + prob_.c.dot(dx2) + (p_ > 0 ? prob_.b.dot(dy2) : 0.0) + prob_.h.dot(dz2)) /
            dtau_denom;
        dz2 += dtau_aff * dz1;
        scale(dz2, w_dz);
        ds_by_w = -w_dz - lambda;
        const double dkap_aff = -kap - (kap / tau) * dtau_aff;

        const double step_aff = line_search(lambda, ds_by_w, w_dz, tau, dtau_aff, kap, dkap_aff);
        const double sigma =
            std::clamp((1.0 - step_aff) * (1.0 - step_aff) * (1.0 - step_aff), 1e-4, 0.999);

        // Combined (corrector) direction with Mehrotra second-order term.
        cone_product(lambda, lambda, ds1);
        cone_product(ds_by_w, w_dz, ds2);
        const double sigmamu = sigma * mu;
        ds1 += ds2;
        ds1.head(prob_.n_lp).array() -= sigmamu;
        for (const SocScaling& sc : socs_) ds1(sc.z_start) -= sigmamu;

        cone_divide(lambda, ds1, ds_by_w);  // ds_by_w = lambda \ ds1
        scale(ds_by_w, ds1);                // ds1 = W (lambda \ ds1)

        const double one_minus_sigma = 1.0 - sigma;
        expand_rhs(one_minus_sigma * rx, -one_minus_sigma * ry,
                   -one_minus_sigma * rz + ds1, rhs2);
        solve_kkt(rhs2, dx2, dy2, dz2);

        const double bkap = kap * tau + dkap_aff * dtau_aff - sigmamu;
        const double dtau = (one_minus_sigma * rt - bkap / tau + prob_.c.dot(dx2) +
                             (p_ > 0 ? prob_.b.dot(dy2) : 0.0) + prob_.h.dot(dz2)) /
                            dtau_denom;
        dx2 += dtau * dx1;
        dy2 += dtau * dy1;
        dz2 += dtau * dz1;

        scale(dz2, w_dz);
        ds_by_w = -(ds_by_w + w_dz);
        const double dkap = -(bkap + kap * dtau) / tau;

        step = settings_.step_scale *
               line_search(lambda, ds_by_w, w_dz, tau, dtau, kap, dkap);
        scale(ds_by_w, ds);  // ds = W ds_by_w (NT scaling is symmetric)

        x += step * dx2;
        y += step * dy2;
        z += step * dz2;
        s += step * ds;
        kap += step * dkap;
        tau += step * dtau;
    }

    if (!have_verdict) verdict = ConeStatus::IterationLimit;

    result.status = verdict;
    result.iterations = std::min(iter, settings_.max_iters);
    result.primal_residual = pres;
    result.dual_residual = dres;
    result.duality_gap = gap;

    if (verdict == ConeStatus::PrimalInfeasible) {
        // Farkas certificate: b'y + h'z = -1, A'y + G'z ~ 0, z in K*.
        const double by = p_ > 0 ? prob_.b.dot(y) : 0.0;
        const double scale_cert = -(by + prob_.h.dot(z));
        const double inv = scale_cert > 0.0 ? 1.0 / scale_cert : 1.0;
        result.y = (y * inv).cwiseQuotient(a_equil_);
        result.z = (z * inv).cwiseQuotient(g_equil_);
        return result;
    }
    if (verdict == ConeStatus::DualInfeasible) {
        const double cx = prob_.c.dot(x);
        const double inv = cx < 0.0 ? 1.0 / (-cx) : 1.0;
        result.x = (x * inv).cwiseQuotient(x_equil_);
        result.s = (s * inv).cwiseProduct(g_equil_);
        return result;
    }

    const double t = std::max(tau, 1e-300);
    result.x = (x / t).cwiseQuotient(x_equil_);
    result.y = (y / t).cwiseQuotient(a_equil_);
    result.z = (z / t).cwiseQuotient(g_equil_);
    result.s = (s / t).cwiseProduct(g_equil_);
    result.objective = c_orig.dot(result.x);
    return result;
}

}  // namespace flex::conic
