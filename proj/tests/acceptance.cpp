// Acceptance suite: one pass/fail line per criterion, exit 0 iff all pass.
// Each criterion pins its tolerances in code; runtimes are asserted against
// the stated budgets.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <vector>

#include "langevin/experiments.hpp"

using namespace langevin;

namespace {

struct Criterion {
    int id;
    std::string name;
    double budget_seconds;
    std::function<bool(std::string&)> run;
};

bool check(bool ok, std::string& log, const std::string& what) {
    if (!ok) log += "    FAILED: " + what + "\n";
    return ok;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---------------------------------------------------------------------------
// 1. Gaussian ground truth

bool c1_gaussian(std::string& log) {
    bool ok = true;
    const auto obj = make_quadratic_well(1);
    const auto data = dataset_from_scalars({0.0});
    GridConfig gc;
    gc.resolution = 4096;
    gc.box = {{{-10.0, 10.0}, {0, 0}}};
    const auto g = build_gibbs(obj, data, 1.0, gc);
    ok &= check(std::abs(g.log_partition - 0.5 * std::log(2 * M_PI)) < 1e-6, log,
                "log partition != log(2 pi)/2 within 1e-6");
    const auto st = gibbs_stats(g);
    ok &= check(std::abs(st.differential_entropy - 0.5 * std::log(2 * M_PI * M_E)) < 1e-5,
                log, "entropy != log(2 pi e)/2 within 1e-5");
    GridConfig gap_gc;
    gap_gc.resolution = 2048;
    const auto gap = spectral_gap_numeric(obj, data, 1.0, gap_gc);
    ok &= check(std::abs(gap.value - 1.0) <= 0.02, log, "spectral gap != 1 within 2%");

    const double beta = 10.0;
    GridConfig sub_gc;
    sub_gc.resolution = 4096;
    const auto gs = build_gibbs(obj, data, beta, sub_gc);
    const auto sub = gibbs_suboptimality(gs, obj, data, beta);
    ok &= check(std::abs(sub.measured - 1.0 / (2.0 * beta)) < 1e-5, log,
                "suboptimality != 1/(2 beta)");
    ok &= check(std::abs(sub.bound - 1.0 / (2.0 * beta)) < 1e-12, log,
                "bound not saturated at b=0");
    return ok;
}

// ---------------------------------------------------------------------------
// 2. Oracle contract

bool c2_oracle(std::string& log) {
    bool ok = true;
    const auto obj = make_double_well();
    PopulationLaw law{"uniform", Json::object()};
    const auto data = law.make(20, 3, 0);
    const long draws = 100000;
    for (double wx : {0.0, 0.7}) {
        Vec w(1);
        w[0] = wx;
        const Vec gf = empirical_gradient(obj, data, w);
        for (int l : {1, 2, 4, 8}) {
            const auto spec = OracleSpec::minibatch(l);
            RngStream rs(41 + l, 0, RngPurpose::kOracle);
            double sum = 0.0, sq = 0.0;
            for (long i = 0; i < draws; ++i) {
                const Vec g = sample_gradient(spec, obj, data, w, rs, i);
                sum += g[0];
                sq += (g - gf).squaredNorm();
            }
            const double mean = sum / draws;
            const double noise = sq / draws;
            const double exact = minibatch_noise_exact(obj, data, w, l);
            std::ostringstream tag;
            tag << "l=" << l << " w=" << wx;
            ok &= check(std::abs(noise - exact) <= 0.15 * exact, log,
                        "noise vs exact law beyond 15% at " + tag.str());
            const double se = std::sqrt(noise / draws);
            ok &= check(std::abs(mean - gf[0]) <= 4.0 * se, log,
                        "bias beyond 4 standard errors at " + tag.str());
        }
    }
    return ok;
}

// ---------------------------------------------------------------------------
// 3. uniform L2 and exponential-integrability invariants on the zoo

bool c3_moments(std::string& log) {
    bool ok = true;
    struct Case {
        Objective obj;
        Dataset data;
    };
    PopulationLaw uni{"uniform", Json::object()};
    PopulationLaw logit{"logistic_2d", Json::object()};
    std::vector<Case> zoo;
    zoo.push_back({make_quadratic_well(1), dataset_from_scalars({0.0})});
    zoo.push_back({make_quadratic_regression(1.0), uni.make(16, 5, 1)});
    zoo.push_back({make_double_well(), uni.make(16, 5, 2)});
    zoo.push_back({make_logistic_2d(), logit.make(16, 5, 3)});

    for (const auto& c : zoo) {
        for (double beta : {2.0, 4.0}) {
            const auto k0 = kappa0_gaussian(0.25, c.obj.dim);
            for (double eta : {1e-2, 1e-3}) {
                SgldConfig sc;
                sc.eta = eta;
                sc.beta = beta;
                sc.steps = std::lround(2.0 / eta);
                sc.replicas = 3000;
                sc.seed = 17;
                sc.record_stride = sc.steps / 4;
                const auto ens = run_sgld(c.obj, c.data, OracleSpec::full(), sc);
                const auto rep = check_sgld_moment_bound(ens, c.obj.constants, k0.kappa0, beta);
                std::ostringstream tag;
                tag << c.obj.name << " beta=" << beta << " eta=" << eta;
                ok &= check(rep.passed, log, "SGLD uniform L2 bound at " + tag.str());
            }
            DiffusionConfig dc;
            dc.eta_ref = 2e-3;
            dc.t_end = 1.0;
            dc.beta = beta;
            dc.replicas = 3000;
            dc.seed = 29;
            dc.record_times = {0.25, 0.5, 1.0};
            const auto ens = run_diffusion(c.obj, c.data, dc);
            const auto rep = check_moment_bounds(ens, c.obj.constants, k0.kappa0, beta);
            std::ostringstream tag;
            tag << c.obj.name << " beta=" << beta;
            ok &= check(rep.passed, log,
                        "diffusion moment/exponential-integrability bounds at " + tag.str());
        }
    }
    return ok;
}

// ---------------------------------------------------------------------------
// 4. Discretization error of SGLD against its fine diffusion

bool c4_discretization(std::string& log) {
    Json cfg;
    cfg["experiment"] = "discretization";
    cfg["objective"]["name"] = "double_well";
    cfg["dataset"]["source"] = "uniform";
    cfg["dataset"]["n"] = 16;
    cfg["dataset"]["seed"] = 7;
    cfg["sgld"]["beta"] = 4.0;
    cfg["sgld"]["replicas"] = 10000;
    cfg["sgld"]["seed"] = 42;
    cfg["sweep"]["eta"] = {1e-2, 3e-3, 1e-3};
    cfg["t_end"] = 2.0;
    cfg["diffusion"]["eta_ref_divisor"] = 100;
    cfg["diffusion"]["eta_ref_min"] = 2e-5;
    cfg["bootstrap"]["resamples"] = 200;
    cfg["out_dir"] = "acceptance_out/discretization";
    const auto rep = exp_discretization(ExperimentConfig::parse(cfg));
    rep.write("acceptance_out/discretization");
    bool ok = true;
    ok &= check(rep.violated == 0 && rep.inconclusive == 0, log,
                "some W2 <= bound verdicts not 'holds'");
    ok &= check(rep.rows.size() == 3, log, "expected three sweep rows");
    ok &= check(rep.meta["eta_sweeps"][0]["nonincreasing_in_eta_within_pads"].get<bool>(),
                log, "measured W2 not nonincreasing in eta within pads");
    return ok;
}

// ---------------------------------------------------------------------------
// 5. Convergence to the Gibbs measure

bool c5_convergence(std::string& log) {
    Json cfg;
    cfg["experiment"] = "convergence";
    cfg["objective"]["name"] = "quadratic_regression";
    cfg["dataset"]["source"] = "fixed";
    cfg["dataset"]["values"] = {1.0};
    cfg["sgld"]["eta"] = 1e-3;
    cfg["sgld"]["beta"] = 4.0;
    cfg["sgld"]["init_sigma2"] = 0.25;
    cfg["sgld"]["replicas"] = 10000;
    cfg["sgld"]["seed"] = 12;
    cfg["diffusion"]["replicas"] = 100000;
    cfg["diffusion"]["eta_ref"] = 1e-3;
    cfg["grid"]["resolution"] = 2048;
    cfg["grid"]["hist_resolution"] = 129;
    cfg["out_dir"] = "acceptance_out/convergence";
    const auto rep = exp_convergence(ExperimentConfig::parse(cfg));
    rep.write("acceptance_out/convergence");
    bool ok = true;
    const double fitted = rep.meta["kl_fitted_rate"].get<double>();
    const double target = rep.meta["kl_target_rate_2lambda_over_beta"].get<double>();
    std::ostringstream r;
    r << "fitted KL rate " << fitted << " vs 2 lambda/beta = " << target;
    ok &= check(std::abs(fitted - target) <= 0.15 * target, log, r.str() + " beyond 15%");
    ok &= check(rep.violated == 0, log, "a W2-to-Gibbs bound row was violated");
    int w2_rows = 0;
    for (const auto& row : rep.rows)
        if (row.contains("k_eta")) ++w2_rows;
    ok &= check(w2_rows == 3, log, "expected three W2 checkpoints");
    return ok;
}

// ---------------------------------------------------------------------------
// 6. Stability of the Gibbs algorithm

bool c6_stability(std::string& log) {
    Json cfg;
    cfg["experiment"] = "stability";
    cfg["objective"]["name"] = "quadratic_regression";
    cfg["dataset"]["source"] = "uniform";
    cfg["dataset"]["seed"] = 4;
    cfg["sgld"]["beta"] = 4.0;
    cfg["sweep"]["n"] = {10, 30, 100};
    cfg["perturbations"] = 20;
    cfg["grid"]["resolution"] = 1024;
    cfg["out_dir"] = "acceptance_out/stability";
    const auto rep = exp_stability(ExperimentConfig::parse(cfg));
    rep.write("acceptance_out/stability");
    bool ok = true;
    ok &= check(rep.violated == 0, log, "a stability bound was violated");
    const double slope = rep.meta["w2_n_scaling_slope"].get<double>();
    std::ostringstream s;
    s << "n-scaling slope " << slope << " outside -1 +- 0.2";
    ok &= check(std::abs(slope + 1.0) <= 0.2, log, s.str());
    for (const auto& row : rep.rows)
        if (row.contains("loss_gap_holds"))
            ok &= check(row["loss_gap_holds"].get<bool>(), log,
                        "loss-gap sup above its continuity / uniform-stability bounds");
    return ok;
}

// ---------------------------------------------------------------------------
// 7. Soundness chain across the zoo

bool c7_soundness(std::string& log) {
    bool ok = true;
    struct Case {
        Objective obj;
        Dataset data;
        int grid_res;
        int gap_res;
    };
    PopulationLaw uni{"uniform", Json::object()};
    PopulationLaw logit{"logistic_2d", Json::object()};
    std::vector<Case> zoo;
    zoo.push_back({make_quadratic_well(1), dataset_from_scalars({0.0}), 2048, 2048});
    zoo.push_back({make_quadratic_regression(1.0), uni.make(16, 5, 1), 2048, 2048});
    zoo.push_back({make_double_well(), uni.make(16, 5, 2), 2048, 2048});
    zoo.push_back({make_logistic_2d(), logit.make(16, 5, 3), 161, 96});

    for (const auto& c : zoo) {
        for (double beta : {1.0, 2.0, 4.0}) {
            GridConfig gc;
            gc.resolution = c.grid_res;
            gc.check_resolution_drift = false;
            const auto pi = build_gibbs(c.obj, c.data, beta, gc);
            GridConfig gapc;
            gapc.resolution = c.gap_res;
            const auto lam = spectral_gap_numeric(c.obj, c.data, beta, gapc);

            BoundsInput in;
            in.consts = c.obj.constants;
            in.d = c.obj.dim;
            in.beta = beta;
            const auto k0 = kappa0_gaussian(0.25, c.obj.dim);
            in.kappa0 = k0.kappa0;
            in.log_p0_inf = k0.log_p0_inf;
            in.lambda_star = lam.value;
            in.lambda_provenance = LambdaProvenance::Numeric;

            std::ostringstream tag;
            tag << c.obj.name << " beta=" << beta;
            ok &= check(lam.converged, log, "gap not resolution-converged at " + tag.str());
            ok &= check(spectral_gap_lower_bound(in).lambda_lb <= lam.value, log,
                        "lambda_lb above numeric gap at " + tag.str());
            const auto mu0 = gaussian_on_grid(pi, 0.25, Vec::Zero(c.obj.dim));
            ok &= check(kl_on_grid(mu0, pi).kl <= relent_init_bound(in), log,
                        "KL(mu0||pi) above the initial relative-entropy bound at " + tag.str());
            const auto mi = minimize_empirical_risk(c.obj, c.data,
                                                    std::max(3.0, pi.box[0].second));
            ok &= check(partition_lower_bound(c.obj, c.data, beta, mi) <=
                            pi.log_partition + 1e-9,
                        log, "Laplace bound above quadrature log-partition at " + tag.str());
        }
    }
    return ok;
}

// ---------------------------------------------------------------------------
// 8. End-to-end excess-risk structure

bool c8_excess_risk(std::string& log) {
    Json cfg;
    cfg["experiment"] = "excess-risk";
    cfg["objective"]["name"] = "double_well";
    cfg["dataset"]["n"] = 100;
    cfg["dataset"]["seed"] = 2;
    cfg["population"]["law"] = "uniform";
    cfg["population"]["params"]["low"] = -1.0;
    cfg["population"]["params"]["high"] = 1.0;
    cfg["population"]["dataset_draws"] = 4;
    cfg["population"]["test_samples"] = 10000;
    cfg["population"]["risk_replicas"] = 2000;
    cfg["sgld"]["eta"] = 1e-3;
    cfg["sgld"]["beta"] = 4.0;
    cfg["sgld"]["steps"] = 2000;
    cfg["sgld"]["replicas"] = 4000;
    cfg["sgld"]["seed"] = 19;
    cfg["sweep"]["batch"] = {0, 8};
    cfg["epsilon"] = 0.01;
    cfg["grid"]["resolution"] = 2048;
    cfg["out_dir"] = "acceptance_out/excess_risk";
    const auto rep = exp_excess_risk(ExperimentConfig::parse(cfg));
    rep.write("acceptance_out/excess_risk");
    bool ok = true;
    ok &= check(rep.violated == 0, log, "an excess-risk bound row was violated");
    for (const auto& row : rep.rows) {
        if (!row.contains("total_measured")) continue;
        ok &= check(row["verdict"] == "holds", log, "total excess risk verdict not 'holds'");
        // decomposition identity: the three measured terms sum to the total
        ok &= check(std::abs(row["decomposition_residual"].get<double>()) < 1e-9, log,
                    "the decomposition does not sum to the measured total");
        // sign structure: the Gibbs suboptimality term is nonnegative up to noise
        ok &= check(row["t3_gibbs_suboptimality"].get<double>() >
                        -3.0 * row["t3_se"].get<double>(),
                    log, "t3 negative beyond noise");
    }
    return ok;
}

// ---------------------------------------------------------------------------
// 9. Determinism of reports

bool c9_determinism(std::string& log) {
    Json cfg;
    cfg["experiment"] = "suboptimality";
    cfg["objective"]["name"] = "double_well";
    cfg["dataset"]["source"] = "uniform";
    cfg["dataset"]["n"] = 20;
    cfg["dataset"]["seed"] = 11;
    cfg["sweep"]["beta"] = {2.0, 10.0};
    cfg["grid"]["resolution"] = 1024;
    cfg["grid"]["check_resolution_drift"] = 0;
    const auto c = ExperimentConfig::parse(cfg);
    const auto r1 = exp_suboptimality(c);
    const auto r2 = exp_suboptimality(c);
    r1.write("acceptance_out/det_a");
    r2.write("acceptance_out/det_b");
    bool ok = true;
    ok &= check(slurp("acceptance_out/det_a/rows.csv") ==
                    slurp("acceptance_out/det_b/rows.csv"),
                log, "rows.csv differs between identical runs");
    ok &= check(r1.rows.dump() == r2.rows.dump(), log, "report rows differ");

    // a second stochastic surface: coupled SGLD/diffusion ensembles
    const auto obj = make_double_well();
    const auto data = dataset_from_scalars({0.1, -0.6});
    SgldConfig sc;
    sc.eta = 5e-3;
    sc.beta = 4.0;
    sc.steps = 100;
    sc.replicas = 200;
    sc.seed = 77;
    const auto p1 = run_coupled_pair(obj, data, OracleSpec::minibatch(2), sc, 10);
    const auto p2 = run_coupled_pair(obj, data, OracleSpec::minibatch(2), sc, 10);
    ok &= check((p1.sgld.X - p2.sgld.X).cwiseAbs().maxCoeff() == 0.0 &&
                    (p1.diffusion.X - p2.diffusion.X).cwiseAbs().maxCoeff() == 0.0,
                log, "coupled ensembles differ between identical runs");
    return ok;
}

// ---------------------------------------------------------------------------
// 10. Exact assignment vs exhaustive permutations

bool c10_transport(std::string& log) {
    bool ok = true;
    RngStream rs(101, 0, RngPurpose::kProbe);
    int step = 0;
    for (int n = 1; n <= 7; ++n) {
        for (int rep = 0; rep < 40; ++rep) {
            Mat A(n, 2), B(n, 2);
            for (int i = 0; i < n; ++i)
                for (int c = 0; c < 2; ++c) {
                    A(i, c) = 4.0 * rs.uniform(step++, 0) - 2.0;
                    B(i, c) = 4.0 * rs.uniform(step++, 0) - 2.0;
                }
            const double solver = w2_empirical(EmpiricalMeasure(A), EmpiricalMeasure(B)).w2;
            std::vector<int> perm(n);
            std::iota(perm.begin(), perm.end(), 0);
            double best = std::numeric_limits<double>::infinity();
            do {
                double s = 0;
                for (int i = 0; i < n; ++i) s += (A.row(i) - B.row(perm[i])).squaredNorm();
                best = std::min(best, s);
            } while (std::next_permutation(perm.begin(), perm.end()));
            if (std::abs(solver - std::sqrt(best / n)) > 1e-10 * std::max(1.0, solver)) {
                std::ostringstream t;
                t << "mismatch at n=" << n << " rep=" << rep;
                ok &= check(false, log, t.str());
            }
        }
    }
    return ok;
}

} // namespace

int main() {
    std::filesystem::create_directories("acceptance_out");
    std::vector<Criterion> criteria{
        {1, "Gaussian ground truth (partition, entropy, gap, suboptimality)", 10.0,
         c1_gaussian},
        {2, "oracle contract (unbiasedness, 1/l variance scaling)", 30.0, c2_oracle},
        {3, "uniform L2 and exponential-integrability bounds on the zoo", 300.0, c3_moments},
        {4, "discretization: W2(SGLD, diffusion) below the assembled bound", 600.0,
         c4_discretization},
        {5, "convergence to Gibbs: KL rate and W2 relaxation bound", 600.0, c5_convergence},
        {6, "stability: exact W2(pi_z, pi_z') below (2 c_LS beta/n) sqrt(...)", 300.0,
         c6_stability},
        {7, "soundness chain: lambda_lb, relative entropy, Laplace bound", 300.0,
         c7_soundness},
        {8, "excess-risk decomposition below the assembled bound", 1800.0, c8_excess_risk},
        {9, "determinism: byte-identical reports under fixed seeds", 120.0, c9_determinism},
        {10, "assignment W2 equals exhaustive permutation minimum (n <= 7)", 10.0,
         c10_transport},
    };

    int failures = 0;
    for (auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        std::string log;
        bool ok = false;
        try {
            ok = c.run(log);
        } catch (const std::exception& e) {
            log += std::string("    EXCEPTION: ") + e.what() + "\n";
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (secs > c.budget_seconds) {
            ok = false;
            log += "    over budget: " + std::to_string(secs) + " s > " +
                   std::to_string(c.budget_seconds) + " s\n";
        }
        std::printf("[%s] criterion %2d (%7.2f s): %s\n", ok ? "PASS" : "FAIL", c.id, secs,
                    c.name.c_str());
        if (!log.empty()) std::fputs(log.c_str(), stdout);
        if (!ok) ++failures;
    }
    if (failures) std::printf("%d of %zu criteria failed\n", failures, criteria.size());
    else std::printf("all %zu criteria passed\n", criteria.size());
    return failures == 0 ? 0 : 1;
}
