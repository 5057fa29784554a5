#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "langevin/experiments.hpp"

using namespace langevin;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("dataset generation: uniform bounds and determinism") {
    Json ds;
    ds["source"] = "uniform";
    ds["n"] = 50;
    ds["seed"] = 4;
    ds["params"]["low"] = -1.0;
    ds["params"]["high"] = 1.0;
    const auto a = dataset_from_config(ds);
    const auto b = dataset_from_config(ds);
    REQUIRE(a.size() == 50);
    for (std::size_t i = 0; i < a.size(); ++i) {
        REQUIRE(a[i][0] >= -1.0);
        REQUIRE(a[i][0] <= 1.0);
        REQUIRE(a[i][0] == b[i][0]);
    }
}

TEST_CASE("dataset generation: logistic-2d samples respect the feature ball") {
    PopulationLaw law{"logistic_2d", Json::object()};
    const auto d = law.make(64, 9, 0);
    for (const Vec& z : d.samples()) {
        REQUIRE(z.size() == 3);
        REQUIRE(std::hypot(z[0], z[1]) <= 1.0 + 1e-12);
        REQUIRE((z[2] == 1.0 || z[2] == -1.0));
    }
}

TEST_CASE("dataset from CSV round-trips") {
    const auto dir = std::filesystem::temp_directory_path() / "langevin_test_csv";
    std::filesystem::create_directories(dir);
    const auto path = (dir / "data.csv").string();
    {
        std::ofstream out(path);
        out << "z\n0.25\n-0.5\n1.0\n";
    }
    Json ds;
    ds["source"] = "csv";
    ds["path"] = path;
    const auto d = dataset_from_config(ds);
    REQUIRE(d.size() == 3);
    REQUIRE(d[0][0] == 0.25);
    REQUIRE(d[2][0] == 1.0);
}

TEST_CASE("verdict logic separates statistics from violations") {
    REQUIRE(verdict_of(0.9, 1.1, 1.2) == Verdict::Holds);
    REQUIRE(verdict_of(0.9, 1.3, 1.2) == Verdict::Inconclusive);
    REQUIRE(verdict_of(1.25, 1.3, 1.2) == Verdict::Violated);
}

TEST_CASE("oracle and sgld config parsing") {
    Json j;
    j["kind"] = "minibatch";
    j["batch"] = 8;
    const auto spec = oracle_from_config(j);
    REQUIRE(spec.kind == OracleSpec::Kind::Minibatch);
    REQUIRE(spec.delta == Catch::Approx(0.125));
    Json s;
    s["eta"] = 0.5;
    s["beta"] = 3.0;
    s["steps"] = 7;
    const auto sc = sgld_from_config(s);
    REQUIRE(sc.eta == 0.5);
    REQUIRE(sc.beta == 3.0);
    REQUIRE(sc.steps == 7);
}

TEST_CASE("suboptimality experiment is deterministic byte-for-byte") {
    Json cfg;
    cfg["experiment"] = "suboptimality";
    cfg["objective"]["name"] = "double_well";
    cfg["dataset"]["source"] = "uniform";
    cfg["dataset"]["n"] = 10;
    cfg["dataset"]["seed"] = 5;
    cfg["sweep"]["beta"] = {2.0, 6.0};
    cfg["grid"]["resolution"] = 512;
    cfg["grid"]["check_resolution_drift"] = 0;

    const auto dir = std::filesystem::temp_directory_path() / "langevin_det";
    std::filesystem::remove_all(dir);
    const auto c = ExperimentConfig::parse(cfg);
    const auto r1 = exp_suboptimality(c);
    r1.write((dir / "a").string());
    const auto r2 = exp_suboptimality(c);
    r2.write((dir / "b").string());
    // runtime differs between runs; rows and verdicts must not
    REQUIRE(r1.rows.dump() == r2.rows.dump());
    REQUIRE(slurp((dir / "a" / "rows.csv").string()) ==
            slurp((dir / "b" / "rows.csv").string()));
    REQUIRE(r1.holds == r2.holds);
    REQUIRE(r1.violated == 0);

    // config hash moves when a parameter moves
    Json cfg2 = cfg;
    cfg2["dataset"]["seed"] = 6;
    REQUIRE(detail::config_hash(cfg) != detail::config_hash(cfg2));
}

TEST_CASE("small discretization experiment produces holding verdicts") {
    Json cfg;
    cfg["experiment"] = "discretization";
    cfg["objective"]["name"] = "double_well";
    cfg["dataset"]["source"] = "uniform";
    cfg["dataset"]["n"] = 16;
    cfg["dataset"]["seed"] = 2;
    cfg["sgld"]["beta"] = 4.0;
    cfg["sgld"]["replicas"] = 500;
    cfg["sgld"]["seed"] = 31;
    cfg["sweep"]["eta"] = {1e-2};
    cfg["t_end"] = 1.0;
    cfg["diffusion"]["eta_ref_divisor"] = 10;
    cfg["bootstrap"]["resamples"] = 50;
    const auto rep = exp_discretization(ExperimentConfig::parse(cfg));
    REQUIRE(rep.rows.size() == 1);
    REQUIRE(rep.violated == 0);
    REQUIRE(rep.rows[0]["bound"].get<double>() > rep.rows[0]["w2_measured"].get<double>());
}

TEST_CASE("csv writer emits stable numeric formats") {
    const auto dir = std::filesystem::temp_directory_path() / "langevin_csv";
    std::filesystem::create_directories(dir);
    const auto path = (dir / "t.csv").string();
    {
        CsvWriter w(path, {"a", "b"});
        w.row({format_cell(1.0 / 3.0), format_cell(2.0)});
    }
    REQUIRE(slurp(path) == "a,b\n0.33333333333333331,2\n");
}

TEST_CASE("bound report carries formulas and provenance") {
    BoundsInput in;
    in.consts = {0.0, 1.0, 1.0, 1.0, 1.0};
    in.d = 1;
    in.n = 100;
    in.beta = 2.0;
    in.delta = 0.125;
    in.kappa0 = 1.0;
    in.lambda_star = 1.0;
    in.lambda_provenance = LambdaProvenance::Numeric;
    const auto rep = bound_report(in, 100.0, 0.01, 0.01);
    REQUIRE(rep["C0"]["value"].get<double>() == Catch::Approx(9.0));
    REQUIRE(rep["C1"]["value"].get<double>() == Catch::Approx(114.0));
    REQUIRE(rep["inputs"]["lambda_provenance"] == "numeric");
    REQUIRE(rep.contains("c_LS"));
    REQUIRE(rep.contains("excess_risk_ub"));
    REQUIRE(rep["C0"].contains("formula"));
    // serializes losslessly
    const auto round = Json::parse(rep.dump());
    REQUIRE(round["C0"]["value"].get<double>() == rep["C0"]["value"].get<double>());
}

TEST_CASE("unknown experiment is rejected") {
    Json cfg;
    cfg["experiment"] = "nope";
    REQUIRE_THROWS_AS(run_experiment(ExperimentConfig::parse(cfg)), std::invalid_argument);
}
